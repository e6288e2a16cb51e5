//! Anisotropic one-sided line-segment lilypond model in the plane.
//!
//! Every germ grows a segment at unit speed along its direction mark. A
//! growing segment stops the instant its tip reaches a point already covered
//! by another segment; the segment being hit keeps growing.

mod chains;
mod cycle;
mod device;
mod events;
mod oracle;
mod solve;

pub use chains::{
    build_alternating_chain, chain_bound, event_a6, find_chains, intcomp, intcomp_quadrature, is_descending_chain,
    DescendingChain, CHAIN_CAP,
};
pub use cycle::{cycle_order, is_cycle, make_cycle, FourCycle, UNIT_TEMPLATE};
pub use device::{
    boundary_in_star, boundary_in_tip, boundary_out, check_us, compare_restricted, device_sites, gen_device,
    is_device_shaped, separate_greedy, BoundarySet, Device, DeviceOptions, DevicePolicy, DeviceSite, RestrictedReport,
    SiteKind, UsReport,
};
pub use events::{a7_sites, event_a5, event_a7, event_a8, event_as, A5Geometry};
pub use oracle::{oracle_solve, verify_report, verify_solution, VerifyReport, ORACLE_CAP};
pub use solve::solve;

use crate::error::{invalid, Result};
use crate::geom::{BoxRegion, Dir, MarkedConfiguration, Position};
use crate::walks::WalkGraph;

pub type Pt = [f64; 2];

/// Bases and directions of a configuration, index-aligned with its points.
pub(crate) struct Germs {
    pub base: Vec<Pt>,
    pub dir: Vec<Dir>,
}

pub(crate) fn germs(phi: &MarkedConfiguration) -> Result<Germs> {
    if phi.dim() != 2 {
        return Err(invalid!("the lilypond model lives in the plane, got dimension {}", phi.dim()));
    }
    let mut base = Vec::with_capacity(phi.len());
    let mut dir = Vec::with_capacity(phi.len());
    for p in phi.points() {
        let d = p.mark.direction().ok_or_else(|| invalid!("point {} has no direction mark", p.id))?;
        base.push(p.xy());
        dir.push(d);
    }
    Ok(Germs { base, dir })
}

/// Times `(t, u)` at which `x` and `y` reach the crossing of their rays,
/// when both are positive. Parallel rays never cross.
#[inline]
pub(crate) fn crossing(bx: Pt, dx: Dir, by: Pt, dy: Dir) -> Option<(f64, f64)> {
    let a = dx.axis();
    if dy.axis() == a {
        return None;
    }
    let b = 1 - a;
    let t = dx.sign() * (by[a] - bx[a]);
    let u = dy.sign() * (bx[b] - by[b]);
    (t > 0.0 && u > 0.0).then_some((t, u))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LilypondSolution {
    /// Growth length; `INFINITY` for germs never stopped inside the sample.
    pub f: Vec<f64>,
    /// Index of the stopping neighbour.
    pub stopper: Vec<Option<usize>>,
    pub tip: Vec<Option<Pt>>,
}

impl LilypondSolution {
    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    pub fn is_finite(&self, i: usize) -> bool {
        self.f[i].is_finite()
    }

    pub fn stopper_id(&self, phi: &MarkedConfiguration, i: usize) -> Option<u64> {
        self.stopper[i].map(|j| phi.point(j).id)
    }
}

/// The segment `[base, base + length * dir]`; `length` may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub base: Pt,
    pub dir: Dir,
    pub length: f64,
}

impl Segment {
    pub fn of(phi: &MarkedConfiguration, sol: &LilypondSolution, i: usize) -> Segment {
        let p = phi.point(i);
        Segment { base: p.xy(), dir: p.mark.direction().expect("lilypond germ"), length: sol.f[i] }
    }

    /// Along-axis extent `[lo, hi]` of the closed segment.
    fn extent(&self) -> (f64, f64) {
        let a = self.dir.axis();
        let end = self.base[a] + self.dir.sign() * self.length;
        if self.dir.sign() > 0.0 {
            (self.base[a], end)
        } else {
            (end, self.base[a])
        }
    }

    /// The closed segment meets the half-open box.
    pub fn meets_box(&self, b: &BoxRegion) -> bool {
        let a = self.dir.axis();
        let l = 1 - a;
        let lat = self.base[l];
        if !(lat >= b.lo(l) && lat < b.hi(l)) {
            return false;
        }
        let (lo, hi) = self.extent();
        hi >= b.lo(a) && lo < b.hi(a)
    }

    /// First point of the closed segment on the boundary of `b`, for a base
    /// outside `b` whose segment meets it.
    pub fn entry_point(&self, b: &BoxRegion) -> Pt {
        let a = self.dir.axis();
        let mut p = self.base;
        p[a] = if self.dir.sign() > 0.0 { b.lo(a) } else { b.hi(a) };
        p
    }
}

/// Walk graph with `h_c` = stopping neighbour and `h_g` = tip; germs with
/// infinite growth are censored.
pub fn build_lily_graph(phi: &MarkedConfiguration, sol: &LilypondSolution) -> Result<WalkGraph> {
    if sol.len() != phi.len() {
        return Err(invalid!("solution has {} entries for {} points", sol.len(), phi.len()));
    }
    let geo = sol.tip.iter().map(|t| t.map(|p| Position::xy(p[0], p[1]))).collect();
    WalkGraph::new(phi.ids(), sol.stopper.clone(), geo)
}

/// Rigid motion of the plane by `turns` counter-clockwise quarter turns
/// about the origin.
pub(crate) fn rotate_pt(p: Pt, turns: u8) -> Pt {
    let mut q = p;
    for _ in 0..turns % 4 {
        q = [-q[1], q[0]];
    }
    q
}

pub(crate) fn rotate_dir(d: Dir, turns: u8) -> Dir {
    let mut e = d;
    for _ in 0..turns % 4 {
        e = e.rotate_ccw();
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossing_times() {
        let (t, u) = crossing([0.0, 0.0], Dir::PosE1, [1.0, -0.5], Dir::PosE2).unwrap();
        assert_eq!((t, u), (1.0, 0.5));
        assert!(crossing([0.0, 0.0], Dir::PosE1, [1.0, -0.5], Dir::NegE2).is_none());
        assert!(crossing([0.0, 0.0], Dir::PosE1, [-1.0, -0.5], Dir::PosE2).is_none());
        assert!(crossing([0.0, 0.0], Dir::PosE1, [1.0, -0.5], Dir::NegE1).is_none());
    }

    #[test]
    fn rotation_matches_direction_rotation() {
        for d in Dir::ALL {
            for turns in 0..4u8 {
                let v = rotate_pt(d.vector(), turns);
                assert_eq!(v, rotate_dir(d, turns).vector());
            }
        }
    }

    #[test]
    fn segment_box_meeting() {
        let b = BoxRegion::centered(2, 2.0).unwrap();
        let seg = Segment { base: [-3.0, 0.2], dir: Dir::PosE1, length: 2.5 };
        assert!(seg.meets_box(&b));
        assert_eq!(seg.entry_point(&b), [-1.0, 0.2]);
        assert!(!Segment { length: 1.5, ..seg }.meets_box(&b));
        assert!(Segment { length: f64::INFINITY, ..seg }.meets_box(&b));
        assert!(!Segment { base: [-3.0, 1.0], ..seg }.meets_box(&b));
    }
}
