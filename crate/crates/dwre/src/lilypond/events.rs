//! Shielding, external stabilization and separation events.
//!
//! `event_a5` is a checkable sufficient condition: for every entry direction
//! and every entry strip of width `delta` along the facing side of `Q_s(o)`,
//! some blocker block `E` sits within `s^alpha` of that side. A block is a
//! single germ growing across the strip with nothing else nearby that could
//! stop it first.

use super::{rotate_dir, rotate_pt, Pt};
use crate::geom::{BoxRegion, Dir, LatticeSite, MarkedConfiguration, Position};
use crate::spatial::GridIndex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct A5Geometry {
    /// Strip width and block scale.
    pub delta: f64,
    /// Number of entry strips per side.
    pub strips: usize,
    /// Number of candidate block positions per strip.
    pub positions: usize,
}

impl A5Geometry {
    /// `None` when `s^(1 - alpha/2) < 1`, which leaves no strip.
    pub fn new(s: f64, alpha: f64) -> Option<Self> {
        let strips = s.powf(1.0 - alpha / 2.0).floor();
        if !(strips >= 1.0) || !(s > 0.0) {
            return None;
        }
        let delta = s / strips;
        let positions = (s.powf(alpha) / (5.0 * delta)).floor() as usize + 1;
        Some(A5Geometry { delta, strips: strips as usize, positions })
    }
}

struct Rotated {
    pos: Vec<Position>,
    dir: Vec<Dir>,
    grid: GridIndex,
}

fn in_closed(p: Pt, lo: Pt, hi: Pt) -> bool {
    p[0] >= lo[0] && p[0] <= hi[0] && p[1] >= lo[1] && p[1] <= hi[1]
}

impl Rotated {
    /// Block at `xi`; `up` selects a blocker below `xi` growing `+e2`,
    /// otherwise one above growing `-e2`.
    fn block(&self, xi: Pt, delta: f64, up: bool) -> bool {
        let (r2_lo, r2_hi, want) = if up {
            ([xi[0] - delta / 2.0, xi[1] - delta], [xi[0] + delta / 2.0, xi[1]], Dir::PosE2)
        } else {
            ([xi[0] - delta / 2.0, xi[1]], [xi[0] + delta / 2.0, xi[1] + delta], Dir::NegE2)
        };
        let r1_lo = [xi[0] - 2.5 * delta, xi[1] - delta];
        let r1_hi = [xi[0] + 2.5 * delta, xi[1] + delta];
        let mut blocker = false;
        let mut clean = true;
        self.grid.for_each_near_box(&r1_lo, &r1_hi, |i| {
            let p = self.pos[i].to_xy();
            if !in_closed(p, r1_lo, r1_hi) {
                return;
            }
            if in_closed(p, r2_lo, r2_hi) && self.dir[i] == want {
                blocker = true;
            } else {
                clean = false;
            }
        });
        blocker && clean
    }
}

/// Shielding check for germs given in coordinates centred on the box.
fn a5_local(pts: &[(Pt, Dir)], s: f64, alpha: f64) -> bool {
    let Some(geo) = A5Geometry::new(s, alpha) else { return false };
    let Ok(window) = BoxRegion::centered(2, s) else { return false };
    let delta = geo.delta;
    // Rotating by `turns` counter-clockwise maps the entry direction to +e1.
    for (entry, turns) in [(Dir::PosE1, 0u8), (Dir::PosE2, 3), (Dir::NegE1, 2), (Dir::NegE2, 1)] {
        debug_assert_eq!(rotate_dir(entry, turns), Dir::PosE1);
        let pos: Vec<Position> = pts
            .iter()
            .map(|(p, _)| {
                let q = rotate_pt(*p, turns);
                Position::xy(q[0], q[1])
            })
            .collect();
        let dir = pts.iter().map(|(_, d)| rotate_dir(*d, turns)).collect();
        let grid = GridIndex::with_cell(&pos, &window, delta);
        let rot = Rotated { pos, dir, grid };
        for j in 0..geo.strips {
            let bottom = -s / 2.0 + j as f64 * delta;
            let top = bottom + delta;
            let xs = (0..geo.positions).map(|i| -s / 2.0 + 5.0 * i as f64 * delta);
            if top > 0.0 && !xs.clone().any(|x| rot.block([x, bottom], delta, true)) {
                return false;
            }
            if bottom < 0.0 && !xs.clone().any(|x| rot.block([x, top], delta, false)) {
                return false;
            }
        }
    }
    true
}

fn local_germs(phi: &MarkedConfiguration, centre: Pt, side: f64) -> Vec<(Pt, Dir)> {
    let Ok(b) = BoxRegion::new(Position::xy(centre[0], centre[1]), side) else { return Vec::new() };
    phi.points()
        .iter()
        .filter(|p| b.contains(&p.position))
        .filter_map(|p| p.mark.direction().map(|d| ([p.xy()[0] - centre[0], p.xy()[1] - centre[1]], d)))
        .collect()
}

/// Shielding event for `phi ∩ Q_s(o)`.
pub fn event_a5(phi: &MarkedConfiguration, s: f64, alpha: f64) -> bool {
    if phi.dim() != 2 || !(alpha > 0.0 && alpha < 1.0) {
        return false;
    }
    a5_local(&local_germs(phi, [0.0, 0.0], s), s, alpha)
}

/// External stabilization: shielding at exponent 1/8 in `Q_s(o)` and in each
/// of the 24 boxes of side `s/3` centred at `s z / 3` with `|z|_inf = 3`.
pub fn event_a7(phi: &MarkedConfiguration, s: f64) -> bool {
    if !event_a5(phi, s, 0.125) {
        return false;
    }
    let t = s / 3.0;
    for z in crate::geom::sites_within(2, 3) {
        if z.sup_norm() != 3 {
            continue;
        }
        let c = [z.0[0] as f64 * t, z.0[1] as f64 * t];
        if !a5_local(&local_germs(phi, c, t), t, 0.125) {
            return false;
        }
    }
    true
}

/// `phi ⊂ Q_3s(o)` and, per axis, all coordinates together with `±s/2` are
/// pairwise at least `s^-4` apart.
pub fn event_a8(phi: &MarkedConfiguration, s: f64) -> bool {
    let Ok(q3) = BoxRegion::centered(2, 3.0 * s) else { return false };
    if phi.dim() != 2 || !phi.points().iter().all(|p| q3.contains(&p.position)) {
        return false;
    }
    let sep = s.powi(-4);
    (0..2).all(|k| {
        let mut v: Vec<f64> = phi.points().iter().map(|p| p.position.coords()[k]).collect();
        v.push(-s / 2.0);
        v.push(s / 2.0);
        v.sort_by(f64::total_cmp);
        v.windows(2).all(|w| w[1] - w[0] >= sep)
    })
}

/// The good-site event for the lilypond model, evaluated on `phi ∩ Q_3s(o)`.
pub fn event_as(phi: &MarkedConfiguration, s: f64) -> bool {
    let Ok(q3) = BoxRegion::centered(2, 3.0 * s) else { return false };
    let local = phi.restrict(&q3);
    event_a5(&local, s, 0.5) && event_a7(&local, s) && event_a8(&local, s)
}

/// Site boxes `Q_{s/3}(s z / 3)` inspected by `event_a7`.
pub fn a7_sites() -> Vec<LatticeSite> {
    crate::geom::sites_within(2, 3).into_iter().filter(|z| z.sup_norm() == 3).collect()
}
