//! Event-driven solver.
//!
//! Candidates are processed in increasing stopping time. A candidate
//! `(t, x, y, u)` is valid iff `y` covers the crossing when `x` arrives, i.e.
//! `f(y) > u`. Every assignment that could invalidate it happens at a time
//! `f(y) < t`, so it is already settled when the candidate is popped.
//!
//! Candidates are generated lazily: germ `x` scans the grid column `j` cells
//! ahead of its own cell only when the sweep reaches the earliest time any
//! crossing in that column can occur. A crossing `j` columns ahead has
//! `t < (j + 1) h` and `u < t`, so rows within `j + 1` of `x` suffice.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{crossing, germs, Germs, LilypondSolution};
use crate::error::{invalid, Error, Result};
use crate::geom::{MarkedConfiguration, Position};
use crate::spatial::GridIndex;

#[derive(Debug, Clone, Copy)]
struct Event {
    t: f64,
    /// 0 = column scan, 1 = candidate; scans first at equal times.
    kind: u8,
    x: u32,
    /// Column offset for scans, stopper index for candidates.
    arg: u32,
    u: f64,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed so that `BinaryHeap` pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .t
            .total_cmp(&self.t)
            .then(other.kind.cmp(&self.kind))
            .then(other.x.cmp(&self.x))
            .then(other.arg.cmp(&self.arg))
    }
}

/// Rejects configurations in which two germs share a coordinate (up to the
/// relative tolerance): such pairs are axis-aligned.
pub(crate) fn screen_axis_alignment(g: &Germs, eps: f64) -> Result<()> {
    for axis in 0..2 {
        let mut v: Vec<f64> = g.base.iter().map(|p| p[axis]).collect();
        v.sort_by(f64::total_cmp);
        for w in v.windows(2) {
            if w[1] - w[0] <= eps * w[0].abs().max(w[1].abs()).max(1.0) {
                return Err(Error::NotGeneric(format!("two germs share coordinate {} on axis {}", w[0], axis + 1)));
            }
        }
    }
    Ok(())
}

pub fn solve(phi: &MarkedConfiguration) -> Result<LilypondSolution> {
    let g = germs(phi)?;
    let n = g.base.len();
    if n == 0 {
        return Err(invalid!("the lilypond model needs a non-empty configuration"));
    }
    if n >= u32::MAX as usize {
        return Err(Error::ResourceCap(format!("{n} germs exceed the solver's index range")));
    }
    let eps = phi.tolerance();
    screen_axis_alignment(&g, eps)?;

    let pos: Vec<Position> = g.base.iter().map(|p| Position::xy(p[0], p[1])).collect();
    let grid = GridIndex::build(&pos, phi.window(), 2.0);
    let h = grid.cell_side();
    let origin = [grid.origin()[0], grid.origin()[1]];
    let dims = [grid.dims()[0] as i64, grid.dims()[1] as i64];
    let cells: Vec<[i64; 2]> = g.base.iter().map(|p| {
        let c = grid.cell_of(p);
        [c[0], c[1]]
    }).collect();

    let mut f = vec![f64::INFINITY; n];
    let mut stopper: Vec<Option<usize>> = vec![None; n];
    let mut fixed = vec![false; n];
    let mut heap = BinaryHeap::with_capacity(4 * n);
    for x in 0..n {
        heap.push(Event { t: 0.0, kind: 0, x: x as u32, arg: 0, u: 0.0 });
    }

    while let Some(ev) = heap.pop() {
        let x = ev.x as usize;
        if fixed[x] {
            continue;
        }
        if ev.kind == 1 {
            let y = ev.arg as usize;
            if fixed[y] {
                let fy = f[y];
                if (fy - ev.u).abs() <= eps * fy.max(ev.u) {
                    return Err(Error::NotGeneric(format!(
                        "germ {} stops exactly where germ {} arrives",
                        phi.point(y).id,
                        phi.point(x).id
                    )));
                }
                if fy < ev.u {
                    continue;
                }
            }
            f[x] = ev.t;
            stopper[x] = Some(y);
            fixed[x] = true;
            continue;
        }

        // Column scan.
        let j = ev.arg as i64;
        let dx = g.dir[x];
        let a = dx.axis();
        let b = 1 - a;
        let sg = dx.sign() as i64;
        let bx = g.base[x];
        let col = cells[x][a] + sg * j;
        let rows = (cells[x][b] - j - 1).max(0)..=(cells[x][b] + j + 1).min(dims[b] - 1);
        for row in rows {
            let mut cell = [0i64; 2];
            cell[a] = col;
            cell[b] = row;
            for &yy in grid.items_in(&cell) {
                let y = yy as usize;
                if y == x {
                    continue;
                }
                let Some((t, u)) = crossing(bx, dx, g.base[y], g.dir[y]) else { continue };
                if (t - u).abs() <= eps * t {
                    return Err(Error::NotGeneric(format!(
                        "germs {} and {} reach their crossing simultaneously",
                        phi.point(x).id,
                        phi.point(y).id
                    )));
                }
                if u < t {
                    heap.push(Event { t, kind: 1, x: x as u32, arg: y as u32, u });
                }
            }
        }
        let next_col = col + sg;
        if next_col >= 0 && next_col < dims[a] {
            let edge = origin[a] + (if sg > 0 { next_col } else { next_col + 1 }) as f64 * h;
            let tau = (dx.sign() * (edge - bx[a])).max(0.0);
            heap.push(Event { t: tau, kind: 0, x: x as u32, arg: (j + 1) as u32, u: 0.0 });
        }
    }

    let tip = (0..n)
        .map(|x| {
            stopper[x].map(|y| {
                let a = g.dir[x].axis();
                let mut p = g.base[x];
                p[a] = g.base[y][a];
                p
            })
        })
        .collect();
    Ok(LilypondSolution { f, stopper, tip })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{BoxRegion, Dir, Mark, MarkedPoint};

    fn cfg(pts: &[([f64; 2], Dir)]) -> MarkedConfiguration {
        let points = pts
            .iter()
            .enumerate()
            .map(|(i, (p, d))| MarkedPoint::new(i as u64, Position::xy(p[0], p[1]), Mark::Direction(*d)))
            .collect();
        MarkedConfiguration::new(points, BoxRegion::centered(2, 20.0).unwrap()).unwrap()
    }

    #[test]
    fn single_germ_grows_forever() {
        let sol = solve(&cfg(&[([0.3, 0.2], Dir::PosE1)])).unwrap();
        assert!(sol.f[0].is_infinite());
        assert_eq!(sol.stopper[0], None);
    }

    #[test]
    fn two_germ_example() {
        let sol = solve(&cfg(&[([0.0, 0.0], Dir::PosE1), ([1.0, -0.5], Dir::PosE2)])).unwrap();
        assert_eq!(sol.f[0], 1.0);
        assert_eq!(sol.stopper[0], Some(1));
        assert_eq!(sol.tip[0], Some([1.0, 0.0]));
        assert!(sol.f[1].is_infinite());
    }

    #[test]
    fn empty_and_degenerate_inputs_are_rejected() {
        let w = BoxRegion::centered(2, 4.0).unwrap();
        assert!(solve(&MarkedConfiguration::empty(w)).is_err());
        let r = solve(&cfg(&[([0.0, 0.0], Dir::PosE1), ([2.0, 0.0], Dir::PosE2)]));
        assert!(matches!(r, Err(Error::NotGeneric(_))));
        let r = solve(&cfg(&[([0.0, 0.0], Dir::PosE1), ([1.0, -1.0], Dir::PosE2)]));
        assert!(matches!(r, Err(Error::NotGeneric(_))));
    }

    #[test]
    fn far_stopper_is_found_across_many_columns() {
        let mut pts = vec![([-9.0, 0.01], Dir::PosE1), ([8.5, -3.0], Dir::PosE2)];
        for i in 0..30 {
            pts.push(([-8.0 + 0.5 * i as f64 + 0.013, 5.0 + 0.1 * i as f64], Dir::NegE1));
        }
        let sol = solve(&cfg(&pts)).unwrap();
        assert_eq!(sol.stopper[0], Some(1));
        assert!((sol.f[0] - 17.5).abs() < 1e-12);
    }
}
