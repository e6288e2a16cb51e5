//! Anisotropic descending chains: point sequences whose consecutive
//! sup-norm gaps strictly decrease, the first being at most `b`.

use std::collections::BTreeSet;

use super::solve;
use crate::error::{invalid, Error, Result};
use crate::geom::{BoxRegion, MarkedConfiguration, Position};
use crate::spatial::GridIndex;

/// Upper bound on the number of chains `find_chains` will collect.
pub const CHAIN_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct DescendingChain {
    pub points: Vec<u64>,
    pub bound: f64,
}

impl DescendingChain {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn is_descending_chain(pos: &[Position], b: f64) -> bool {
    let mut prev = f64::INFINITY;
    for (i, w) in pos.windows(2).enumerate() {
        let g = w[0].dist_sup(&w[1]);
        if (i == 0 && g > b) || g >= prev {
            return false;
        }
        prev = g;
    }
    (0..pos.len()).all(|i| (i + 1..pos.len()).all(|j| pos[i] != pos[j]))
}

struct Search<'a> {
    pos: Vec<Position>,
    grid: GridIndex,
    phi: &'a MarkedConfiguration,
}

impl<'a> Search<'a> {
    fn new(phi: &'a MarkedConfiguration) -> Self {
        let pos: Vec<Position> = phi.points().iter().map(|p| p.position.clone()).collect();
        let grid = GridIndex::build(&pos, phi.window(), 2.0);
        Search { pos, grid, phi }
    }

    /// Indices `j` not on `path` with gap to `i` at most `r` (`strict`: below `r`).
    fn next(&self, i: usize, r: f64, strict: bool, path: &[usize]) -> Vec<(f64, usize)> {
        let c = self.pos[i].coords();
        let lo: Vec<f64> = c.iter().map(|v| v - r).collect();
        let hi: Vec<f64> = c.iter().map(|v| v + r).collect();
        let mut out = Vec::new();
        self.grid.for_each_near_box(&lo, &hi, |j| {
            if path.contains(&j) {
                return;
            }
            let g = self.pos[i].dist_sup(&self.pos[j]);
            if g < r || (!strict && g == r) {
                out.push((g, j));
            }
        });
        out.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        out
    }

    fn enumerate(
        &self,
        path: &mut Vec<usize>,
        gap: f64,
        b: f64,
        n_min: usize,
        seen: &mut BTreeSet<Vec<u64>>,
        out: &mut Vec<DescendingChain>,
    ) -> Result<()> {
        if path.len() >= n_min.max(1) {
            let mut key: Vec<u64> = path.iter().map(|&i| self.phi.point(i).id).collect();
            key.sort_unstable();
            if seen.insert(key) {
                if out.len() >= CHAIN_CAP {
                    return Err(Error::ResourceCap(format!("more than {CHAIN_CAP} descending chains")));
                }
                out.push(DescendingChain { points: path.iter().map(|&i| self.phi.point(i).id).collect(), bound: b });
            }
        }
        let last = *path.last().expect("non-empty path");
        let first = path.len() == 1;
        for (g, j) in self.next(last, if first { b } else { gap }, !first, path) {
            path.push(j);
            self.enumerate(path, g, b, n_min, seen, out)?;
            path.pop();
        }
        Ok(())
    }

    /// Whether a chain with `need` more points extends `path`.
    fn extends(&self, path: &mut Vec<usize>, gap: f64, b: f64, need: usize) -> bool {
        if need == 0 {
            return true;
        }
        let last = *path.last().expect("non-empty path");
        let first = path.len() == 1;
        for (g, j) in self.next(last, if first { b } else { gap }, !first, path) {
            path.push(j);
            let ok = self.extends(path, g, b, need - 1);
            path.pop();
            if ok {
                return true;
            }
        }
        false
    }
}

/// All chains of at least `n_min` points, one per point set, in depth-first
/// order from each start point.
pub fn find_chains(phi: &MarkedConfiguration, b: f64, n_min: usize) -> Result<Vec<DescendingChain>> {
    if !(b > 0.0) {
        return Err(invalid!("chain bound must be positive, got {b}"));
    }
    let search = Search::new(phi);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for start in 0..phi.len() {
        let mut path = vec![start];
        search.enumerate(&mut path, b, b, n_min, &mut seen, &mut out)?;
    }
    Ok(out)
}

/// A `b`-bounded chain of `n + 1` distinct points starting in `Q_s(o)`.
pub fn event_a6(phi: &MarkedConfiguration, s: f64, b: f64, n: usize) -> bool {
    let q = match BoxRegion::centered(phi.dim(), s) {
        Ok(q) => q,
        Err(_) => return false,
    };
    let search = Search::new(phi);
    (0..phi.len()).filter(|&i| q.contains(&phi.point(i).position)).any(|i| {
        let mut path = vec![i];
        search.extends(&mut path, b, b, n)
    })
}

/// The mean-count bound `s^2 (4 b^2)^n lambda^(n+1) / n!` on the probability
/// of a long chain.
pub fn chain_bound(s: f64, b: f64, n: usize, lambda: f64) -> f64 {
    let base = s * s * lambda;
    if n == 0 {
        return base;
    }
    if b == 0.0 {
        return 0.0;
    }
    let step = 4.0 * b * b * lambda;
    let mut r = base;
    for k in 1..=n {
        r *= step / k as f64;
    }
    if r.is_finite() && r > 0.0 {
        return r;
    }
    let ln_fact: f64 = (1..=n).map(|k| (k as f64).ln()).sum();
    (base.ln() + n as f64 * step.ln() - ln_fact).exp()
}

/// `int 1{|x|_inf <= b} |x|_inf^(2k) dx = 4 b^(2k+2) / (k + 1)` in the plane.
pub fn intcomp(b: f64, k: u32) -> f64 {
    4.0 * b.powi(2 * k as i32 + 2) / (k as f64 + 1.0)
}

/// Midpoint rule for `intcomp` on a `grid_n` by `grid_n` grid over one
/// quadrant, times four by symmetry. Cells sharing `max(i, j) = m` are
/// summed in one term.
pub fn intcomp_quadrature(b: f64, k: u32, grid_n: usize) -> f64 {
    let h = b / grid_n as f64;
    let sum: f64 = (0..grid_n)
        .map(|m| {
            let x = (m as f64 + 0.5) * h;
            (2 * m + 1) as f64 * x.powi(2 * k as i32)
        })
        .sum();
    4.0 * sum * h * h
}

/// Alternating sequence: from `x1` follow the stopping
/// neighbour in `phi` at odd steps and in `phi2` at even steps, until the
/// first point not present in both configurations (included).
pub fn build_alternating_chain(
    phi: &MarkedConfiguration,
    phi2: &MarkedConfiguration,
    x1: u64,
) -> Result<DescendingChain> {
    let in_both = |id: u64| match (phi.index_of(id), phi2.index_of(id)) {
        (Some(i), Some(j)) => phi.point(i).position == phi2.point(j).position,
        _ => false,
    };
    if !in_both(x1) {
        return Err(Error::Precondition(format!("point {x1} is not in both configurations")));
    }
    let sol1 = solve(phi)?;
    let sol2 = solve(phi2)?;
    let f1 = sol1.f[phi.index_of(x1).expect("checked")];
    let f2 = sol2.f[phi2.index_of(x1).expect("checked")];
    if !(f1 < f2) {
        return Err(Error::Precondition(format!("need f(x1) smaller in the first configuration, got {f1} vs {f2}")));
    }
    let mut points = vec![x1];
    let mut cur = x1;
    for step in 1.. {
        let next = if step % 2 == 1 {
            sol1.stopper_id(phi, phi.index_of(cur).expect("in both"))
        } else {
            sol2.stopper_id(phi2, phi2.index_of(cur).expect("in both"))
        };
        let Some(next) = next else { break };
        if points.contains(&next) {
            return Err(Error::Precondition(format!("alternating sequence revisits point {next}")));
        }
        points.push(next);
        if !in_both(next) {
            break;
        }
        cur = next;
    }
    Ok(DescendingChain { points, bound: f1 })
}
