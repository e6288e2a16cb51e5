//! K-nearest-neighbour walks: descendant rule, stabilization radius, and the
//! events used to shield and stop them.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::geom::{BoxRegion, LatticeSite, Mark, MarkedConfiguration, MarkedPoint, Position, DEFAULT_TOLERANCE};
use crate::ppgen::MarkLaw;
use crate::rng::stream;
use crate::spatial::GridIndex;
use crate::walks::WalkGraph;

/// Default cap on the number of shell cells generated or checked.
pub const SHELL_CELL_CAP: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub pi: Vec<f64>,
    pub eps: f64,
}

impl KnnModel {
    pub fn new(k: usize, pi: Vec<f64>, eps: f64) -> Result<Self> {
        if k == 0 {
            return Err(invalid!("K must be at least 1"));
        }
        if pi.len() != k {
            return Err(invalid!("rank law has {} entries, expected K = {k}", pi.len()));
        }
        MarkLaw::Rank { pi: pi.clone() }.validate()?;
        if !(eps > 0.0) {
            return Err(invalid!("tolerance must be positive"));
        }
        Ok(KnnModel { k, pi, eps })
    }

    pub fn uniform(k: usize) -> Result<Self> {
        Self::new(k, vec![1.0 / k.max(1) as f64; k], DEFAULT_TOLERANCE)
    }

    pub fn law(&self) -> MarkLaw {
        MarkLaw::Rank { pi: self.pi.clone() }
    }

    fn rank_of(&self, p: &MarkedPoint) -> Result<usize> {
        match p.mark {
            Mark::Rank(k) if k >= 1 && (k as usize) <= self.k => Ok(k as usize),
            m => Err(invalid!("point {} has mark {:?}, expected a rank in 1..={}", p.id, m, self.k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilizationBall {
    pub center: Position,
    pub radius: f64,
}

impl StabilizationBall {
    pub fn contains(&self, p: &Position) -> bool {
        self.center.dist(p) <= self.radius
    }

    /// The closed ball lies inside the closed box `b`.
    pub fn inside(&self, b: &BoxRegion) -> bool {
        (0..b.dim()).all(|i| {
            let c = self.center.coords()[i];
            c - self.radius >= b.lo(i) && c + self.radius <= b.hi(i)
        })
    }
}

/// Neighbour queries over one configuration.
pub struct KnnIndex<'a> {
    phi: &'a MarkedConfiguration,
    pos: Vec<Position>,
    grid: GridIndex,
}

impl<'a> KnnIndex<'a> {
    pub fn new(phi: &'a MarkedConfiguration, model: &KnnModel) -> Self {
        let pos: Vec<Position> = phi.points().iter().map(|p| p.position.clone()).collect();
        let grid = GridIndex::build(&pos, phi.window(), model.k.max(1) as f64);
        KnnIndex { phi, pos, grid }
    }

    /// The `count` nearest other points of point `i`, nearest first.
    pub fn neighbors(&self, i: usize, count: usize) -> Vec<(f64, usize)> {
        self.grid.k_nearest(&self.pos, self.pos[i].coords(), count, Some(i))
    }

    fn need_points(&self, model: &KnnModel) -> Result<()> {
        if self.phi.len() < model.k + 1 {
            return Err(invalid!("{} points, need at least K + 1 = {}", self.phi.len(), model.k + 1));
        }
        Ok(())
    }

    /// `(index, distance)` of the k-th nearest neighbour, `k` = rank mark.
    pub fn descendant(&self, i: usize, model: &KnnModel) -> Result<(usize, f64)> {
        self.need_points(model)?;
        let k = model.rank_of(self.phi.point(i))?;
        let nb = self.neighbors(i, k + 1);
        let (dk, j) = nb[k - 1];
        let tie = |other: f64| (other - dk).abs() <= model.eps * dk.max(other);
        if (k >= 2 && tie(nb[k - 2].0)) || (nb.len() > k && tie(nb[k].0)) {
            return Err(Error::NotGeneric(format!("distance tie at rank {k} for point {}", self.phi.point(i).id)));
        }
        Ok((j, dk))
    }

    pub fn r_stab(&self, i: usize, model: &KnnModel) -> Result<StabilizationBall> {
        self.need_points(model)?;
        let nb = self.neighbors(i, model.k + 1);
        let r = nb[model.k - 1].0;
        if let Some(&(next, _)) = nb.get(model.k) {
            if (next - r).abs() <= model.eps * next {
                return Err(Error::NotGeneric(format!(
                    "stabilization ball of point {} is not unique",
                    self.phi.point(i).id
                )));
            }
        }
        Ok(StabilizationBall { center: self.pos[i].clone(), radius: r })
    }
}

/// Descendant of the point at index `x` and its position.
pub fn knn_descendant(phi: &MarkedConfiguration, x: usize, model: &KnnModel) -> Result<(MarkedPoint, Position)> {
    let idx = KnnIndex::new(phi, model);
    let (j, _) = idx.descendant(x, model)?;
    let y = phi.point(j).clone();
    let pos = y.position.clone();
    Ok((y, pos))
}

pub fn r_stab(phi: &MarkedConfiguration, x: usize, model: &KnnModel) -> Result<StabilizationBall> {
    KnnIndex::new(phi, model).r_stab(x, model)
}

pub fn build_knn_graph(phi: &MarkedConfiguration, model: &KnnModel, exec: Execution) -> Result<WalkGraph> {
    let idx = KnnIndex::new(phi, model);
    let next = exec.try_map(phi.len(), |i| idx.descendant(i, model).map(|(j, _)| j))?;
    let geo = next.iter().map(|&j| Some(phi.point(j).position.clone())).collect();
    WalkGraph::new(phi.ids(), next.into_iter().map(Some).collect(), geo)
}

fn q(dim: usize, side: f64) -> BoxRegion {
    BoxRegion::centered(dim, side).expect("positive side")
}

/// Every one of the `(3(4d+1))^d` subcubes of `Q_3s(o)` holds `>= K+1` points.
pub fn event_a1(phi: &MarkedConfiguration, s: f64, model: &KnnModel) -> bool {
    let d = phi.dim();
    let parts = 3 * (4 * d + 1);
    let big = q(d, 3.0 * s);
    let side = 3.0 * s / parts as f64;
    let mut counts = vec![0usize; parts.pow(d as u32)];
    for p in phi.points() {
        if !big.contains(&p.position) {
            continue;
        }
        let mut flat = 0usize;
        for (i, &c) in p.position.coords().iter().enumerate() {
            let k = (((c - big.lo(i)) / side).floor() as usize).min(parts - 1);
            flat = flat * parts + k;
        }
        counts[flat] += 1;
    }
    counts.iter().all(|&c| c > model.k)
}

/// No point in the boundary shell `Q_s(o) \ Q_{s - s^-d}(o)`.
pub fn event_a2(phi: &MarkedConfiguration, s: f64) -> bool {
    let d = phi.dim();
    let outer = q(d, s);
    let inner = q(d, s - s.powi(-(d as i32)));
    !phi.points().iter().any(|p| outer.contains(&p.position) && !inner.contains(&p.position))
}

/// For every point of `Q_3s(o)`, no other point at distance in
/// `(ρ - s^-2d, ρ + s^-2d]`, with `ρ` the distance to `∂Q_s(o)`.
pub fn event_a3(phi: &MarkedConfiguration, s: f64) -> bool {
    let d = phi.dim();
    let w = s.powi(-2 * d as i32);
    let big = q(d, 3.0 * s);
    let qs = q(d, s);
    let pos: Vec<Position> = phi.points().iter().map(|p| p.position.clone()).collect();
    let grid = GridIndex::build(&pos, phi.window(), 2.0);
    for (i, p) in pos.iter().enumerate() {
        if !big.contains(p) {
            continue;
        }
        let rho = qs.dist_to_boundary(p);
        let (r_in, r_out) = (rho - w, rho + w);
        let mut hit = false;
        for_each_in_annulus(&grid, p, r_in.max(0.0), r_out, |j| {
            if !hit && j != i {
                let dist = pos[j].dist(p);
                if dist > r_in && dist <= r_out {
                    hit = true;
                }
            }
        });
        if hit {
            return false;
        }
    }
    true
}

/// Candidates for the closed annulus `r_in <= |x - p| <= r_out`: visits every
/// cell meeting it (and possibly a few more).
fn for_each_in_annulus<F: FnMut(usize)>(grid: &GridIndex, p: &Position, r_in: f64, r_out: f64, mut f: F) {
    let c = p.coords();
    if c.len() != 2 {
        let lo: Vec<f64> = c.iter().map(|x| x - r_out).collect();
        let hi: Vec<f64> = c.iter().map(|x| x + r_out).collect();
        grid.for_each_near_box(&lo, &hi, f);
        return;
    }
    let h = grid.cell_side();
    let o = grid.origin();
    let dims = grid.dims();
    let row_lo = (((c[1] - r_out - o[1]) / h).floor() as i64).max(0);
    let row_hi = (((c[1] + r_out - o[1]) / h).floor() as i64).min(dims[1] as i64 - 1);
    let ncol = dims[0] as i64;
    for row in row_lo..=row_hi {
        let y0 = o[1] + row as f64 * h;
        let y1 = y0 + h;
        let min_dy = if c[1] < y0 { y0 - c[1] } else if c[1] > y1 { c[1] - y1 } else { 0.0 };
        let max_dy = (c[1] - y0).abs().max((y1 - c[1]).abs());
        if min_dy > r_out {
            continue;
        }
        let half = (r_out * r_out - min_dy * min_dy).sqrt();
        let col_lo = (((c[0] - half - o[0]) / h).floor() as i64).max(0);
        let col_hi = (((c[0] + half - o[0]) / h).floor() as i64).min(ncol - 1);
        // Cells whose whole x-extent is within `inner` of c[0] lie strictly inside the inner ball.
        let inner = if r_in > max_dy { (r_in * r_in - max_dy * max_dy).sqrt() } else { -1.0 };
        for col in col_lo..=col_hi {
            let x0 = o[0] + col as f64 * h;
            if inner > 0.0 && x0 > c[0] - inner && x0 + h < c[0] + inner {
                continue;
            }
            for &it in grid.items_in(&[col, row]) {
                f(it as usize);
            }
        }
    }
}

/// Pairs `(z1, z2)` of distinct nearest-neighbour sites of `z`, all in
/// `{-1, 0, 1}^d`.
fn a4_triples(d: usize) -> Vec<(LatticeSite, LatticeSite, LatticeSite)> {
    let sites = crate::geom::sites_within(d, 1);
    let l1 = |a: &LatticeSite, b: &LatticeSite| a.0.iter().zip(b.0.iter()).map(|(x, y)| (x - y).abs()).sum::<i64>();
    let mut out = Vec::new();
    for z in &sites {
        let nbs: Vec<&LatticeSite> = sites.iter().filter(|w| l1(z, w) == 1).collect();
        for a in &nbs {
            for b in &nbs {
                if a != b {
                    out.push((z.clone(), (*a).clone(), (*b).clone()));
                }
            }
        }
    }
    out
}

/// No point of `Q_s(sz)` is within `s^-d` of equidistant from two distinct
/// neighbouring boxes, for all sites `z` of `{-1,0,1}^d`.
pub fn event_a4(phi: &MarkedConfiguration, s: f64) -> bool {
    let d = phi.dim();
    let margin = s.powi(-(d as i32));
    let triples = a4_triples(d);
    for p in phi.points() {
        let z = LatticeSite::of(&p.position, s);
        if z.sup_norm() > 1 {
            continue;
        }
        for (zz, z1, z2) in &triples {
            if *zz != z {
                continue;
            }
            let b1 = BoxRegion::site(z1, s).expect("valid");
            let b2 = BoxRegion::site(z2, s).expect("valid");
            if (b1.dist_to(&p.position) - b2.dist_to(&p.position)).abs() < margin {
                return false;
            }
        }
    }
    true
}

/// All four KNN events at the origin site.
pub fn event_as(phi: &MarkedConfiguration, s: f64, model: &KnnModel) -> bool {
    event_a1(phi, s, model) && event_a2(phi, s) && event_a3(phi, s) && event_a4(phi, s)
}

/// Shell layer `m = ceil(a_s)` and cell side `s^-4d` of the shell event.
pub fn shell_geometry(s: f64, d: usize) -> (i64, f64) {
    let dd = d as i32;
    let a = (s - s.powi(-3 * dd)) * s.powi(4 * dd) / 2.0;
    (a.ceil() as i64, s.powi(-4 * dd))
}

pub fn shell_cell_count(m: i64, d: usize) -> u128 {
    let w = (2 * m + 1) as u128;
    let v = (2 * m - 1).max(0) as u128;
    w.pow(d as u32) - v.pow(d as u32)
}

/// Shell event: `ψ` lies in the union of shell cells and each cell holds
/// `>= K+1` points. Errors when the cell count exceeds `cap`.
pub fn event_app(psi: &MarkedConfiguration, s: f64, model: &KnnModel, cap: usize) -> Result<bool> {
    let d = psi.dim();
    let (m, h) = shell_geometry(s, d);
    let cells = shell_cell_count(m, d);
    if cells > cap as u128 {
        return Err(Error::ResourceCap(format!("shell has {cells} cells, cap is {cap}")));
    }
    let mut counts: HashMap<LatticeSite, usize> = HashMap::new();
    for p in psi.points() {
        let z = LatticeSite::of(&p.position, h);
        if z.sup_norm() != m {
            return Ok(false);
        }
        *counts.entry(z).or_default() += 1;
    }
    let full = counts.values().filter(|&&c| c > model.k).count() as u128;
    Ok(full == cells)
}

/// Sites `z` with `|z|_inf = m`, each listed once.
pub fn shell_sites(m: i64, d: usize) -> Vec<LatticeSite> {
    let mut out = Vec::new();
    if m == 0 {
        out.push(LatticeSite::origin(d));
        return out;
    }
    for axis in 0..d {
        for sign in [-1i64, 1] {
            let ranges: Vec<(i64, i64)> = (0..d)
                .map(|j| if j == axis { (sign * m, sign * m) } else if j < axis { (-m + 1, m - 1) } else { (-m, m) })
                .collect();
            if ranges.iter().any(|(a, b)| a > b) {
                continue;
            }
            let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
            'outer: loop {
                out.push(LatticeSite::new(&cur));
                let mut j = d;
                loop {
                    if j == 0 {
                        break 'outer;
                    }
                    j -= 1;
                    cur[j] += 1;
                    if cur[j] <= ranges[j].1 {
                        break;
                    }
                    cur[j] = ranges[j].0;
                }
            }
        }
    }
    out
}

/// A configuration satisfying the shell event: `K+1` uniform points in each
/// shell cell intersected with `Q_s(o)`.
pub fn gen_shell_config(s: f64, d: usize, model: &KnnModel, seed: u64, cap: usize) -> Result<MarkedConfiguration> {
    if !(s > 1.0) {
        return Err(invalid!("shell scale must exceed 1"));
    }
    let (m, h) = shell_geometry(s, d);
    let cells = shell_cell_count(m, d);
    if cells > cap as u128 {
        return Err(Error::ResourceCap(format!("shell has {cells} cells, cap is {cap}")));
    }
    let window = q(d, s);
    let law = model.law();
    let mut pts = Vec::with_capacity(cells as usize * (model.k + 1));
    for (ci, z) in shell_sites(m, d).iter().enumerate() {
        let mut rng = stream(seed, ci as u64);
        let bounds: Vec<(f64, f64)> = (0..d)
            .map(|i| {
                let c = z.0[i] as f64 * h;
                ((c - h / 2.0).max(window.lo(i)), (c + h / 2.0).min(window.hi(i)))
            })
            .collect();
        if bounds.iter().any(|(a, b)| a >= b) {
            return Err(Error::Precondition(format!("shell cell {z:?} lies outside Q_s(o)")));
        }
        for _ in 0..=model.k {
            let c: Vec<f64> = bounds
                .iter()
                .map(|&(a, b)| {
                    let x = a + rng.random::<f64>() * (b - a);
                    if x >= b { b.next_down() } else { x }
                })
                .collect();
            let mark = match &law {
                MarkLaw::Rank { pi } => {
                    let u: f64 = rng.random();
                    let mut acc = 0.0;
                    let mut k = pi.len();
                    for (i, p) in pi.iter().enumerate() {
                        acc += p;
                        if u < acc {
                            k = i + 1;
                            break;
                        }
                    }
                    Mark::Rank(k as u32)
                }
                MarkLaw::Direction => Mark::None,
            };
            let id = pts.len() as u64;
            pts.push(MarkedPoint::new(id, Position::new(&c)?, mark));
        }
    }
    MarkedConfiguration::new(pts, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(marks: &[u32]) -> MarkedConfiguration {
        let xs = [0.0, 1.0, 3.0];
        let pts = xs
            .iter()
            .zip(marks)
            .enumerate()
            .map(|(i, (&x, &k))| MarkedPoint::new(i as u64, Position::xy(x, 0.0), Mark::Rank(k)))
            .collect();
        MarkedConfiguration::new(pts, BoxRegion::centered(2, 20.0).unwrap()).unwrap()
    }

    #[test]
    fn descendant_examples() {
        let m2 = KnnModel::uniform(2).unwrap();
        let (y, p) = knn_descendant(&line(&[1, 1, 1]), 0, &m2).unwrap();
        assert_eq!((y.id, p.to_xy()), (1, [1.0, 0.0]));
        let (y, _) = knn_descendant(&line(&[2, 1, 1]), 0, &m2).unwrap();
        assert_eq!(y.id, 2);
    }

    #[test]
    fn r_stab_examples() {
        let c = line(&[1, 1, 1]);
        assert_eq!(r_stab(&c, 0, &KnnModel::uniform(1).unwrap()).unwrap().radius, 1.0);
        assert_eq!(r_stab(&c, 0, &KnnModel::uniform(2).unwrap()).unwrap().radius, 3.0);
        assert!(r_stab(&c, 0, &KnnModel::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn tie_is_rejected() {
        let pts = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)]
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| MarkedPoint::new(i as u64, Position::xy(x, y), Mark::Rank(1)))
            .collect();
        let c = MarkedConfiguration::new(pts, BoxRegion::centered(2, 10.0).unwrap()).unwrap();
        let r = knn_descendant(&c, 0, &KnnModel::uniform(1).unwrap());
        assert!(matches!(r, Err(Error::NotGeneric(_))));
    }

    #[test]
    fn wrong_mark_is_rejected() {
        let c = line(&[3, 1, 1]);
        assert!(knn_descendant(&c, 0, &KnnModel::uniform(2).unwrap()).is_err());
    }

    #[test]
    fn a2_examples() {
        let s = 4.0;
        let w = BoxRegion::centered(2, 20.0).unwrap();
        let one = |x: f64| {
            MarkedConfiguration::new(vec![MarkedPoint::new(0, Position::xy(x, 0.0), Mark::Rank(1))], w.clone()).unwrap()
        };
        assert!(event_a2(&MarkedConfiguration::empty(w.clone()), s));
        assert!(!event_a2(&one(s / 2.0 - s.powi(-2) / 4.0), s));
        assert!(event_a2(&one(0.0), s));
    }

    #[test]
    fn shell_sites_are_unique_and_complete() {
        for d in [2usize, 3] {
            for m in 1..4 {
                let v = shell_sites(m, d);
                let set: std::collections::HashSet<_> = v.iter().cloned().collect();
                assert_eq!(set.len(), v.len());
                assert_eq!(v.len() as u128, shell_cell_count(m, d));
                assert!(v.iter().all(|z| z.sup_norm() == m));
            }
        }
    }
}
