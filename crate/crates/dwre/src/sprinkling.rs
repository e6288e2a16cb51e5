//! Site classification, the revealed-set exploration and incremental
//! addition of sprinkled sites.
//!
//! Sites carry `Y = 0` (empty sprinkling, good bulk), `Y = 1` (perfect) or
//! `Y = 2` (anything else). The exploration starts from the `Y = 2` sites and
//! repeatedly reveals the 5x5 block around the bad site closest to the
//! origin, marking every occupied site it uncovers as bad, until each bad
//! site's block is revealed. Sites outside the finite window count as
//! revealed and not bad.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::geom::{BoxRegion, LatticeSite, MarkedConfiguration, Position};
use crate::model::Model;
use crate::rng::stream;

/// Radius of the revealed block `S(z)` in the sup norm.
pub const BLOCK_RADIUS: i64 = 2;

/// A finite lattice rectangle `lo <= z <= hi` (inclusive, per axis).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteWindow {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl SiteWindow {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(invalid!("site window bounds must share a positive dimension"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(invalid!("site window {lo:?}..={hi:?} is empty"));
        }
        Ok(SiteWindow { lo, hi })
    }

    /// Sites with `|z|_inf <= r`.
    pub fn cube(dim: usize, r: i64) -> Result<Self> {
        Self::new(vec![-r; dim], vec![r; dim])
    }

    /// Sites `z` whose box `Q_{(2 reach + 1) s}(s z)` lies inside `b`.
    pub fn inside(b: &BoxRegion, s: f64, reach: i64) -> Result<Self> {
        let half = reach as f64 + 0.5;
        let lo = (0..b.dim()).map(|k| (b.lo(k) / s + half - 1e-9).ceil() as i64).collect();
        let hi = (0..b.dim()).map(|k| (b.hi(k) / s - half + 1e-9).floor() as i64).collect();
        Self::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn len(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a + 1) as usize).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, z: &LatticeSite) -> bool {
        z.dim() == self.dim() && z.0.iter().zip(self.lo.iter().zip(&self.hi)).all(|(c, (a, b))| c >= a && c <= b)
    }

    /// Row-major index of `z`, last axis fastest.
    pub fn index(&self, z: &LatticeSite) -> Option<usize> {
        if !self.contains(z) {
            return None;
        }
        let mut idx = 0usize;
        for k in 0..self.dim() {
            idx = idx * (self.hi[k] - self.lo[k] + 1) as usize + (z.0[k] - self.lo[k]) as usize;
        }
        Some(idx)
    }

    pub fn site(&self, mut idx: usize) -> LatticeSite {
        let mut c = vec![0i64; self.dim()];
        for k in (0..self.dim()).rev() {
            let w = (self.hi[k] - self.lo[k] + 1) as usize;
            c[k] = self.lo[k] + (idx % w) as i64;
            idx /= w;
        }
        LatticeSite::new(&c)
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> impl Iterator<Item = LatticeSite> + '_ {
        (0..self.len()).map(|i| self.site(i))
    }
}

/// `{0, 1, 2}`-valued field over a site window.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SiteField {
    pub window: SiteWindow,
    y: Vec<u8>,
}

impl SiteField {
    pub fn new(window: SiteWindow, y: Vec<u8>) -> Result<Self> {
        if y.len() != window.len() {
            return Err(invalid!("site field has {} values for {} sites", y.len(), window.len()));
        }
        if let Some(v) = y.iter().find(|&&v| v > 2) {
            return Err(invalid!("site value {v} is not in {{0, 1, 2}}"));
        }
        Ok(SiteField { window, y })
    }

    pub fn filled(window: SiteWindow, v: u8) -> Result<Self> {
        let n = window.len();
        Self::new(window, vec![v; n])
    }

    pub fn get(&self, z: &LatticeSite) -> Option<u8> {
        self.window.index(z).map(|i| self.y[i])
    }

    pub fn set(&mut self, z: &LatticeSite, v: u8) -> Result<()> {
        if v > 2 {
            return Err(invalid!("site value {v} is not in {{0, 1, 2}}"));
        }
        let i = self.window.index(z).ok_or_else(|| invalid!("site {z:?} is outside the field"))?;
        self.y[i] = v;
        Ok(())
    }

    pub fn values(&self) -> &[u8] {
        &self.y
    }

    /// Number of sites with each value.
    pub fn counts(&self) -> [usize; 3] {
        let mut c = [0usize; 3];
        for &v in &self.y {
            c[v as usize] += 1;
        }
        c
    }
}

/// Points of `x` grouped by the site box containing them, each windowed to
/// that box.
pub fn by_site(x: &MarkedConfiguration, s: f64) -> Result<BTreeMap<LatticeSite, MarkedConfiguration>> {
    let mut groups: BTreeMap<LatticeSite, Vec<_>> = BTreeMap::new();
    for p in x.points() {
        let mut z = LatticeSite::of(&p.position, s);
        // Rounding at a face can disagree with the half-open box test.
        if !BoxRegion::site(&z, s)?.contains(&p.position) {
            let alt: Vec<i64> = z
                .0
                .iter()
                .zip(p.position.coords())
                .map(|(&k, &c)| if c < k as f64 * s - s / 2.0 { k - 1 } else if c >= k as f64 * s + s / 2.0 { k + 1 } else { k })
                .collect();
            z = LatticeSite::new(&alt);
        }
        groups.entry(z).or_default().push(p.clone());
    }
    groups
        .into_iter()
        .map(|(z, pts)| {
            let b = BoxRegion::site(&z, s)?;
            Ok((z, MarkedConfiguration::with_tolerance(pts, b, x.tolerance())?))
        })
        .collect()
}

/// Sites of `window` whose box holds at least one point of `x2`.
pub fn occupancy(x2: &MarkedConfiguration, s: f64, window: &SiteWindow) -> Result<BTreeSet<LatticeSite>> {
    Ok(by_site(x2, s)?.into_keys().filter(|z| window.contains(z)).collect())
}

fn shift_to(z: &LatticeSite, s: f64) -> Result<Position> {
    Position::new(&z.0.iter().map(|&k| -(k as f64) * s).collect::<Vec<_>>())
}

/// Classifies every site of `window`.
///
/// `good` sees the bulk in site coordinates restricted to `Q_3s(o)`.
/// `perfect` sees the whole bulk and the sprinkling inside `Q_s(o)`, both in
/// site coordinates, and is only consulted for sites with a nonempty
/// sprinkling.
pub fn classify_sites<G, P>(
    x1: &MarkedConfiguration,
    x2: &MarkedConfiguration,
    s: f64,
    window: &SiteWindow,
    good: G,
    perfect: P,
) -> Result<SiteField>
where
    G: Fn(&MarkedConfiguration) -> bool,
    P: Fn(&MarkedConfiguration, &MarkedConfiguration) -> Result<bool>,
{
    if !(s > 0.0) {
        return Err(invalid!("site scale must be positive, got {s}"));
    }
    if x1.dim() != window.dim() || x2.dim() != window.dim() {
        return Err(invalid!("configurations and site window differ in dimension"));
    }
    let sprinkled = by_site(x2, s)?;
    let mut y = Vec::with_capacity(window.len());
    for z in window.sites() {
        let shift = shift_to(&z, s)?;
        let q3 = BoxRegion::new(Position::new(&z.0.iter().map(|&k| k as f64 * s).collect::<Vec<_>>())?, 3.0 * s)?;
        let near = x1.restrict(&q3).translate(&shift)?;
        let v = match sprinkled.get(&z) {
            None if good(&near) => 0,
            None => 2,
            Some(local) => {
                if perfect(&x1.translate(&shift)?, &local.translate(&shift)?)? {
                    1
                } else {
                    2
                }
            }
        };
        y.push(v);
    }
    SiteField::new(window.clone(), y)
}

/// `classify_sites` with the good and perfect events of `model`.
pub fn classify_with_model(
    x1: &MarkedConfiguration,
    x2: &MarkedConfiguration,
    s: f64,
    window: &SiteWindow,
    model: &Model,
) -> Result<SiteField> {
    classify_sites(x1, x2, s, window, |near| model.is_good(near, s), |a, b| model.is_perfect(a, b, s))
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RevealedSet {
    pub revealed: BTreeSet<LatticeSite>,
    pub bad: BTreeSet<LatticeSite>,
    /// Processed bad sites, in processing order.
    pub trace: Vec<LatticeSite>,
}

fn block(z: &LatticeSite) -> Vec<LatticeSite> {
    crate::geom::sites_within(z.dim(), BLOCK_RADIUS).into_iter().map(|d| z.add(&d)).collect()
}

fn block_revealed(z: &LatticeSite, window: &SiteWindow, revealed: &BTreeSet<LatticeSite>) -> bool {
    block(z).iter().all(|w| !window.contains(w) || revealed.contains(w))
}

fn initial(field: &SiteField) -> RevealedSet {
    let bad: BTreeSet<LatticeSite> =
        field.window.sites().zip(field.values()).filter(|(_, &v)| v == 2).map(|(z, _)| z).collect();
    RevealedSet { revealed: bad.clone(), bad, trace: Vec::new() }
}

fn process(set: &mut RevealedSet, z: &LatticeSite, window: &SiteWindow, occupied: &BTreeSet<LatticeSite>) -> Vec<LatticeSite> {
    let mut fresh = Vec::new();
    for w in block(z) {
        if !window.contains(&w) {
            continue;
        }
        set.revealed.insert(w.clone());
        if occupied.contains(&w) && set.bad.insert(w.clone()) {
            fresh.push(w);
        }
    }
    set.trace.push(z.clone());
    fresh
}

/// Runs the exploration. `occupied` lists the sites with a nonempty
/// sprinkling; sites outside the field's window are ignored.
pub fn reveal(field: &SiteField, occupied: &BTreeSet<LatticeSite>) -> RevealedSet {
    let window = &field.window;
    let mut set = initial(field);
    // Ordered by distance to the origin, then lexicographically. A popped
    // site whose block is already revealed stays so, since R only grows.
    let mut queue: BTreeSet<(i64, LatticeSite)> = set.bad.iter().map(|z| (z.norm2(), z.clone())).collect();
    while let Some((_, z)) = queue.pop_first() {
        if block_revealed(&z, window, &set.revealed) {
            continue;
        }
        for w in process(&mut set, &z, window, occupied) {
            queue.insert((w.norm2(), w));
        }
    }
    set
}

/// Re-executes `trace`, checking at each step that the site processed is
/// the one the exploration would pick, and that the trace is complete.
pub fn replay(field: &SiteField, occupied: &BTreeSet<LatticeSite>, trace: &[LatticeSite]) -> Result<RevealedSet> {
    let window = &field.window;
    let mut set = initial(field);
    let pending = |set: &RevealedSet| {
        set.bad.iter().filter(|z| !block_revealed(z, window, &set.revealed)).min_by_key(|z| (z.norm2(), (*z).clone())).cloned()
    };
    for (step, z) in trace.iter().enumerate() {
        match pending(&set) {
            Some(want) if &want == z => {
                process(&mut set, z, window, occupied);
            }
            want => {
                return Err(Error::Precondition(format!("trace step {step} processes {z:?}, expected {want:?}")));
            }
        }
    }
    if let Some(z) = pending(&set) {
        return Err(Error::Precondition(format!("trace ends with bad site {z:?} unexplored")));
    }
    Ok(set)
}

/// `X1` together with the sprinkled points whose site is revealed.
pub fn assemble_x3(
    x1: &MarkedConfiguration,
    x2: &MarkedConfiguration,
    revealed: &BTreeSet<LatticeSite>,
    s: f64,
) -> Result<MarkedConfiguration> {
    let mut pts = x1.points().to_vec();
    for (z, local) in by_site(x2, s)? {
        if revealed.contains(&z) {
            pts.extend(local.points().iter().cloned());
        }
    }
    MarkedConfiguration::with_tolerance(pts, x1.window().clone(), x1.tolerance())
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IncrementalReport {
    /// Sites in the order they were added.
    pub order: Vec<LatticeSite>,
    /// `(point id, index into order)` for points captured by an added site.
    pub captured: Vec<(u64, usize)>,
    /// Points whose descendant changed other than by capture.
    pub violations: Vec<u64>,
    /// Points that entered an added nonempty site yet kept their descendant.
    pub contradictions: Vec<(u64, LatticeSite)>,
    /// Edges of the final graph by id.
    pub final_edges: BTreeMap<u64, Option<u64>>,
}

impl IncrementalReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.contradictions.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Fate {
    Kept(Option<u64>),
    Captured(usize, Option<u64>),
}

/// Adds the sites of `rest` to `x3` one at a time in `order`, recomputing the
/// graph after each, and checks that every point of `x3` either keeps its
/// descendant throughout or is captured by the site just added (descendant
/// among its points, geometric descendant inside its box) and keeps that.
pub fn incremental_check(
    x3: &MarkedConfiguration,
    rest: &[(LatticeSite, MarkedConfiguration)],
    order: &[usize],
    model: &Model,
    s: f64,
    exec: Execution,
) -> Result<IncrementalReport> {
    let mut seen = vec![false; rest.len()];
    if order.len() != rest.len() || order.iter().any(|&k| k >= rest.len() || std::mem::replace(&mut seen[k], true)) {
        return Err(Error::Precondition("order is not a permutation of the added sites".into()));
    }
    let boxes: Vec<BoxRegion> = rest.iter().map(|(z, _)| BoxRegion::site(z, s)).collect::<Result<_>>()?;
    for ((z, local), b) in rest.iter().zip(&boxes) {
        if let Some(p) = local.points().iter().find(|p| !b.contains(&p.position)) {
            return Err(Error::Precondition(format!("point {} is outside its site {z:?}", p.id)));
        }
        if local.points().iter().any(|p| x3.index_of(p.id).is_some()) {
            return Err(Error::Precondition(format!("site {z:?} reuses ids of the base configuration")));
        }
    }
    let distinct: BTreeSet<&LatticeSite> = rest.iter().map(|(z, _)| z).collect();
    if distinct.len() != rest.len() {
        return Err(Error::Precondition("added sites are not distinct".into()));
    }

    let g0 = model.build_graph(x3, exec)?;
    let mut fate: Vec<Fate> = (0..x3.len()).map(|i| Fate::Kept(g0.next(i).map(|j| g0.id(j)))).collect();
    let mut rep = IncrementalReport { order: order.iter().map(|&k| rest[k].0.clone()).collect(), ..Default::default() };
    let mut bad: BTreeSet<u64> = BTreeSet::new();
    let mut cur = x3.clone();
    let mut graph = g0;
    for (step, &k) in order.iter().enumerate() {
        let added = &rest[k].1;
        cur = cur.union(added, cur.window().clone()).map_err(|e| Error::Precondition(e.to_string()))?;
        graph = model.build_graph(&cur, exec)?;
        for (i, p) in x3.points().iter().enumerate() {
            let gi = cur.index_of(p.id).expect("base point present");
            let now = graph.next(gi).map(|j| graph.id(j));
            fate[i] = match fate[i] {
                Fate::Kept(d) if d == now => Fate::Kept(d),
                Fate::Kept(_) => {
                    let into_site = now.is_some_and(|y| added.index_of(y).is_some());
                    let home = graph.geo(gi).is_some_and(|g| boxes[k].contains(g));
                    if into_site && home {
                        rep.captured.push((p.id, step));
                        Fate::Captured(step, now)
                    } else {
                        bad.insert(p.id);
                        Fate::Kept(now)
                    }
                }
                Fate::Captured(st, d) => {
                    if d != now {
                        bad.insert(p.id);
                    }
                    Fate::Captured(st, now)
                }
            };
        }
    }
    rep.violations = bad.into_iter().collect();

    for (i, p) in x3.points().iter().enumerate() {
        if !matches!(fate[i], Fate::Kept(_)) || rep.violations.contains(&p.id) {
            continue;
        }
        let gi = cur.index_of(p.id).expect("base point present");
        for ((z, local), b) in rest.iter().zip(&boxes) {
            if !local.is_empty() && !b.contains(&p.position) && graph.geo(gi).is_some_and(|g| b.contains(g)) {
                rep.contradictions.push((p.id, z.clone()));
            }
        }
    }
    rep.final_edges = graph.edges_by_id();
    Ok(rep)
}

/// Runs `incremental_check` under `orders` random enumerations drawn from
/// `seed`; the flag reports whether all final graphs agree.
pub fn order_independence(
    x3: &MarkedConfiguration,
    rest: &[(LatticeSite, MarkedConfiguration)],
    model: &Model,
    s: f64,
    seed: u64,
    orders: usize,
    exec: Execution,
) -> Result<(bool, Vec<IncrementalReport>)> {
    let mut rng = stream(seed, 0);
    let mut reports = Vec::with_capacity(orders);
    for _ in 0..orders {
        let mut order: Vec<usize> = (0..rest.len()).collect();
        order.shuffle(&mut rng);
        reports.push(incremental_check(x3, rest, &order, model, s, exec)?);
    }
    let same = reports.windows(2).all(|w| w[0].final_edges == w[1].final_edges);
    Ok((same, reports))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    /// Component sizes, largest first.
    pub sizes: Vec<usize>,
    /// Fraction of window sites in `R`.
    pub density: f64,
    /// Largest component over the window size.
    pub largest_fraction: f64,
}

/// Components of `R ∩ window` under sup-norm adjacency.
pub fn cluster_stats(revealed: &BTreeSet<LatticeSite>, window: &SiteWindow) -> ClusterStats {
    let inside: BTreeSet<&LatticeSite> = revealed.iter().filter(|z| window.contains(z)).collect();
    let steps: Vec<LatticeSite> =
        crate::geom::sites_within(window.dim(), 1).into_iter().filter(|d| d.sup_norm() > 0).collect();
    let mut done: BTreeSet<&LatticeSite> = BTreeSet::new();
    let mut sizes = Vec::new();
    for &start in &inside {
        if !done.insert(start) {
            continue;
        }
        let mut size = 0usize;
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(z) = queue.pop_front() {
            size += 1;
            for d in &steps {
                let w = z.add(d);
                if let Some(&w) = inside.get(&w) {
                    if done.insert(w) {
                        queue.push_back(w.clone());
                    }
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let n = window.len() as f64;
    ClusterStats {
        density: inside.len() as f64 / n,
        largest_fraction: sizes.first().copied().unwrap_or(0) as f64 / n,
        sizes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Mark, MarkedPoint};

    fn site(x: i64, y: i64) -> LatticeSite {
        LatticeSite::new(&[x, y])
    }

    fn field_with_bad(r: i64, bad: &[LatticeSite]) -> SiteField {
        let mut f = SiteField::filled(SiteWindow::cube(2, r).unwrap(), 0).unwrap();
        for z in bad {
            f.set(z, 2).unwrap();
        }
        f
    }

    #[test]
    fn window_indexing_round_trips() {
        let w = SiteWindow::new(vec![-2, 1], vec![3, 4]).unwrap();
        assert_eq!(w.len(), 24);
        for (i, z) in w.sites().enumerate() {
            assert_eq!(w.index(&z), Some(i));
        }
        assert_eq!(w.index(&site(0, 0)), None);
        let b = BoxRegion::centered(2, 10.0).unwrap();
        // Q_{3s}(s z) inside Q_10(o) at s = 2 needs |z| <= 1.
        assert_eq!(SiteWindow::inside(&b, 2.0, 1).unwrap(), SiteWindow::cube(2, 1).unwrap());
    }

    #[test]
    fn no_bad_sites_reveal_nothing() {
        let f = field_with_bad(4, &[]);
        let r = reveal(&f, &BTreeSet::new());
        assert!(r.revealed.is_empty() && r.bad.is_empty() && r.trace.is_empty());
    }

    #[test]
    fn single_bad_site_reveals_one_block() {
        let f = field_with_bad(4, &[site(0, 0)]);
        let r = reveal(&f, &BTreeSet::new());
        assert_eq!(r.revealed.len(), 25);
        assert!(r.revealed.iter().all(|z| z.sup_norm() <= 2));
        assert_eq!(r.bad, BTreeSet::from([site(0, 0)]));
        assert_eq!(r.trace, vec![site(0, 0)]);
    }

    #[test]
    fn uncovered_sprinkling_spreads_the_exploration() {
        // The block around o uncovers an occupied perfect site at (2, 0),
        // whose block then adds two more columns.
        let mut f = field_with_bad(6, &[site(0, 0)]);
        f.set(&site(2, 0), 1).unwrap();
        f.set(&site(5, 5), 1).unwrap();
        let occupied = BTreeSet::from([site(2, 0), site(5, 5)]);
        let r = reveal(&f, &occupied);
        assert_eq!(r.trace, vec![site(0, 0), site(2, 0)]);
        assert_eq!(r.revealed.len(), 35);
        assert_eq!(r.bad, BTreeSet::from([site(0, 0), site(2, 0)]));
        assert_eq!(replay(&f, &occupied, &r.trace).unwrap(), r);
    }

    #[test]
    fn closest_bad_site_goes_first() {
        let f = field_with_bad(8, &[site(6, 0), site(0, -5), site(-5, 0)]);
        let r = reveal(&f, &BTreeSet::new());
        // (-5, 0) and (0, -5) tie on distance; the lexicographic minimum wins.
        assert_eq!(r.trace, vec![site(-5, 0), site(0, -5), site(6, 0)]);
    }

    #[test]
    fn blocks_are_clipped_at_the_window() {
        let f = field_with_bad(3, &[site(3, 3)]);
        let r = reveal(&f, &BTreeSet::new());
        assert_eq!(r.revealed.len(), 9);
    }

    #[test]
    fn replay_rejects_a_tampered_trace() {
        let f = field_with_bad(8, &[site(6, 0), site(0, -5)]);
        let r = reveal(&f, &BTreeSet::new());
        let mut t = r.trace.clone();
        t.swap(0, 1);
        assert!(replay(&f, &BTreeSet::new(), &t).is_err());
        assert!(replay(&f, &BTreeSet::new(), &r.trace[..1]).is_err());
    }

    #[test]
    fn cluster_statistics() {
        let w = SiteWindow::cube(2, 5).unwrap();
        let empty = cluster_stats(&BTreeSet::new(), &w);
        assert_eq!(empty.density, 0.0);
        assert!(empty.sizes.is_empty());
        let r = reveal(&field_with_bad(5, &[site(0, 0)]), &BTreeSet::new());
        let one = cluster_stats(&r.revealed, &w);
        assert_eq!(one.sizes, vec![25]);
        assert_eq!(one.largest_fraction, 25.0 / 121.0);
        // Diagonal neighbours are adjacent.
        let diag = cluster_stats(&BTreeSet::from([site(0, 0), site(1, 1), site(3, 3)]), &w);
        assert_eq!(diag.sizes, vec![2, 1]);
    }

    #[test]
    fn assembly_keeps_revealed_sprinkling_only() {
        let w = BoxRegion::centered(2, 12.0).unwrap();
        let mk = |id, x, y| MarkedPoint::new(id, Position::xy(x, y), Mark::Rank(1));
        let x1 = MarkedConfiguration::new(vec![mk(0, 0.3, 0.1)], w.clone()).unwrap();
        let x2 = MarkedConfiguration::new(vec![mk(1, 4.1, 0.2), mk(2, -3.9, 0.4)], w).unwrap();
        assert_eq!(assemble_x3(&x1, &x2, &BTreeSet::new(), 4.0).unwrap(), x1);
        let x3 = assemble_x3(&x1, &x2, &BTreeSet::from([site(1, 0)]), 4.0).unwrap();
        assert_eq!(x3.ids(), vec![0, 1]);
        let all = assemble_x3(&x1, &x2, &BTreeSet::from([site(1, 0), site(-1, 0)]), 4.0).unwrap();
        assert_eq!(all.len(), 3);
    }

    #[test]
    fn classification_follows_the_checkers() {
        let w = BoxRegion::centered(2, 12.0).unwrap();
        let mk = |id, x, y| MarkedPoint::new(id, Position::xy(x, y), Mark::Rank(1));
        let x1 = MarkedConfiguration::empty(w.clone());
        let x2 = MarkedConfiguration::new(vec![mk(1, 4.1, 0.2), mk(2, -3.9, 0.4)], w).unwrap();
        let win = SiteWindow::cube(2, 1).unwrap();
        let f = classify_sites(&x1, &MarkedConfiguration::empty(x1.window().clone()), 4.0, &win, |_| true, |_, _| Ok(true))
            .unwrap();
        assert_eq!(f.counts(), [9, 0, 0]);
        // Only the sprinkling at (1, 0) passes the perfect checker.
        let f = classify_sites(
            &x1,
            &x2,
            4.0,
            &win,
            |_| true,
            |_, local| Ok(local.points().iter().all(|p| p.id == 1)),
        )
        .unwrap();
        assert_eq!(f.get(&site(1, 0)), Some(1));
        assert_eq!(f.get(&site(-1, 0)), Some(2));
        assert_eq!(f.counts(), [7, 1, 1]);
    }

    #[test]
    fn incremental_with_no_sites_is_vacuous() {
        let w = BoxRegion::centered(2, 12.0).unwrap();
        let x = crate::ppgen::sample_poisson(&w, 1.0, &crate::ppgen::MarkLaw::Direction, 5).unwrap();
        let rep = incremental_check(&x, &[], &[], &Model::Lilypond, 4.0, Execution::Sequential).unwrap();
        assert!(rep.passed() && rep.captured.is_empty());
        assert!(incremental_check(&x, &[], &[0], &Model::Lilypond, 4.0, Execution::Sequential).is_err());
    }
}
