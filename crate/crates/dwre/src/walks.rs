//! Out-degree-one walk graphs: tracing, basins, boundary sets and the
//! shielding check.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{BoxRegion, LatticeSite, MarkedConfiguration, Position};

/// Functional graph on the points of a configuration. Node `i` is point `i`.
///
/// A node is censored iff it has no out-edge; censored nodes carry no
/// geometric descendant either.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkGraph {
    ids: Vec<u64>,
    next: Vec<Option<usize>>,
    geo: Vec<Option<Position>>,
}

impl WalkGraph {
    pub fn new(ids: Vec<u64>, next: Vec<Option<usize>>, geo: Vec<Option<Position>>) -> Result<Self> {
        let n = ids.len();
        if next.len() != n || geo.len() != n {
            return Err(Error::Invalid("walk graph arrays differ in length".into()));
        }
        for i in 0..n {
            if next[i].is_some() != geo[i].is_some() {
                return Err(Error::Invalid(format!("node {i}: edge and geometric descendant disagree")));
            }
            if let Some(j) = next[i] {
                if j >= n {
                    return Err(Error::Invalid(format!("node {i} points past the end")));
                }
            }
        }
        Ok(WalkGraph { ids, next, geo })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> u64 {
        self.ids[i]
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn next(&self, i: usize) -> Option<usize> {
        self.next[i]
    }

    pub fn geo(&self, i: usize) -> Option<&Position> {
        self.geo[i].as_ref()
    }

    pub fn is_censored(&self, i: usize) -> bool {
        self.next[i].is_none()
    }

    pub fn censored_count(&self) -> usize {
        self.next.iter().filter(|n| n.is_none()).count()
    }

    pub fn censor(&mut self, i: usize) {
        self.next[i] = None;
        self.geo[i] = None;
    }

    /// Edges as `id -> Some(next id)` for order-independent comparison.
    pub fn edges_by_id(&self) -> BTreeMap<u64, Option<u64>> {
        (0..self.len()).map(|i| (self.ids[i], self.next[i].map(|j| self.ids[j]))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WalkOutcome {
    /// `tail` hops before entering a cycle of length `cycle`.
    Cycle { tail: usize, cycle: usize },
    /// The walk reached a censored node after `hops` hops.
    Censored { hops: usize },
}

impl WalkOutcome {
    pub fn is_censored(self) -> bool {
        matches!(self, WalkOutcome::Censored { .. })
    }
}

pub fn trace(g: &WalkGraph, x: usize) -> WalkOutcome {
    let mut seen: HashMap<usize, usize> = HashMap::new();
    let mut cur = x;
    let mut step = 0usize;
    loop {
        if let Some(&first) = seen.get(&cur) {
            return WalkOutcome::Cycle { tail: first, cycle: step - first };
        }
        seen.insert(cur, step);
        match g.next(cur) {
            None => return WalkOutcome::Censored { hops: step },
            Some(n) => cur = n,
        }
        step += 1;
    }
}

/// Outcomes for every start node in O(n), plus the cycle index of each
/// uncensored node.
pub fn trace_all(g: &WalkGraph) -> (Vec<WalkOutcome>, Vec<Option<usize>>) {
    const NEW: u8 = 0;
    const ACTIVE: u8 = 1;
    const DONE: u8 = 2;
    let n = g.len();
    let mut state = vec![NEW; n];
    let mut out = vec![WalkOutcome::Censored { hops: 0 }; n];
    let mut cycle_of: Vec<Option<usize>> = vec![None; n];
    let mut n_cycles = 0usize;
    let mut path: Vec<usize> = Vec::new();
    let mut pos_in_path = vec![usize::MAX; n];
    for start in 0..n {
        if state[start] != NEW {
            continue;
        }
        path.clear();
        let mut cur = start;
        // Base outcome and cycle id for the node right after the path.
        let (mut base, base_cycle, mut extra) = loop {
            if state[cur] == DONE {
                break (out[cur], cycle_of[cur], 1usize);
            }
            if state[cur] == ACTIVE {
                let p = pos_in_path[cur];
                let len = path.len() - p;
                for &v in &path[p..] {
                    out[v] = WalkOutcome::Cycle { tail: 0, cycle: len };
                    cycle_of[v] = Some(n_cycles);
                    state[v] = DONE;
                }
                n_cycles += 1;
                path.truncate(p);
                break (WalkOutcome::Cycle { tail: 0, cycle: len }, Some(n_cycles - 1), 1);
            }
            state[cur] = ACTIVE;
            pos_in_path[cur] = path.len();
            path.push(cur);
            match g.next(cur) {
                Some(nx) => cur = nx,
                None => {
                    path.pop();
                    out[cur] = WalkOutcome::Censored { hops: 0 };
                    state[cur] = DONE;
                    break (out[cur], None, 1);
                }
            }
        };
        while let Some(v) = path.pop() {
            base = match base {
                WalkOutcome::Cycle { tail, cycle } => WalkOutcome::Cycle { tail: tail + extra, cycle },
                WalkOutcome::Censored { hops } => WalkOutcome::Censored { hops: hops + extra },
            };
            extra = 1;
            out[v] = base;
            cycle_of[v] = base_cycle;
            state[v] = DONE;
        }
    }
    (out, cycle_of)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasinSummary {
    /// `(cycle length, basin size)` per cycle, in discovery order.
    pub basins: Vec<(usize, usize)>,
    /// `tail_histogram[t]` = uncensored nodes with tail length `t`.
    pub tail_histogram: Vec<usize>,
    pub uncensored: usize,
    pub censored: usize,
}

impl BasinSummary {
    pub fn censored_fraction(&self) -> f64 {
        let total = self.uncensored + self.censored;
        if total == 0 {
            0.0
        } else {
            self.censored as f64 / total as f64
        }
    }
}

pub fn basin_stats(g: &WalkGraph) -> BasinSummary {
    let (out, cycle_of) = trace_all(g);
    let mut basins: Vec<(usize, usize)> = Vec::new();
    let mut hist: Vec<usize> = Vec::new();
    let mut censored = 0;
    for (i, o) in out.iter().enumerate() {
        match *o {
            WalkOutcome::Censored { .. } => censored += 1,
            WalkOutcome::Cycle { tail, cycle } => {
                let c = cycle_of[i].expect("uncensored nodes have a cycle");
                if c >= basins.len() {
                    basins.resize(c + 1, (0, 0));
                }
                basins[c].0 = cycle;
                basins[c].1 += 1;
                if tail >= hist.len() {
                    hist.resize(tail + 1, 0);
                }
                hist[tail] += 1;
            }
        }
    }
    BasinSummary { basins, tail_histogram: hist, uncensored: g.len() - censored, censored }
}

/// Ids of points outside `Q_s(s z)` whose geometric descendant lies inside.
pub fn boundary_in(phi: &MarkedConfiguration, g: &WalkGraph, z: &LatticeSite, s: f64) -> Result<BTreeSet<u64>> {
    let b = BoxRegion::site(z, s)?;
    Ok((0..phi.len())
        .filter(|&i| !b.contains(&phi.point(i).position))
        .filter(|&i| g.geo(i).is_some_and(|p| b.contains(p)))
        .map(|i| phi.point(i).id)
        .collect())
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ShReport {
    pub checked: usize,
    /// Nodes whose successor is censored, so the second step is unknown.
    pub unverifiable: usize,
    pub violations: Vec<u64>,
}

impl ShReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Whether no site of `b` is reachable from infinity in `Z^d \ shield`
/// under nearest-neighbour adjacency.
pub fn is_enclosed(b: &BTreeSet<LatticeSite>, shield: &BTreeSet<LatticeSite>) -> bool {
    if b.is_empty() {
        return true;
    }
    if b.iter().any(|z| shield.contains(z)) {
        return false;
    }
    let d = b.iter().next().unwrap().dim();
    let all: Vec<&LatticeSite> = b.iter().chain(shield.iter()).collect();
    let lo: Vec<i64> = (0..d).map(|i| all.iter().map(|z| z.0[i]).min().unwrap() - 1).collect();
    let hi: Vec<i64> = (0..d).map(|i| all.iter().map(|z| z.0[i]).max().unwrap() + 1).collect();
    // Every site on the padded bounding box's surface is connected to infinity.
    let mut seen: HashSet<LatticeSite> = HashSet::new();
    let mut queue = VecDeque::new();
    let start = LatticeSite::new(&lo);
    seen.insert(start.clone());
    queue.push_back(start);
    while let Some(z) = queue.pop_front() {
        if b.contains(&z) {
            return false;
        }
        for i in 0..d {
            for step in [-1i64, 1] {
                let mut w = z.clone();
                w.0[i] += step;
                if w.0[i] < lo[i] || w.0[i] > hi[i] || shield.contains(&w) || seen.contains(&w) {
                    continue;
                }
                seen.insert(w.clone());
                queue.push_back(w);
            }
        }
    }
    true
}

/// Empirical shielding check: every `x` with `h_g(x)` in `B ⊕ Q_s(o)` must
/// have `ξ` and the second-step geometric descendant in `(B ∪ B') ⊕ Q_s(o)`.
pub fn check_sh<G: Fn(&LatticeSite) -> bool>(
    phi: &MarkedConfiguration,
    g: &WalkGraph,
    s: f64,
    good: G,
    b: &BTreeSet<LatticeSite>,
    shield: &BTreeSet<LatticeSite>,
) -> Result<ShReport> {
    if !is_enclosed(b, shield) {
        return Err(Error::Precondition("B is not enclosed by B'".into()));
    }
    if let Some(z) = shield.iter().find(|z| !good(z)) {
        return Err(Error::Precondition(format!("shield site {z:?} is not good")));
    }
    let mut rep = ShReport::default();
    let in_union = |p: &Position| {
        let z = LatticeSite::of(p, s);
        b.contains(&z) || shield.contains(&z)
    };
    for i in 0..phi.len() {
        let Some(h) = g.geo(i) else { continue };
        if !b.contains(&LatticeSite::of(h, s)) {
            continue;
        }
        rep.checked += 1;
        let y = g.next(i).expect("uncensored node has an edge");
        let Some(h2) = g.geo(y) else {
            rep.unverifiable += 1;
            continue;
        };
        if !in_union(&phi.point(i).position) || !in_union(h2) {
            rep.violations.push(phi.point(i).id);
        }
    }
    Ok(rep)
}

/// Position in the sequence from which the descendant of `x_id` stays
/// constant, or `None` for an empty sequence.
pub fn stabilization_index<F>(seq: &[MarkedConfiguration], x_id: u64, descend: F) -> Result<Option<usize>>
where
    F: Fn(&MarkedConfiguration, u64) -> Result<Option<u64>>,
{
    let ds: Vec<Option<u64>> = seq.iter().map(|c| descend(c, x_id)).collect::<Result<_>>()?;
    let Some(last) = ds.last() else { return Ok(None) };
    let mut k = ds.len() - 1;
    while k > 0 && ds[k - 1] == *last {
        k -= 1;
    }
    Ok(Some(k))
}

/// True iff the descendant has settled: the last two configurations agree
/// (a single configuration counts as settled).
pub fn check_stabilization<F>(seq: &[MarkedConfiguration], x_id: u64, descend: F) -> Result<bool>
where
    F: Fn(&MarkedConfiguration, u64) -> Result<Option<u64>>,
{
    Ok(match stabilization_index(seq, x_id, descend)? {
        None => false,
        Some(k) => k + 1 < seq.len() || seq.len() == 1,
    })
}
