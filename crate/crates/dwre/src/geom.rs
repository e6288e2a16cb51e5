//! Positions, marks, boxes and marked configurations.

use std::collections::HashMap;
use std::fmt;

use smallvec::SmallVec;

use crate::error::{invalid, Result};

/// Default relative tolerance for every predicate that feeds a branch.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// A point of `R^d` with finite coordinates.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Position(SmallVec<[f64; 3]>);

impl Position {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.is_empty() {
            return Err(invalid!("position needs at least one coordinate"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(invalid!("non-finite coordinate in {coords:?}"));
        }
        Ok(Position(SmallVec::from_slice(coords)))
    }

    /// Caller guarantees finiteness.
    pub(crate) fn from_slice_unchecked(coords: &[f64]) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        Position(SmallVec::from_slice(coords))
    }

    pub fn xy(x: f64, y: f64) -> Self {
        Self::from_slice_unchecked(&[x, y])
    }

    pub fn origin(dim: usize) -> Self {
        Position(SmallVec::from_elem(0.0, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    /// First two coordinates; panics for `d < 2`.
    pub fn to_xy(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn add(&self, other: &Position) -> Position {
        Position(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &Position) -> Position {
        Position(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, k: f64) -> Position {
        Position(self.0.iter().map(|a| a * k).collect())
    }

    pub fn neg(&self) -> Position {
        self.scale(-1.0)
    }

    pub fn dist2(&self, other: &Position) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    pub fn dist(&self, other: &Position) -> f64 {
        self.dist2(other).sqrt()
    }

    pub fn dist_sup(&self, other: &Position) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

impl fmt::Debug for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

/// One of the four axis directions of the plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    PosE1,
    NegE1,
    PosE2,
    NegE2,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::PosE1, Dir::NegE1, Dir::PosE2, Dir::NegE2];

    pub fn vector(self) -> [f64; 2] {
        match self {
            Dir::PosE1 => [1.0, 0.0],
            Dir::NegE1 => [-1.0, 0.0],
            Dir::PosE2 => [0.0, 1.0],
            Dir::NegE2 => [0.0, -1.0],
        }
    }

    /// Axis index: 0 for `±e1`, 1 for `±e2`.
    pub fn axis(self) -> usize {
        match self {
            Dir::PosE1 | Dir::NegE1 => 0,
            Dir::PosE2 | Dir::NegE2 => 1,
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Dir::PosE1 | Dir::PosE2 => 1.0,
            Dir::NegE1 | Dir::NegE2 => -1.0,
        }
    }

    pub fn from_axis_sign(axis: usize, positive: bool) -> Dir {
        match (axis, positive) {
            (0, true) => Dir::PosE1,
            (0, false) => Dir::NegE1,
            (_, true) => Dir::PosE2,
            (_, false) => Dir::NegE2,
        }
    }

    /// Counter-clockwise quarter turn: `e1 -> e2 -> -e1 -> -e2 -> e1`.
    pub fn rotate_ccw(self) -> Dir {
        match self {
            Dir::PosE1 => Dir::PosE2,
            Dir::PosE2 => Dir::NegE1,
            Dir::NegE1 => Dir::NegE2,
            Dir::NegE2 => Dir::PosE1,
        }
    }

    pub fn rotate_cw(self) -> Dir {
        self.rotate_ccw().rotate_ccw().rotate_ccw()
    }

    pub fn opposite(self) -> Dir {
        self.rotate_ccw().rotate_ccw()
    }

    pub fn index(self) -> usize {
        match self {
            Dir::PosE1 => 0,
            Dir::NegE1 => 1,
            Dir::PosE2 => 2,
            Dir::NegE2 => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Dir::PosE1 => "+e1",
            Dir::NegE1 => "-e1",
            Dir::PosE2 => "+e2",
            Dir::NegE2 => "-e2",
        }
    }

    pub fn parse(s: &str) -> Option<Dir> {
        Dir::ALL.into_iter().find(|d| d.label() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mark {
    /// Rank `k >= 1`: the walk moves to the k-th nearest neighbour.
    Rank(u32),
    Direction(Dir),
    None,
}

impl Mark {
    pub fn direction(self) -> Option<Dir> {
        match self {
            Mark::Direction(d) => Some(d),
            _ => None,
        }
    }

    pub fn rank(self) -> Option<u32> {
        match self {
            Mark::Rank(k) => Some(k),
            _ => None,
        }
    }

    pub fn label(self) -> String {
        match self {
            Mark::Rank(k) => format!("r{k}"),
            Mark::Direction(d) => d.label().to_string(),
            Mark::None => "-".to_string(),
        }
    }

    pub fn parse(s: &str) -> Result<Mark> {
        if s == "-" {
            return Ok(Mark::None);
        }
        if let Some(d) = Dir::parse(s) {
            return Ok(Mark::Direction(d));
        }
        if let Some(k) = s.strip_prefix('r') {
            let k: u32 = k.parse().map_err(|_| invalid!("bad rank mark {s:?}"))?;
            if k == 0 {
                return Err(invalid!("rank marks start at 1"));
            }
            return Ok(Mark::Rank(k));
        }
        Err(invalid!("unknown mark {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkedPoint {
    pub id: u64,
    pub position: Position,
    pub mark: Mark,
}

impl MarkedPoint {
    pub fn new(id: u64, position: Position, mark: Mark) -> Self {
        MarkedPoint { id, position, mark }
    }

    pub fn xy(&self) -> [f64; 2] {
        self.position.to_xy()
    }
}

/// Half-open cube `[c - side/2, c + side/2)^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub center: Position,
    pub side: f64,
}

impl BoxRegion {
    pub fn new(center: Position, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(invalid!("box side must be positive and finite, got {side}"));
        }
        Ok(BoxRegion { center, side })
    }

    /// `Q_side(o)` in dimension `dim`.
    pub fn centered(dim: usize, side: f64) -> Result<Self> {
        Self::new(Position::origin(dim), side)
    }

    /// `Q_s(s z)`, the site box of lattice site `z` at scale `s`.
    pub fn site(z: &LatticeSite, s: f64) -> Result<Self> {
        let c: Vec<f64> = z.0.iter().map(|&k| k as f64 * s).collect();
        Self::new(Position::new(&c)?, s)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn lo(&self, i: usize) -> f64 {
        self.center.coords()[i] - self.side / 2.0
    }

    pub fn hi(&self, i: usize) -> f64 {
        self.center.coords()[i] + self.side / 2.0
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn contains(&self, p: &Position) -> bool {
        (0..self.dim()).all(|i| {
            let c = p.coords()[i];
            c >= self.lo(i) && c < self.hi(i)
        })
    }

    pub fn contains_xy(&self, p: [f64; 2]) -> bool {
        p[0] >= self.lo(0) && p[0] < self.hi(0) && p[1] >= self.lo(1) && p[1] < self.hi(1)
    }

    pub fn contains_closed(&self, p: &Position) -> bool {
        (0..self.dim()).all(|i| {
            let c = p.coords()[i];
            c >= self.lo(i) && c <= self.hi(i)
        })
    }

    pub fn translate(&self, eta: &Position) -> BoxRegion {
        BoxRegion { center: self.center.add(eta), side: self.side }
    }

    /// Euclidean distance from `p` to the closed box (0 inside).
    pub fn dist_to(&self, p: &Position) -> f64 {
        (0..self.dim())
            .map(|i| {
                let c = p.coords()[i];
                let d = (self.lo(i) - c).max(c - self.hi(i)).max(0.0);
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Euclidean distance from `p` to the boundary of the closed box.
    pub fn dist_to_boundary(&self, p: &Position) -> f64 {
        if self.contains_closed(p) {
            (0..self.dim())
                .map(|i| {
                    let c = p.coords()[i];
                    (c - self.lo(i)).min(self.hi(i) - c)
                })
                .fold(f64::INFINITY, f64::min)
        } else {
            self.dist_to(p)
        }
    }

    /// True iff the closed boxes share interior points.
    pub fn overlaps(&self, other: &BoxRegion) -> bool {
        (0..self.dim()).all(|i| self.lo(i) < other.hi(i) && other.lo(i) < self.hi(i))
    }
}

/// `parts^d` congruent half-open sub-boxes tiling `b`, in row-major order
/// (last axis fastest).
pub fn subcube_partition(b: &BoxRegion, parts: usize) -> Result<Vec<BoxRegion>> {
    if parts == 0 {
        return Err(invalid!("parts_per_axis must be at least 1"));
    }
    let d = b.dim();
    let side = b.side / parts as f64;
    let total = parts.checked_pow(d as u32).ok_or_else(|| invalid!("partition too large"))?;
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let c: Vec<f64> = (0..d).map(|i| b.lo(i) + (idx[i] as f64 + 0.5) * side).collect();
        out.push(BoxRegion { center: Position::from_slice_unchecked(&c), side });
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < parts {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(out)
}

/// A site of the integer lattice `Z^d`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeSite(pub SmallVec<[i64; 3]>);

impl LatticeSite {
    pub fn new(z: &[i64]) -> Self {
        LatticeSite(SmallVec::from_slice(z))
    }

    pub fn origin(dim: usize) -> Self {
        LatticeSite(SmallVec::from_elem(0, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// The site whose box `Q_s(s z)` contains `p` (up to rounding at faces).
    pub fn of(p: &Position, s: f64) -> Self {
        LatticeSite(p.coords().iter().map(|&c| (c / s + 0.5).floor() as i64).collect())
    }

    pub fn sup_norm(&self) -> i64 {
        self.0.iter().map(|k| k.abs()).max().unwrap_or(0)
    }

    pub fn norm2(&self) -> i64 {
        self.0.iter().map(|k| k * k).sum()
    }

    pub fn add(&self, other: &LatticeSite) -> LatticeSite {
        LatticeSite(self.0.iter().zip(other.0.iter()).map(|(a, b)| a + b).collect())
    }

    pub fn sub(&self, other: &LatticeSite) -> LatticeSite {
        LatticeSite(self.0.iter().zip(other.0.iter()).map(|(a, b)| a - b).collect())
    }
}

impl fmt::Debug for LatticeSite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0.as_slice())
    }
}

/// All sites `z` with `|z|_inf <= r` in dimension `dim`, lexicographic order.
pub fn sites_within(dim: usize, r: i64) -> Vec<LatticeSite> {
    let width = (2 * r + 1) as usize;
    let total = width.pow(dim as u32);
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![-r; dim];
    for _ in 0..total {
        out.push(LatticeSite::new(&idx));
        for i in (0..dim).rev() {
            idx[i] += 1;
            if idx[i] <= r {
                break;
            }
            idx[i] = -r;
        }
    }
    out
}

/// A finite marked point set inside a sampling window.
///
/// Positions are pairwise distinct, ids are unique, and every point lies in
/// the (half-open) window. Ids need not coincide with indices.
#[derive(Debug, Clone)]
pub struct MarkedConfiguration {
    points: Vec<MarkedPoint>,
    window: BoxRegion,
    tolerance: f64,
    by_id: HashMap<u64, usize>,
}

impl PartialEq for MarkedConfiguration {
    fn eq(&self, other: &Self) -> bool {
        self.points == other.points && self.window == other.window && self.tolerance == other.tolerance
    }
}

impl MarkedConfiguration {
    pub fn new(points: Vec<MarkedPoint>, window: BoxRegion) -> Result<Self> {
        Self::with_tolerance(points, window, DEFAULT_TOLERANCE)
    }

    pub fn with_tolerance(points: Vec<MarkedPoint>, window: BoxRegion, tolerance: f64) -> Result<Self> {
        if !(tolerance > 0.0 && tolerance.is_finite()) {
            return Err(invalid!("tolerance must be positive, got {tolerance}"));
        }
        let d = window.dim();
        let mut by_id = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.position.dim() != d {
                return Err(invalid!("point {} has dimension {}, window has {d}", p.id, p.position.dim()));
            }
            if !window.contains(&p.position) {
                return Err(invalid!("point {} at {:?} lies outside the window", p.id, p.position));
            }
            if by_id.insert(p.id, i).is_some() {
                return Err(invalid!("duplicate point id {}", p.id));
            }
        }
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a].position.coords().partial_cmp(points[b].position.coords()).unwrap()
        });
        for w in order.windows(2) {
            if points[w[0]].position == points[w[1]].position {
                return Err(invalid!(
                    "points {} and {} share position {:?}",
                    points[w[0]].id,
                    points[w[1]].id,
                    points[w[0]].position
                ));
            }
        }
        Ok(MarkedConfiguration { points, window, tolerance, by_id })
    }

    pub fn empty(window: BoxRegion) -> Self {
        MarkedConfiguration { points: Vec::new(), window, tolerance: DEFAULT_TOLERANCE, by_id: HashMap::new() }
    }

    pub fn points(&self) -> &[MarkedPoint] {
        &self.points
    }

    pub fn point(&self, idx: usize) -> &MarkedPoint {
        &self.points[idx]
    }

    pub fn window(&self) -> &BoxRegion {
        &self.window
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn dim(&self) -> usize {
        self.window.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn index_of(&self, id: u64) -> Option<usize> {
        self.by_id.get(&id).copied()
    }

    pub fn ids(&self) -> Vec<u64> {
        self.points.iter().map(|p| p.id).collect()
    }

    pub fn translate(&self, eta: &Position) -> Result<Self> {
        let pts = self
            .points
            .iter()
            .map(|p| MarkedPoint { id: p.id, position: p.position.add(eta), mark: p.mark })
            .collect();
        Self::with_tolerance(pts, self.window.translate(eta), self.tolerance)
    }

    /// Points inside `b`, with `b` as the new window.
    pub fn restrict(&self, b: &BoxRegion) -> Self {
        let points: Vec<MarkedPoint> = self.points.iter().filter(|p| b.contains(&p.position)).cloned().collect();
        let by_id = points.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        MarkedConfiguration { points, window: b.clone(), tolerance: self.tolerance, by_id }
    }

    /// Points satisfying `keep`, same window.
    pub fn filter<F: Fn(&MarkedPoint) -> bool>(&self, keep: F) -> Self {
        let points: Vec<MarkedPoint> = self.points.iter().filter(|p| keep(p)).cloned().collect();
        let by_id = points.iter().enumerate().map(|(i, p)| (p.id, i)).collect();
        MarkedConfiguration { points, window: self.window.clone(), tolerance: self.tolerance, by_id }
    }

    /// Union with `other` inside `window`; ids and positions must not collide.
    pub fn union(&self, other: &MarkedConfiguration, window: BoxRegion) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.extend(other.points.iter().cloned());
        Self::with_tolerance(pts, window, self.tolerance)
    }

    pub fn with_window(&self, window: BoxRegion) -> Result<Self> {
        Self::with_tolerance(self.points.clone(), window, self.tolerance)
    }

    pub fn into_points(self) -> Vec<MarkedPoint> {
        self.points
    }
}

/// Pairwise distinct distances with relative gap `> eps`, and at least
/// `k + 1` points. O(n^2 log n); meant for small configurations.
pub fn check_generic_knn(phi: &MarkedConfiguration, k: usize, eps: f64) -> bool {
    let n = phi.len();
    if n < k + 1 || n == 0 {
        return false;
    }
    let pts = phi.points();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(pts[i].position.dist(&pts[j].position));
        }
    }
    dists.sort_by(f64::total_cmp);
    dists.windows(2).all(|w| w[1] - w[0] > eps * w[1])
}

/// Offset direction `(dx, dy)` is within angular tolerance of an axis or a
/// diagonal.
pub(crate) fn forbidden_offset(dx: f64, dy: f64, eps: f64) -> bool {
    let r = dx.hypot(dy);
    let (ax, ay) = (dx.abs(), dy.abs());
    ax <= eps * r || ay <= eps * r || (ax - ay).abs() <= eps * r
}

/// No pair axis-aligned or exactly diagonal; all marks are directions; `d = 2`.
/// Infinite descending chains cannot occur in a finite sample, so they are
/// not checked.
pub fn check_generic_lily(phi: &MarkedConfiguration, eps: f64) -> bool {
    if phi.dim() != 2 || phi.points().iter().any(|p| p.mark.direction().is_none()) {
        return false;
    }
    let pts = phi.points();
    for i in 0..pts.len() {
        let a = pts[i].xy();
        for q in &pts[i + 1..] {
            let b = q.xy();
            if forbidden_offset(b[0] - a[0], b[1] - a[1], eps) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pts: &[([f64; 2], Mark)]) -> MarkedConfiguration {
        let points = pts
            .iter()
            .enumerate()
            .map(|(i, (p, m))| MarkedPoint::new(i as u64, Position::xy(p[0], p[1]), *m))
            .collect();
        MarkedConfiguration::new(points, BoxRegion::centered(2, 100.0).unwrap()).unwrap()
    }

    #[test]
    fn knn_genericity_examples() {
        let a = cfg(&[([0.0, 0.0], Mark::None), ([1.0, 0.0], Mark::None), ([3.0, 0.0], Mark::None)]);
        assert!(check_generic_knn(&a, 1, 1e-12));
        let b = cfg(&[([0.0, 0.0], Mark::None), ([1.0, 0.0], Mark::None), ([0.0, 1.0], Mark::None)]);
        assert!(!check_generic_knn(&b, 1, 1e-12));
        assert!(!check_generic_knn(&MarkedConfiguration::empty(BoxRegion::centered(2, 1.0).unwrap()), 1, 1e-12));
        assert!(!check_generic_knn(&a, 3, 1e-12));
    }

    #[test]
    fn lily_genericity_examples() {
        let e1 = Mark::Direction(Dir::PosE1);
        let e2 = Mark::Direction(Dir::PosE2);
        let w1 = Mark::Direction(Dir::NegE1);
        assert!(check_generic_lily(&cfg(&[([0.0, 0.0], e1), ([1.0, 0.3], e2)]), 1e-12));
        assert!(!check_generic_lily(&cfg(&[([0.0, 0.0], e1), ([2.0, 0.0], e2)]), 1e-12));
        assert!(!check_generic_lily(&cfg(&[([0.0, 0.0], e1), ([1.0, 1.0], w1)]), 1e-12));
        assert!(!check_generic_lily(&cfg(&[([0.0, 0.0], Mark::Rank(1)), ([1.0, 0.3], e2)]), 1e-12));
    }

    #[test]
    fn partition_counts() {
        let q9 = BoxRegion::centered(2, 9.0).unwrap();
        let parts = subcube_partition(&q9, 3).unwrap();
        assert_eq!(parts.len(), 9);
        assert!(parts.iter().all(|b| (b.side - 3.0).abs() < 1e-12));
        let q27 = BoxRegion::centered(2, 27.0).unwrap();
        assert_eq!(subcube_partition(&q27, 27).unwrap().len(), 729);
        assert!(subcube_partition(&q27, 0).is_err());
    }

    #[test]
    fn half_open_boxes() {
        let b = BoxRegion::centered(2, 2.0).unwrap();
        assert!(b.contains(&Position::xy(-1.0, -1.0)));
        assert!(!b.contains(&Position::xy(1.0, 0.0)));
        assert!(b.contains_closed(&Position::xy(1.0, 0.0)));
    }

    #[test]
    fn site_lookup_matches_box() {
        let s = 3.0;
        for &(x, y) in &[(0.2, -0.1), (1.6, 4.4), (-1.6, -4.6), (7.2, -2.9)] {
            let p = Position::xy(x, y);
            let z = LatticeSite::of(&p, s);
            assert!(BoxRegion::site(&z, s).unwrap().contains(&p), "{p:?} -> {z:?}");
        }
    }

    #[test]
    fn distances_to_box() {
        let b = BoxRegion::centered(2, 2.0).unwrap();
        assert!((b.dist_to_boundary(&Position::xy(0.5, 0.0)) - 0.5).abs() < 1e-15);
        assert!((b.dist_to_boundary(&Position::xy(4.0, 5.0)) - 5.0).abs() < 1e-15);
        assert_eq!(b.dist_to(&Position::xy(0.3, 0.3)), 0.0);
    }

    #[test]
    fn configuration_validation() {
        let w = BoxRegion::centered(2, 2.0).unwrap();
        let p = |id, x, y| MarkedPoint::new(id, Position::xy(x, y), Mark::None);
        assert!(MarkedConfiguration::new(vec![p(0, 0.0, 0.0), p(0, 0.5, 0.0)], w.clone()).is_err());
        assert!(MarkedConfiguration::new(vec![p(0, 0.0, 0.0), p(1, 0.0, 0.0)], w.clone()).is_err());
        assert!(MarkedConfiguration::new(vec![p(0, 1.0, 0.0)], w.clone()).is_err());
        let c = MarkedConfiguration::new(vec![p(5, 0.0, 0.0), p(9, 0.5, 0.0)], w).unwrap();
        assert_eq!(c.index_of(9), Some(1));
    }

    #[test]
    fn mark_labels_round_trip() {
        for m in [Mark::Rank(3), Mark::Direction(Dir::NegE2), Mark::None] {
            assert_eq!(Mark::parse(&m.label()).unwrap(), m);
        }
        assert!(Mark::parse("r0").is_err());
        assert!(Mark::parse("up").is_err());
    }

    #[test]
    fn rotation_cycle() {
        assert_eq!(Dir::PosE1.rotate_ccw(), Dir::PosE2);
        assert_eq!(Dir::PosE2.rotate_ccw(), Dir::NegE1);
        for d in Dir::ALL {
            assert_eq!(d.rotate_ccw().rotate_cw(), d);
        }
    }
}
