//! Small four-cycles of chasing segments.
//!
//! In a cycle `x_1, .., x_4` each germ is stopped by the next one, the
//! directions turn clockwise along the cycle (`v_j` is `v_{j+1}` turned
//! counter-clockwise), and every base faces the centre in both `v_j` and
//! `v_{j+1}`.

use rand::Rng;

use super::solve;
use crate::geom::{BoxRegion, Dir, Mark, MarkedConfiguration, MarkedPoint, Position};
use crate::rng::stream;

/// A reference cycle in the unit square around the origin, in cycle order.
pub const UNIT_TEMPLATE: [([f64; 2], Dir); 4] = [
    ([0.12, 0.36], Dir::NegE2),
    ([0.44, -0.16], Dir::NegE1),
    ([-0.12, -0.36], Dir::PosE2),
    ([-0.44, 0.14], Dir::PosE1),
];

#[derive(Debug, Clone, PartialEq)]
pub struct FourCycle {
    /// In cycle order: `points[j]` is stopped by `points[(j + 1) % 4]`.
    pub points: Vec<MarkedPoint>,
    pub center: Position,
    pub scale: f64,
}

impl FourCycle {
    /// Renumbers the points `first, .., first + 3`.
    pub fn with_ids(mut self, first: u64) -> Self {
        for (j, p) in self.points.iter_mut().enumerate() {
            p.id = first + j as u64;
        }
        self
    }
}

/// Orders four points so that each direction is followed by its clockwise
/// turn. `None` unless the four directions are distinct.
pub fn cycle_order(points: &[MarkedPoint]) -> Option<[usize; 4]> {
    if points.len() != 4 {
        return None;
    }
    let mut by_dir = [usize::MAX; 4];
    for (i, p) in points.iter().enumerate() {
        let d = p.mark.direction()?;
        if by_dir[d.index()] != usize::MAX {
            return None;
        }
        by_dir[d.index()] = i;
    }
    let mut order = [0usize; 4];
    let mut d = points[0].mark.direction()?;
    for slot in &mut order {
        *slot = by_dir[d.index()];
        d = d.rotate_cw();
    }
    Some(order)
}

/// Whether the four points form a cycle centred at `xi` with scale `delta`.
/// The points may be given in any order.
pub fn is_cycle(points: &[MarkedPoint], xi: &Position, delta: f64) -> bool {
    let Ok(b) = BoxRegion::new(xi.clone(), delta) else { return false };
    if points.len() != 4 || !points.iter().all(|p| b.contains(&p.position)) {
        return false;
    }
    let Some(order) = cycle_order(points) else { return false };
    let Ok(d) = MarkedConfiguration::new(points.to_vec(), b.clone()) else { return false };
    let Ok(sol) = solve(&d) else { return false };
    let c = xi.to_xy();
    for j in 0..4 {
        let (i, k) = (order[j], order[(j + 1) % 4]);
        if sol.stopper[i] != Some(k) {
            return false;
        }
        let Some(tip) = sol.tip[i] else { return false };
        if !b.contains_closed(&Position::xy(tip[0], tip[1])) {
            return false;
        }
        let p = points[i].xy();
        let to_centre = [c[0] - p[0], c[1] - p[1]];
        let vj = points[i].mark.direction().expect("checked").vector();
        let vk = points[k].mark.direction().expect("checked").vector();
        let dot = |v: [f64; 2]| to_centre[0] * v[0] + to_centre[1] * v[1];
        if !(dot(vj) > 0.0 && dot(vk) > 0.0) {
            return false;
        }
    }
    true
}

/// Minimum separation between any two of the eight unit coordinates, and
/// between coordinates and the unit square's sides.
const UNIT_MARGIN: f64 = 0.02;

fn unit_pinwheel(seed: u64) -> [[f64; 2]; 4] {
    let mut rng = stream(seed, 0);
    loop {
        let mut m = || rng.random_range(UNIT_MARGIN..0.5 - UNIT_MARGIN);
        let a = [m(), m()];
        let b = [m(), -m()];
        let c = [-m(), -m()];
        let d = [-m(), m()];
        // Each germ reaches the next one's line before that one reaches its own.
        let chase = b[0] > a[0]
            && b[0] - a[0] < a[1] - b[1]
            && c[1] < b[1]
            && b[1] - c[1] < b[0] - c[0]
            && d[0] < c[0]
            && c[0] - d[0] < d[1] - c[1]
            && a[1] > d[1]
            && a[1] - d[1] < a[0] - d[0];
        if !chase {
            continue;
        }
        let mut coords: Vec<f64> = [a, b, c, d].iter().flat_map(|p| p.iter().copied()).collect();
        coords.sort_by(f64::total_cmp);
        if coords.windows(2).any(|w| w[1] - w[0] < UNIT_MARGIN) {
            continue;
        }
        let pts = [a, b, c, d];
        let marked: Vec<MarkedPoint> = pts
            .iter()
            .zip(UNIT_TEMPLATE.iter())
            .enumerate()
            .map(|(j, (p, t))| MarkedPoint::new(j as u64, Position::xy(p[0], p[1]), Mark::Direction(t.1)))
            .collect();
        if is_cycle(&marked, &Position::origin(2), 1.0) {
            return pts;
        }
    }
}

/// A random cycle centred at `xi` with scale `delta`: the image of a seeded
/// unit cycle under `p -> xi + delta * p`.
pub fn make_cycle(xi: &Position, delta: f64, seed: u64) -> FourCycle {
    assert!(delta > 0.0, "cycle scale must be positive");
    let c = xi.to_xy();
    let unit = unit_pinwheel(seed);
    let points = unit
        .iter()
        .zip(UNIT_TEMPLATE.iter())
        .enumerate()
        .map(|(j, (p, t))| {
            MarkedPoint::new(
                j as u64,
                Position::xy(c[0] + delta * p[0], c[1] + delta * p[1]),
                Mark::Direction(t.1),
            )
        })
        .collect();
    FourCycle { points, center: xi.clone(), scale: delta }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn template(xi: [f64; 2], delta: f64) -> Vec<MarkedPoint> {
        UNIT_TEMPLATE
            .iter()
            .enumerate()
            .map(|(j, (p, d))| {
                MarkedPoint::new(
                    j as u64,
                    Position::xy(xi[0] + delta * p[0], xi[1] + delta * p[1]),
                    Mark::Direction(*d),
                )
            })
            .collect()
    }

    #[test]
    fn template_is_a_cycle() {
        assert!(is_cycle(&template([0.0, 0.0], 1.0), &Position::origin(2), 1.0));
        assert!(is_cycle(&template([2.5, 2.5], 5.0), &Position::xy(2.5, 2.5), 5.0));
    }

    #[test]
    fn flipped_mark_breaks_it() {
        let mut pts = template([0.0, 0.0], 1.0);
        pts[2].mark = Mark::Direction(Dir::NegE2);
        assert!(!is_cycle(&pts, &Position::origin(2), 1.0));
    }

    #[test]
    fn order_is_recovered_from_any_permutation() {
        let pts = template([0.0, 0.0], 1.0);
        let shuffled = vec![pts[2].clone(), pts[0].clone(), pts[3].clone(), pts[1].clone()];
        // C, A, D, B: from C the clockwise turns visit D, A, B.
        assert_eq!(cycle_order(&shuffled), Some([0, 2, 1, 3]));
        assert!(is_cycle(&shuffled, &Position::origin(2), 1.0));
    }

    #[test]
    fn generated_cycles_round_trip_and_scale() {
        for seed in 0..100 {
            let c = make_cycle(&Position::origin(2), 1.0, seed);
            assert!(is_cycle(&c.points, &c.center, 1.0), "seed {seed}");
            let xi = Position::xy(3.25, -1.5);
            let big = make_cycle(&xi, 0.01, seed);
            assert!(is_cycle(&big.points, &xi, 0.01), "seed {seed}");
            for (p, q) in c.points.iter().zip(&big.points) {
                let expect = xi.add(&p.position.scale(0.01));
                assert!(expect.dist(&q.position) < 1e-12);
            }
        }
    }
}
