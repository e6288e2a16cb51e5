mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use dwre::exec::Execution;
use dwre::geom::{BoxRegion, LatticeSite, MarkedConfiguration, Position};
use dwre::harness::{self, ExperimentConfig, ModelKind};
use dwre::knn::{self, KnnIndex, KnnModel};
use dwre::walks::{check_sh, check_stabilization};

/// Rank-`r` neighbour by a full sort of all distances.
fn sorted_descendant(phi: &MarkedConfiguration, i: usize) -> (usize, f64) {
    let r = phi.point(i).mark.rank().expect("rank mark") as usize;
    let x = &phi.point(i).position;
    let mut d: Vec<(f64, usize)> =
        (0..phi.len()).filter(|&j| j != i).map(|j| (x.dist(&phi.point(j).position), j)).collect();
    d.sort_by(|a, b| a.0.total_cmp(&b.0));
    (d[r - 1].1, d[r - 1].0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn descendant_matches_a_full_sort(seed in any::<u64>(), k in 1usize..5, side in 3f64..14.0) {
        let phi = common::knn_sample(side, k, seed);
        prop_assume!(phi.len() > k && phi.len() <= 200);
        let m = KnnModel::uniform(k).unwrap();
        let idx = KnnIndex::new(&phi, &m);
        for i in 0..phi.len() {
            let (j, dist) = idx.descendant(i, &m).unwrap();
            let (oj, od) = sorted_descendant(&phi, i);
            prop_assert_eq!(j, oj);
            prop_assert_eq!(dist, od);
            // Exactly rank + 1 points in the closed ball through the descendant.
            let x = &phi.point(i).position;
            let inside = phi.points().iter().filter(|p| x.dist(&p.position) <= dist).count();
            prop_assert_eq!(inside, phi.point(i).mark.rank().unwrap() as usize + 1);
        }
    }

    #[test]
    fn descendant_settles_once_the_stabilization_ball_fits(seed in any::<u64>(), k in 1usize..4) {
        let phi = common::knn_sample(30.0, k, seed);
        let m = KnnModel::uniform(k).unwrap();
        let near: Vec<u64> = phi.points().iter().filter(|p| p.position.norm() < 2.0).map(|p| p.id).collect();
        prop_assume!(!near.is_empty());
        let seq: Vec<MarkedConfiguration> = (0..=5)
            .map(|j| phi.restrict(&BoxRegion::centered(2, 10.0 + 4.0 * j as f64).unwrap()))
            .collect();
        let descend = |c: &MarkedConfiguration, id: u64| -> dwre::Result<Option<u64>> {
            let Some(i) = c.index_of(id) else { return Ok(None) };
            if c.len() <= k {
                return Ok(None);
            }
            let (j, _) = knn::knn_descendant(c, i, &m)?;
            Ok(Some(j.id))
        };
        for &id in &near {
            let full = descend(&phi, id).unwrap();
            for c in &seq {
                let i = c.index_of(id).unwrap();
                if c.len() > k && knn::r_stab(c, i, &m).unwrap().inside(c.window()) {
                    prop_assert_eq!(descend(c, id).unwrap(), full);
                }
            }
            prop_assert!(check_stabilization(&seq, id, descend).unwrap() || descend(&seq[5], id).unwrap() != full);
        }
    }
}

#[test]
fn shielded_block_keeps_walks_inside() {
    let s = 35.0;
    let m = KnnModel::uniform(1).unwrap();
    let b: BTreeSet<LatticeSite> = [LatticeSite::origin(2)].into();
    let shield: BTreeSet<LatticeSite> =
        (-1..=1).flat_map(|a| (-1..=1).map(move |c| LatticeSite::new(&[a, c]))).filter(|z| !b.contains(z)).collect();
    let mut checked = 0;
    for seed in 0..4 {
        let phi = common::knn_sample(5.0 * s, 1, seed);
        let g = knn::build_knn_graph(&phi, &m, Execution::Sequential).unwrap();
        let good = |z: &LatticeSite| {
            let shift = Position::xy(-(z.0[0] as f64) * s, -(z.0[1] as f64) * s);
            let local = phi.translate(&shift).unwrap().restrict(&BoxRegion::centered(2, 3.0 * s).unwrap());
            knn::event_a1(&local, s, &m)
        };
        if !shield.iter().all(good) {
            continue;
        }
        let rep = check_sh(&phi, &g, s, good, &b, &shield).unwrap();
        assert!(rep.passed(), "seed {seed}: {:?}", rep.violations);
        checked += rep.checked;
    }
    assert!(checked > 0, "no seed had a good shield");
}

#[test]
fn event_probabilities_grow_with_the_scale() {
    let grid = [20.0, 40.0, 80.0];
    // The annulus scan makes a3 the expensive one.
    for (event, replicates) in [("a1", 500), ("a2", 1000), ("a3", 100), ("a4", 500)] {
        let mut cfg = ExperimentConfig::new(ModelKind::Knn, grid[0]);
        cfg.replicates = replicates;
        cfg.base_seed = 21;
        let rep = harness::run_event_curve(&cfg, event, &grid).unwrap();
        let y = &rep.curves["event"].y;
        assert!(y.windows(2).all(|w| w[1] >= w[0]) && y[2] > y[0], "{event}: {y:?}");
    }
}
