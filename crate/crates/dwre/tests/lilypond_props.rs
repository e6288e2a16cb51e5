mod common;

use proptest::prelude::*;

use dwre::geom::{BoxRegion, LatticeSite, Position};
use dwre::lilypond::{self, boundary_in_star, build_lily_graph, make_cycle};
use dwre::walks::boundary_in;

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn solver_agrees_with_the_oracle(seed in any::<u64>(), side in 2f64..13.0) {
        let phi = common::lily_sample(side, seed);
        prop_assume!(!phi.is_empty());
        let (Ok(a), Ok(b)) = (lilypond::solve(&phi), lilypond::oracle_solve(&phi)) else {
            return Err(TestCaseError::reject("non-generic draw"));
        };
        prop_assert_eq!(&a.stopper, &b.stopper);
        for (x, y) in a.f.iter().zip(&b.f) {
            prop_assert!(x == y || (x - y).abs() <= 1e-12 * x.abs().max(1.0), "{} vs {}", x, y);
        }
        prop_assert!(lilypond::verify_solution(&phi, &a));
    }

    #[test]
    fn perturbing_one_length_breaks_the_solution(seed in any::<u64>(), pick in any::<prop::sample::Index>(), up in any::<bool>()) {
        let phi = common::lily_sample(10.0, seed);
        let Ok(mut sol) = lilypond::solve(&phi) else { return Err(TestCaseError::reject("non-generic draw")) };
        let finite: Vec<usize> = (0..sol.len()).filter(|&i| sol.is_finite(i)).collect();
        prop_assume!(!finite.is_empty());
        let i = finite[pick.index(finite.len())];
        sol.f[i] += if up { 1e-3 } else { -1e-3 };
        prop_assert!(!lilypond::verify_solution(&phi, &sol));
    }

    #[test]
    fn solution_is_translation_covariant(seed in any::<u64>(), ex in -50f64..50.0, ey in -50f64..50.0) {
        let phi = common::lily_sample(10.0, seed);
        let moved = phi.translate(&Position::xy(ex, ey)).unwrap();
        let (Ok(a), Ok(b)) = (lilypond::solve(&phi), lilypond::solve(&moved)) else {
            return Err(TestCaseError::reject("non-generic draw"));
        };
        prop_assert_eq!(&a.stopper, &b.stopper);
        // Rounding in the shifted coordinates moves lengths by a few ulps of the offset.
        for (x, y) in a.f.iter().zip(&b.f) {
            prop_assert!(x == y || (x - y).abs() <= 1e-9 * (1.0 + ex.abs() + ey.abs()));
        }
    }

    #[test]
    fn planted_cycle_keeps_its_internal_stoppers(seed in any::<u64>(), cx in -6f64..6.0, cy in -6f64..6.0, delta in 0.3f64..2.0) {
        let phi = common::lily_sample(30.0, seed);
        let xi = Position::xy(cx, cy);
        let hole = BoxRegion::new(xi.clone(), 3.0 * delta).unwrap();
        let outside = phi.filter(|p| !hole.contains(&p.position));
        let first = phi.points().iter().map(|p| p.id).max().unwrap_or(0) + 1;
        let cyc = make_cycle(&xi, delta, seed).with_ids(first);
        let planted = dwre::geom::MarkedConfiguration::new(cyc.points.clone(), outside.window().clone()).unwrap();
        let all = outside.union(&planted, outside.window().clone()).unwrap();
        let Ok(sol) = lilypond::solve(&all) else { return Err(TestCaseError::reject("non-generic draw")) };
        for j in 0..4 {
            let i = all.index_of(first + j).unwrap();
            prop_assert_eq!(sol.stopper_id(&all, i), Some(first + (j + 1) % 4));
        }
    }

    #[test]
    fn walk_entries_are_star_boundary_points(seed in any::<u64>(), a in -2i64..=2, b in -2i64..=2, s in 2f64..6.0) {
        let phi = common::lily_sample(30.0, seed);
        let Ok(sol) = lilypond::solve(&phi) else { return Err(TestCaseError::reject("non-generic draw")) };
        let g = build_lily_graph(&phi, &sol).unwrap();
        let z = LatticeSite::new(&[a, b]);
        let walk_in = boundary_in(&phi, &g, &z, s).unwrap();
        let star = boundary_in_star(&phi, &sol, &z, s).unwrap();
        prop_assert!(star.censored.is_subset(&star.ids));
        prop_assert!(walk_in.iter().all(|id| star.ids.contains(id) || star.censored.contains(id)));
    }
}
