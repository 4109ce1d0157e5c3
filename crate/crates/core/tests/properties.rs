use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rdb_core::balance::calibration_weights;
use rdb_core::continuous::{correlation_stats, ContinuousDesign};
use rdb_core::engine::{
    decide_direction, default_thresholds, median_mid, renormalized_stats, select_rejections,
    TestMode,
};
use rdb_core::error_control::{bh_adjust, bonferroni, TailLaw};
use rdb_core::simbench::{gen_effect_sizes, multinomial, score, EffectSetting, GroundTruth};
use rdb_core::{rdb_iterate, RdbConfig, TwoSampleDesign};

fn simplex(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01f64..1.0, d).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

fn design() -> impl Strategy<Value = TwoSampleDesign> {
    (3usize..12, 2usize..8, 2usize..8).prop_flat_map(|(d, m1, m2)| {
        (
            prop::collection::vec(simplex(d), m1),
            prop::collection::vec(simplex(d), m2),
        )
            .prop_map(move |(g1, g2)| {
                TwoSampleDesign::from_groups((0..d).map(|i| format!("c{i}")).collect(), g1, g2)
                    .expect("valid design")
            })
    })
}

proptest! {
    #[test]
    fn median_is_order_free(mut v in prop::collection::vec(-10.0f64..10.0, 1..40)) {
        let a = median_mid(&v).unwrap();
        v.reverse();
        prop_assert_eq!(a, median_mid(&v).unwrap());
        let below = v.iter().filter(|&&x| x < a).count();
        let above = v.iter().filter(|&&x| x > a).count();
        prop_assert!(below <= v.len() / 2 && above <= v.len() / 2);
    }

    #[test]
    fn direction_is_antisymmetric(m in -1.0f64..1.0, band in 0.01f64..0.5) {
        prop_assert_eq!(decide_direction(m, band), decide_direction(-m, band).flipped());
    }

    #[test]
    fn rejections_shrink_with_alpha(
        stats in prop::collection::vec(-6.0f64..6.0, 2..60),
        a_small in 0.001f64..0.05,
        a_gap in 0.0f64..0.2,
    ) {
        let d = stats.len();
        let strict = RdbConfig { alpha: a_small, ..RdbConfig::default() };
        let loose = RdbConfig { alpha: a_small + a_gap, ..RdbConfig::default() };
        let ts = default_thresholds(d, &strict).unwrap();
        let tl = default_thresholds(d, &loose).unwrap();
        for mode in [TestMode::TwoSided, TestMode::NegOnly, TestMode::PosOnly] {
            let s = select_rejections(&stats, mode, &ts);
            let l = select_rejections(&stats, mode, &tl);
            prop_assert!(s.iter().all(|i| l.contains(i)));
        }
    }

    #[test]
    fn adjusted_pvalues_dominate(p in prop::collection::vec(0.0f64..=1.0, 0..50)) {
        let bh = bh_adjust(&p).unwrap();
        let bf = bonferroni(&p).unwrap();
        for i in 0..p.len() {
            prop_assert!(bh[i] >= p[i] - 1e-15 && bh[i] <= 1.0);
            prop_assert!(bf[i] >= bh[i] - 1e-12);
            for j in 0..p.len() {
                if p[i] <= p[j] {
                    prop_assert!(bh[i] <= bh[j] + 1e-15);
                }
            }
        }
    }

    #[test]
    fn survival_decreases(t in 0.0f64..10.0, dt in 0.0f64..3.0) {
        for law in [TailLaw::Rayleigh, TailLaw::HalfNormal] {
            let a = law.survival(t).unwrap();
            let b = law.survival(t + dt).unwrap();
            prop_assert!((0.0..=1.0).contains(&a) && b <= a);
        }
    }

    #[test]
    fn swap_negates_statistics(design in design()) {
        let all: Vec<usize> = (0..design.n_components()).collect();
        let a = renormalized_stats(&design, &all).unwrap();
        let b = renormalized_stats(&design.swapped(), &all).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(*x, -*y);
        }
        let cfg = RdbConfig::default();
        let plain = rdb_iterate(&design, &cfg).unwrap();
        let swapped = rdb_iterate(&design.swapped(), &cfg).unwrap();
        prop_assert_eq!(plain.rejected_ids(), swapped.rejected_ids());
    }

    #[test]
    fn loop_terminates_within_bound(design in design()) {
        let out = rdb_iterate(&design, &RdbConfig::default()).unwrap();
        let rejected = out.rejected_indices().len();
        prop_assert!(out.total_iterations <= rejected + 1);
        prop_assert_eq!(out.components.len(), design.n_components() + design.excluded().len());
    }

    #[test]
    fn continuous_flips_with_outcome(
        props in (3usize..8).prop_flat_map(|d| prop::collection::vec(simplex(d), 4..15)),
        seed in any::<u64>(),
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = props.len();
        let d = props[0].len();
        let y: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let design = ContinuousDesign::new((0..d).map(|i| format!("c{i}")).collect(), props, y.clone()).unwrap();
        let flipped = design.with_outcome(y.iter().map(|v| -v).collect()).unwrap();
        let shifted = design.with_outcome(y.iter().map(|v| 3.0 * v + 7.0).collect()).unwrap();
        let all: Vec<usize> = (0..d).collect();
        let a = correlation_stats(&design, &all).unwrap();
        let b = correlation_stats(&flipped, &all).unwrap();
        let c = correlation_stats(&shifted, &all).unwrap();
        for i in 0..d {
            prop_assert!((a[i] + b[i]).abs() <= 1e-9 * a[i].abs().max(1.0));
            prop_assert!((a[i] - c[i]).abs() <= 1e-9 * a[i].abs().max(1.0));
        }
    }

    #[test]
    fn calibration_hits_interior_targets(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 8..30),
        mix in prop::collection::vec(0.05f64..1.0, 30),
    ) {
        // A strictly positive mixture of the rows is always an interior target.
        let total: f64 = mix[..rows.len()].iter().sum();
        let target: Vec<f64> = (0..2)
            .map(|c| rows.iter().zip(&mix).map(|(r, w)| w * r[c]).sum::<f64>() / total)
            .collect();
        match calibration_weights(&rows, &target, None) {
            Ok(fit) => {
                prop_assert!(fit.report.balance_residual <= 1e-6);
                prop_assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
            // Nearly collinear random columns are legitimately refused.
            Err(rdb_core::RdbError::CollinearCovariates(_)) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }

    #[test]
    fn truth_hygiene(d in 4usize..300, frac in 0.0f64..0.5, setting in 1u8..=2, seed in any::<u64>()) {
        let s = ((d as f64 * frac) as usize).min(d / 2 - 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = gen_effect_sizes(d, s, EffectSetting::from_number(setting).unwrap(), &mut rng).unwrap();
        prop_assert_eq!(t.differential.len(), s);
        for i in 0..d {
            if t.differential.binary_search(&i).is_err() {
                prop_assert_eq!(t.effect_sizes[i], 1.0);
            }
        }
    }

    #[test]
    fn multinomial_conserves_depth(
        weights in prop::collection::vec(0.0f64..5.0, 1..50),
        n in 0u64..100_000,
        seed in any::<u64>(),
    ) {
        prop_assume!(weights.iter().any(|&w| w > 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = multinomial(n, &weights, &mut rng).unwrap();
        prop_assert_eq!(x.iter().sum::<u64>(), n);
        for (c, w) in x.iter().zip(&weights) {
            if *w == 0.0 {
                prop_assert_eq!(*c, 0);
            }
        }
    }

    #[test]
    fn fdp_is_a_proportion(rejected in prop::collection::btree_set(0usize..50, 0..50), s in 0usize..24) {
        let truth = GroundTruth {
            differential: (0..s).collect(),
            effect_sizes: (0..50).map(|i| if i < s { 2.0 } else { 1.0 }).collect(),
        };
        let rejected: Vec<usize> = rejected.into_iter().collect();
        let sc = score(&rejected, &truth);
        prop_assert!((0.0..=1.0).contains(&sc.fdp));
        prop_assert_eq!(sc.fdp > 0.0, sc.false_discoveries > 0);
    }
}
