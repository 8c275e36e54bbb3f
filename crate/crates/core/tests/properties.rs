use proptest::prelude::*;
use zerolab::brownian::SampledPath;
use zerolab::cantor::{CantorSet, GammaParam};
use zerolab::counting::hit_prob_table;
use zerolab::dimension::box_count;
use zerolab::drift::DriftFunction;
use zerolab::gaussian::{bivariate_rect_prob, BivariateRect, SeedSpec};
use zerolab::percolation::{pair_retention_prob, RetentionSchedule};
use zerolab::zeros::{detect_zeros_on_path, isolated_candidates, record_times_of, ZeroStatus};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cantor_function_is_self_affine(g in 0.05f64..0.49, t in 1.0f64..2.0) {
        let set = CantorSet::new(GammaParam::new(g).unwrap());
        let v = set.eval(t);
        prop_assert!((set.eval(1.0 + g * (t - 1.0)) - v / 2.0).abs() < 1e-12);
        prop_assert!((set.eval(2.0 - g * (2.0 - t)) - 0.5 - v / 2.0).abs() < 1e-12);
    }

    #[test]
    fn cantor_function_is_monotone(g in 0.05f64..0.49, a in 0.5f64..2.5, b in 0.5f64..2.5) {
        let set = CantorSet::new(GammaParam::new(g).unwrap());
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(set.eval(lo) <= set.eval(hi));
        prop_assert!((0.0..=1.0).contains(&set.eval(lo)));
    }

    #[test]
    fn level_intervals_nest(g in 0.05f64..0.49, n in 1u32..10) {
        let set = CantorSet::new(GammaParam::new(g).unwrap());
        let coarse = set.intervals(n).unwrap();
        let fine = set.intervals(n + 1).unwrap();
        for (i, (a, b)) in fine.iter().enumerate() {
            let (pa, pb) = coarse[i / 2];
            prop_assert!(pa <= *a + 1e-12 && *b <= pb + 1e-12, "{} {}", pa - a, b - pb);
        }
    }

    #[test]
    fn rectangle_probability_is_a_probability(
        x0 in -3.0f64..3.0, xw in 0.0f64..3.0,
        y0 in -3.0f64..3.0, yw in 0.0f64..3.0,
        rho in -0.99f64..0.99, grow in 0.0f64..1.0,
    ) {
        let p = bivariate_rect_prob(&BivariateRect::new((x0, x0 + xw), (y0, y0 + yw), rho).unwrap()).unwrap();
        let q = bivariate_rect_prob(&BivariateRect::new((x0 - grow, x0 + xw), (y0, y0 + yw + grow), rho).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(q >= p - 1e-12);
    }

    #[test]
    fn hit_probabilities_below_dyadic_bound(g in 0.05f64..0.49, n in 1u32..9) {
        let bound = (-f64::from(n)).exp2();
        for p in hit_prob_table(GammaParam::new(g).unwrap(), n).unwrap() {
            prop_assert!(p > 0.0 && p <= bound);
        }
    }

    #[test]
    fn pair_retention_increases_with_shared_ancestry(m in 2u32..16) {
        let s = RetentionSchedule::near_critical(m);
        let probs: Vec<f64> = (0..m).map(|l| pair_retention_prob(&s, m, l).unwrap()).collect();
        for w in probs.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-15);
        }
        prop_assert!(probs.iter().all(|&p| p > 0.0 && p <= 1.0));
    }

    #[test]
    fn box_counts_grow_with_level(raw in prop::collection::vec((0.0f64..1.0, 0.0f64..0.05), 1..20)) {
        let intervals: Vec<(f64, f64)> = raw.iter().map(|&(a, w)| (a, (a + w).min(1.0))).collect();
        let t = box_count(&intervals, 0..=12).unwrap();
        for w in t.counts.windows(2) {
            prop_assert!(w[1] >= w[0]);
            prop_assert!(w[1] <= 2 * w[0]);
        }
    }

    #[test]
    fn records_are_running_maxima(xs in prop::collection::vec(-5.0f64..5.0, 2..60), delta in 0.0f64..0.2) {
        let times: Vec<f64> = (0..xs.len()).map(|i| i as f64 / xs.len() as f64).collect();
        let r = record_times_of(&times, &xs, delta);
        prop_assert_eq!(r.records[0], 0.0);
        let mut best = f64::NEG_INFINITY;
        let mut expected = Vec::new();
        for (&t, &x) in times.iter().zip(&xs) {
            if x >= best {
                best = x;
                expected.push(t);
            }
        }
        prop_assert_eq!(&r.records, &expected);
        prop_assert!(r.isolated.iter().all(|t| r.records.contains(t)));
    }

    #[test]
    fn detected_crossings_bracket_sign_changes(vals in prop::collection::vec(-1.0f64..1.0, 17)) {
        let times: Vec<f64> = (0..17).map(|i| 1.0 + i as f64 / 16.0).collect();
        let path = SampledPath::new(times, vals.clone(), false).unwrap();
        let z = detect_zeros_on_path(&path, &DriftFunction::zero(), SeedSpec::new(301, 0), 0).unwrap();
        let sign_changes = vals.windows(2).filter(|w| w[0] * w[1] <= 0.0).count();
        prop_assert_eq!(z.confirmed_count(), sign_changes);
        for c in &z.crossings {
            prop_assert!(c.lo < c.hi);
            if c.status == ZeroStatus::ConfirmedCrossing {
                prop_assert!(c.x_lo() * c.x_hi() <= 0.0);
            }
        }
        let delta = 0.2;
        let report = isolated_candidates(&z, delta, None, None).unwrap();
        for cand in &report.candidates {
            prop_assert!(cand.gap_left >= delta && cand.gap_right >= delta);
        }
    }
}
