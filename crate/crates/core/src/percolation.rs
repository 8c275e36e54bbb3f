//! Fractal percolation on dyadic subintervals, Galton–Watson survival and the
//! joint Brownian/percolation experiment behind the lower dimension bound.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::drift::DriftFunction;
use crate::error::{Error, Result};
use crate::gaussian::{normal_interval, std_normal_sample, SeedSpec};
use crate::stats::{Estimate, Moments};

pub const MAX_TREE_DEPTH: u32 = 24;
pub const MAX_HAWKES_LEVEL: u32 = 18;
/// Retained intervals allowed in one sampled tree.
pub const MAX_TREE_NODES: usize = 1 << 26;

/// Level-n exponents β₁..β_m with retention probability p_n = 2^{-β_n}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetentionSchedule {
    betas: Vec<f64>,
    /// 1-based levels whose raw exponent was negative and clamped to 0.
    clamped: Vec<u32>,
}

impl RetentionSchedule {
    pub fn from_betas(betas: Vec<f64>) -> Result<Self> {
        if let Some(b) = betas.iter().find(|b| !(**b >= 0.0) || !b.is_finite()) {
            return Err(Error::invalid(format!(
                "retention exponent {b} must be finite and >= 0"
            )));
        }
        Ok(Self {
            betas,
            clamped: Vec::new(),
        })
    }

    pub fn constant(beta: f64, depth: u32) -> Result<Self> {
        Self::from_betas(vec![beta; depth as usize])
    }

    /// Constant retention probability p ∈ (0, 1].
    pub fn with_probability(p: f64, depth: u32) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::invalid(format!("retention probability {p} not in (0, 1]")));
        }
        Self::constant(-p.log2(), depth)
    }

    /// β_n = 1/2 − 2/(n ln 2), clamped at 0.
    pub fn near_critical(depth: u32) -> Self {
        let mut betas = Vec::with_capacity(depth as usize);
        let mut clamped = Vec::new();
        for n in 1..=depth {
            let raw = 0.5 - 2.0 / (f64::from(n) * std::f64::consts::LN_2);
            if raw < 0.0 {
                clamped.push(n);
            }
            betas.push(raw.max(0.0));
        }
        Self { betas, clamped }
    }

    pub fn depth(&self) -> u32 {
        self.betas.len() as u32
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn clamped_levels(&self) -> &[u32] {
        &self.clamped
    }

    /// β_n for 1 ≤ n ≤ depth.
    pub fn beta(&self, n: u32) -> f64 {
        self.betas[n as usize - 1]
    }

    pub fn p(&self, n: u32) -> f64 {
        (-self.beta(n)).exp2()
    }

    /// γ_m = β₁ + … + β_m, with γ₀ = 0.
    pub fn gamma(&self, m: u32) -> f64 {
        self.betas[..m as usize].iter().sum()
    }

    /// ε_m = 2^{-(m − γ_m)}.
    pub fn epsilon(&self, m: u32) -> f64 {
        (-(f64::from(m) - self.gamma(m))).exp2()
    }

    /// Stable digest of the exponents, for report provenance.
    pub fn digest(&self) -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in &self.betas {
            for byte in b.to_bits().to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0100_0000_01b3);
            }
        }
        format!("{h:016x}")
    }

    fn require_depth(&self, depth: u32) -> Result<()> {
        if depth > self.depth() {
            return Err(Error::invalid(format!(
                "schedule has {} levels, {depth} requested",
                self.depth()
            )));
        }
        Ok(())
    }
}

/// Surviving branches of one percolation sample; `levels[m]` holds the
/// retained level-m dyadic indices in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PercolationTree {
    pub levels: Vec<Vec<u64>>,
    pub base: (f64, f64),
    pub seed: SeedSpec,
}

impl PercolationTree {
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    pub fn survives(&self) -> bool {
        self.levels.last().is_some_and(|l| !l.is_empty())
    }

    pub fn retained(&self, level: u32, index: u64) -> bool {
        self.levels
            .get(level as usize)
            .is_some_and(|l| l.binary_search(&index).is_ok())
    }

    /// Every retained interval below the root has a retained parent.
    pub fn is_nested(&self) -> bool {
        self.levels
            .windows(2)
            .all(|w| w[1].iter().all(|&i| w[0].binary_search(&(i >> 1)).is_ok()))
    }

    pub fn interval(&self, level: u32, index: u64) -> (f64, f64) {
        let width = (self.base.1 - self.base.0) * (-f64::from(level)).exp2();
        let lo = self.base.0 + index as f64 * width;
        (lo, lo + width)
    }
}

fn check_base(base: (f64, f64)) -> Result<()> {
    if !(base.0 < base.1 && base.0.is_finite() && base.1.is_finite()) {
        return Err(Error::invalid("base interval must satisfy a < b"));
    }
    Ok(())
}

/// Level-by-level sample; children of each retained parent are decided in
/// spatial order from the tree's own stream.
pub fn sample_percolation(
    schedule: &RetentionSchedule,
    depth: u32,
    base: (f64, f64),
    seed: SeedSpec,
) -> Result<PercolationTree> {
    if depth > MAX_TREE_DEPTH {
        return Err(Error::ResourceGuard(format!(
            "tree depth {depth} exceeds {MAX_TREE_DEPTH}"
        )));
    }
    schedule.require_depth(depth)?;
    check_base(base)?;
    let mut rng = seed.rng();
    let mut levels = vec![vec![0u64]];
    let mut total = 1usize;
    for m in 1..=depth {
        let p = schedule.p(m);
        let parents = &levels[m as usize - 1];
        let mut next = Vec::with_capacity(parents.len() * 2);
        for &i in parents {
            for child in [2 * i, 2 * i + 1] {
                if p >= 1.0 || rng.random::<f64>() < p {
                    next.push(child);
                }
            }
        }
        total += next.len();
        if total > MAX_TREE_NODES {
            return Err(Error::ResourceGuard(format!(
                "tree exceeds {MAX_TREE_NODES} retained intervals"
            )));
        }
        levels.push(next);
    }
    Ok(PercolationTree { levels, base, seed })
}

/// Whether a percolation tree drawn from `seed` reaches `depth`; explores
/// depth-first and stops at the first surviving branch. Uses its own draw
/// order, so it is not the same realization as [`sample_percolation`].
pub fn survives_to_depth(schedule: &RetentionSchedule, depth: u32, seed: SeedSpec) -> Result<bool> {
    schedule.require_depth(depth)?;
    fn dfs<R: Rng>(schedule: &RetentionSchedule, level: u32, depth: u32, rng: &mut R) -> bool {
        if level == depth {
            return true;
        }
        let p = schedule.p(level + 1);
        for _ in 0..2 {
            if rng.random::<f64>() < p && dfs(schedule, level + 1, depth, rng) {
                return true;
            }
        }
        false
    }
    Ok(dfs(schedule, 0, depth, &mut seed.rng()))
}

/// Ultimate survival of the binomial B(2, p) Galton–Watson process.
pub fn gw_survival(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid(format!("probability {p} not in [0, 1]")));
    }
    if p <= 0.5 {
        return Ok(0.0);
    }
    let r = (1.0 - p) / p;
    Ok(1.0 - r * r)
}

/// Probability that the schedule's tree reaches `depth`, by backward
/// recursion q ← (1 − p + p q)² from q = 0 at the bottom.
pub fn survival_probability(schedule: &RetentionSchedule, depth: u32) -> Result<f64> {
    schedule.require_depth(depth)?;
    let mut q = 0.0;
    for m in (1..=depth).rev() {
        let p = schedule.p(m);
        q = (1.0 - p + p * q).powi(2);
    }
    Ok(1.0 - q)
}

/// P(I ∪ J retained at level m) for I, J separated at level l.
pub fn pair_retention_prob(schedule: &RetentionSchedule, m: u32, l: u32) -> Result<f64> {
    if l >= m {
        return Err(Error::range("separation level", format!("l = {l} must be < m = {m}")));
    }
    schedule.require_depth(m)?;
    Ok((-2.0 * schedule.gamma(m) + schedule.gamma(l)).exp2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesReport {
    pub m: u32,
    pub epsilon: f64,
    pub gamma_m: f64,
    pub mean_y: Estimate,
    pub second_moment_y: Estimate,
    pub prob_positive: Estimate,
    pub mean_y_analytic: f64,
    pub replicates: u64,
    pub schedule_digest: String,
    pub seed: SeedSpec,
}

/// Dyadic centers t_I = 1 + (k + 1/2) 2^{-m} of [1, 2].
pub fn dyadic_centers(m: u32) -> Vec<f64> {
    let w = (-f64::from(m)).exp2();
    (0..1u64 << m).map(|k| 1.0 + (k as f64 + 0.5) * w).collect()
}

/// Y = #{I ∈ S(m) : |B(t_I) − f(t_I)| ≤ ε} over independent (B, tree)
/// replicates. Replicate r draws its path from `seed.task(r)` and its tree
/// from `seed.fork(1).task(r)`. `epsilon` defaults to ε_m.
pub fn joint_hawkes_experiment(
    f: &DriftFunction,
    schedule: &RetentionSchedule,
    m: u32,
    replicates: u64,
    epsilon: Option<f64>,
    seed: SeedSpec,
) -> Result<HawkesReport> {
    if m == 0 || m > MAX_HAWKES_LEVEL {
        return Err(Error::ResourceGuard(format!(
            "level m = {m} not in 1..={MAX_HAWKES_LEVEL}"
        )));
    }
    if replicates == 0 {
        return Err(Error::invalid("replicates must be at least 1"));
    }
    schedule.require_depth(m)?;
    let eps = epsilon.unwrap_or_else(|| schedule.epsilon(m));
    if !(eps > 0.0) {
        return Err(Error::invalid("epsilon must be positive"));
    }
    let centers = dyadic_centers(m);
    let drift: Vec<f64> = centers.iter().map(|&t| f.value(t)).collect();
    let tree_seed = seed.fork(1);

    let counts: Vec<Result<u64>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let tree = sample_percolation(schedule, m, (1.0, 2.0), tree_seed.task(r))?;
            // B is only needed at retained centers; sample it there directly.
            let mut rng = seed.task(r).rng();
            let (mut t_prev, mut b) = (0.0, 0.0);
            let mut y = 0;
            for &k in &tree.levels[m as usize] {
                let t = centers[k as usize];
                b += (t - t_prev).sqrt() * std_normal_sample(&mut rng);
                t_prev = t;
                if (b - drift[k as usize]).abs() <= eps {
                    y += 1;
                }
            }
            Ok(y)
        })
        .collect();

    let (mut first, mut second) = (Moments::default(), Moments::default());
    let mut positive = 0;
    for c in counts {
        let y = c? as f64;
        first.push(y);
        second.push(y * y);
        if y > 0.0 {
            positive += 1;
        }
    }
    let window: f64 = centers
        .iter()
        .zip(&drift)
        .map(|(&t, &fv)| normal_interval((fv - eps) / t.sqrt(), (fv + eps) / t.sqrt()))
        .sum();
    let gamma_m = schedule.gamma(m);
    Ok(HawkesReport {
        m,
        epsilon: eps,
        gamma_m,
        mean_y: Estimate::from_moments(&first),
        second_moment_y: Estimate::from_moments(&second),
        prob_positive: Estimate::proportion(positive, replicates),
        mean_y_analytic: (-gamma_m).exp2() * window,
        replicates,
        schedule_digest: schedule.digest(),
        seed,
    })
}

/// Partial sums of Σ_ℓ 2^{γ_ℓ − ℓ/2}, ℓ = 0..=depth.
pub fn hawkes_series_partial_sums(schedule: &RetentionSchedule) -> Vec<f64> {
    let mut acc = 0.0;
    (0..=schedule.depth())
        .map(|l| {
            acc += (schedule.gamma(l) - f64::from(l) / 2.0).exp2();
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn near_critical_schedule_clamps_early_levels() {
        let s = RetentionSchedule::near_critical(20);
        assert_eq!(s.clamped_levels(), &[1, 2, 3, 4, 5]);
        assert!(s.betas().iter().all(|&b| (0.0..0.5).contains(&b)));
        assert!((s.beta(10) - (0.5 - 2.0 / (10.0 * std::f64::consts::LN_2))).abs() < 1e-15);
        for m in 6..20 {
            assert!(s.gamma(m + 1) > s.gamma(m));
        }
    }

    #[test]
    fn gw_closed_forms() {
        assert_eq!(gw_survival(0.5).unwrap(), 0.0);
        assert_eq!(gw_survival(1.0).unwrap(), 1.0);
        let p = 0.5f64.sqrt();
        let want = 1.0 - (2f64.sqrt() - 1.0).powi(2);
        assert!((gw_survival(p).unwrap() - want).abs() < 1e-12);
        assert!((want - 0.8284).abs() < 1e-4);
        assert!(gw_survival(1.5).is_err());
    }

    #[test]
    fn finite_depth_survival_decreases_to_limit() {
        let s = RetentionSchedule::with_probability(0.7, 200).unwrap();
        let mut prev = 1.0;
        for d in [1, 5, 20, 200] {
            let v = survival_probability(&s, d).unwrap();
            assert!(v <= prev);
            prev = v;
        }
        assert!((prev - gw_survival(0.7).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn keep_everything() {
        let s = RetentionSchedule::constant(0.0, 10).unwrap();
        let tree = sample_percolation(&s, 10, (0.0, 1.0), SeedSpec::new(1, 0)).unwrap();
        for m in 0..=10 {
            assert_eq!(tree.levels[m].len(), 1 << m);
        }
        assert!(tree.is_nested());
        assert_eq!(pair_retention_prob(&s, 10, 3).unwrap(), 1.0);
    }

    #[test]
    fn tiny_retention_dies() {
        let s = RetentionSchedule::with_probability(1e-6, 5).unwrap();
        let dead = (0..200)
            .filter(|&i| {
                let t = sample_percolation(&s, 5, (0.0, 1.0), SeedSpec::new(2, i)).unwrap();
                t.levels[1].is_empty()
            })
            .count();
        assert_eq!(dead, 200);
    }

    #[test]
    fn pair_formula_cases() {
        let s = RetentionSchedule::near_critical(12);
        assert!(pair_retention_prob(&s, 4, 4).is_err());
        let one = RetentionSchedule::from_betas(vec![0.3]).unwrap();
        let want = (-0.6f64).exp2();
        assert!((pair_retention_prob(&one, 1, 0).unwrap() - want).abs() < 1e-15);
    }

    #[test]
    fn guards() {
        let s = RetentionSchedule::near_critical(30);
        assert!(sample_percolation(&s, 25, (0.0, 1.0), SeedSpec::new(0, 0))
            .unwrap_err()
            .is_resource_guard());
        let f = DriftFunction::zero();
        assert!(joint_hawkes_experiment(&f, &s, 19, 1, None, SeedSpec::new(0, 0))
            .unwrap_err()
            .is_resource_guard());
    }

    #[test]
    fn hawkes_all_retained_wide_window() {
        let s = RetentionSchedule::constant(0.0, 8).unwrap();
        let r = joint_hawkes_experiment(&DriftFunction::zero(), &s, 8, 20, Some(10.0), SeedSpec::new(3, 0)).unwrap();
        assert_eq!(r.mean_y.value, 256.0);
        assert_eq!(r.mean_y.se, 0.0);
        assert_eq!(r.prob_positive.value, 1.0);
    }

    #[test]
    fn hawkes_mean_matches_analytic() {
        let s = RetentionSchedule::near_critical(10);
        let r = joint_hawkes_experiment(&DriftFunction::zero(), &s, 10, 20_000, None, SeedSpec::new(4, 0)).unwrap();
        assert!(
            r.mean_y.within(r.mean_y_analytic, 4.0),
            "{:?} vs {}",
            r.mean_y,
            r.mean_y_analytic
        );
        let again = joint_hawkes_experiment(&DriftFunction::zero(), &s, 10, 20_000, None, SeedSpec::new(4, 0)).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn series_converges() {
        // Terms decay like c/ℓ², so the tail after L is at most sup(ℓ² term)/(L − 1).
        let s = RetentionSchedule::near_critical(400);
        let sums = hawkes_series_partial_sums(&s);
        let terms: Vec<f64> = sums.windows(2).map(|w| w[1] - w[0]).collect();
        let c = (20..400).map(|l| (l * l) as f64 * terms[l - 1]).fold(0.0, f64::max);
        assert!(c < 6.0, "{c}");
        let tail_after_50 = c / 49.0;
        assert!(sums[400] - sums[50] <= tail_after_50);
        assert!(sums.windows(2).all(|w| w[1] > w[0]));
    }
}
