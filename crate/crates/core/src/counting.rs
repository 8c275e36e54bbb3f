//! The counting variable Z_{γ,n}: the number of level-n Cantor intervals
//! I = [r, s] (base [1, 2]) for which B(s) ∈ [f_γ(r), f_γ(s)].
//!
//! Every event depends only on B at the 2ⁿ right endpoints, so moments are
//! exact Gaussian integrals and Monte Carlo needs no path refinement.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::{classify_balanced, CantorAddress, CantorSet, GammaParam, MAX_ADDRESS_LEVEL};
use crate::error::{Error, Result};
use crate::gaussian::{bivariate_rect_prob, normal_interval, std_normal_sample, BivariateRect, SeedSpec};
use crate::stats::{Estimate, Moments};

pub const MAX_FIRST_MOMENT_LEVEL: u32 = 22;
pub const MAX_SECOND_MOMENT_LEVEL: u32 = 10;
pub const MAX_MC_LEVEL: u32 = 22;
/// Upper bound on paths · 2ⁿ Gaussian draws per Monte Carlo run.
pub const MC_WORK_LIMIT: u128 = 1 << 34;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCountStats {
    pub mean: Estimate,
    pub second_moment: Estimate,
    pub prob_positive: Estimate,
    /// E(Z | some balanced interval is hit); a surrogate for the conditional
    /// mean given the leftmost balanced hit.
    pub balanced_conditional_mean: Option<Estimate>,
    pub paths: u64,
    pub seed: SeedSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountStats {
    pub gamma: GammaParam,
    pub n: u32,
    pub mean_analytic: f64,
    pub second_moment_analytic: Option<f64>,
    /// 2·Σ P(Z_n(I) ∩ Z_n(J)) over pairs separated at level ℓ, indexed by ℓ.
    pub second_moment_by_level: Option<Vec<f64>>,
    pub mc: Option<McCountStats>,
}

fn check_level(n: u32, max: u32, what: &str) -> Result<()> {
    if n == 0 {
        return Err(Error::range("level", "n must be at least 1"));
    }
    if n > max {
        return Err(Error::ResourceGuard(format!("{what} limited to n <= {max}, got {n}")));
    }
    Ok(())
}

/// Hit window of interval k at level n, standardized by √s: ([lo, hi], s).
fn window(k: u64, n: u32, s: f64) -> (f64, f64) {
    let unit = (-f64::from(n)).exp2();
    let root = s.sqrt();
    (k as f64 * unit / root, (k + 1) as f64 * unit / root)
}

/// P(Z_n(I)) = Φ(f_γ(s)/√s) − Φ(f_γ(r)/√s) for I = [r, s].
pub fn interval_hit_prob(gamma: GammaParam, addr: CantorAddress) -> Result<f64> {
    if addr.level() == 0 || addr.level() > MAX_ADDRESS_LEVEL {
        return Err(Error::range(
            "level",
            format!("{} not in 1..={MAX_ADDRESS_LEVEL}", addr.level()),
        ));
    }
    let (_, s) = CantorSet::new(gamma).interval(addr);
    let (lo, hi) = window(addr.word(), addr.level(), s);
    // A zero-width window (unreachable for levels up to 52) yields 0.
    Ok(normal_interval(lo, hi))
}

/// P(Z_n(I)) for every level-n interval, left to right.
pub fn hit_prob_table(gamma: GammaParam, n: u32) -> Result<Vec<f64>> {
    check_level(n, MAX_FIRST_MOMENT_LEVEL, "hitting table")?;
    let ends = CantorSet::new(gamma).right_endpoints(n);
    Ok(ends
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let (lo, hi) = window(k as u64, n, s);
            normal_interval(lo, hi)
        })
        .collect())
}

/// min_I 2ⁿ P(Z_n(I)), the empirical lower hitting constant.
pub fn hit_constant(gamma: GammaParam, n: u32) -> Result<f64> {
    let table = hit_prob_table(gamma, n)?;
    let scale = f64::from(n).exp2();
    Ok(table.iter().fold(f64::INFINITY, |m, &p| m.min(p * scale)))
}

/// Separation level of intervals i < j: the deepest level whose interval
/// contains both.
pub fn separation_level(n: u32, i: u64, j: u64) -> u32 {
    debug_assert!(i != j);
    n - (64 - (i ^ j).leading_zeros())
}

struct Windows {
    ends: Vec<f64>,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl Windows {
    fn new(gamma: GammaParam, n: u32) -> Self {
        let ends = CantorSet::new(gamma).right_endpoints(n);
        let (lo, hi) = ends.iter().enumerate().map(|(k, &s)| window(k as u64, n, s)).unzip();
        Self { ends, lo, hi }
    }

    fn joint(&self, i: usize, j: usize) -> f64 {
        let rho = (self.ends[i] / self.ends[j]).sqrt();
        let rect = BivariateRect::new((self.lo[i], self.hi[i]), (self.lo[j], self.hi[j]), rho)
            .expect("valid window rectangle");
        bivariate_rect_prob(&rect).expect("valid correlation")
    }

    fn marginal(&self, i: usize) -> f64 {
        normal_interval(self.lo[i], self.hi[i])
    }
}

/// Exact E(Z_{γ,n}) and optionally E(Z²_{γ,n}) via the pairwise double sum.
pub fn analytic_moments(gamma: GammaParam, n: u32, with_second: bool) -> Result<CountStats> {
    check_level(n, MAX_FIRST_MOMENT_LEVEL, "first moment")?;
    if with_second {
        check_level(n, MAX_SECOND_MOMENT_LEVEL, "second moment")?;
    }
    let mean_analytic: f64 = hit_prob_table(gamma, n)?.iter().sum();
    let (second, by_level) = if with_second {
        let w = Windows::new(gamma, n);
        let count = w.ends.len();
        let rows: Vec<Vec<f64>> = (0..count)
            .into_par_iter()
            .map(|i| {
                let mut row = vec![0.0; n as usize];
                for j in i + 1..count {
                    row[separation_level(n, i as u64, j as u64) as usize] += w.joint(i, j);
                }
                row
            })
            .collect();
        let mut levels = vec![0.0; n as usize];
        for row in &rows {
            for (acc, v) in levels.iter_mut().zip(row) {
                *acc += 2.0 * v;
            }
        }
        (Some(levels.iter().sum::<f64>() + mean_analytic), Some(levels))
    } else {
        (None, None)
    };
    Ok(CountStats {
        gamma,
        n,
        mean_analytic,
        second_moment_analytic: second,
        second_moment_by_level: by_level,
        mc: None,
    })
}

#[derive(Clone, Copy, Default)]
struct PathOutcome {
    count: u32,
    balanced_hit: bool,
}

/// Monte Carlo moments of Z_{γ,n}; path p uses substream `seed.task(p)`.
pub fn mc_counting(gamma: GammaParam, n: u32, paths: u64, seed: SeedSpec) -> Result<CountStats> {
    check_level(n, MAX_MC_LEVEL, "Monte Carlo counting")?;
    if paths == 0 {
        return Err(Error::invalid("paths must be at least 1"));
    }
    if u128::from(paths) << n > MC_WORK_LIMIT {
        return Err(Error::ResourceGuard(format!(
            "paths * 2^n = {paths} * 2^{n} exceeds 2^34 draws"
        )));
    }
    let ends = CantorSet::new(gamma).right_endpoints(n);
    let mut steps = Vec::with_capacity(ends.len());
    let mut prev = 0.0;
    for &s in &ends {
        steps.push((s - prev).sqrt());
        prev = s;
    }
    let unit = (-f64::from(n)).exp2();
    let balanced: Vec<bool> = (0..ends.len() as u64)
        .map(|k| classify_balanced(CantorAddress::new(k, n).expect("level checked")))
        .collect();

    let outcomes: Vec<PathOutcome> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = seed.task(p).rng();
            let mut b = 0.0;
            let mut out = PathOutcome::default();
            for (k, &step) in steps.iter().enumerate() {
                b += step * std_normal_sample(&mut rng);
                let lo = k as f64 * unit;
                if b >= lo && b <= lo + unit {
                    out.count += 1;
                    out.balanced_hit |= balanced[k];
                }
            }
            out
        })
        .collect();

    let (mut first, mut second, mut given_balanced) = (Moments::default(), Moments::default(), Moments::default());
    let mut positive = 0u64;
    for o in &outcomes {
        let z = f64::from(o.count);
        first.push(z);
        second.push(z * z);
        if o.count > 0 {
            positive += 1;
        }
        if o.balanced_hit {
            given_balanced.push(z);
        }
    }
    let mut stats = analytic_moments(gamma, n, false)?;
    stats.mc = Some(McCountStats {
        mean: Estimate::from_moments(&first),
        second_moment: Estimate::from_moments(&second),
        prob_positive: Estimate::proportion(positive, paths),
        balanced_conditional_mean: (given_balanced.count() > 1).then(|| Estimate::from_moments(&given_balanced)),
        paths,
        seed,
    });
    Ok(stats)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelProfile {
    pub level: u32,
    pub pairs: u64,
    pub min_conditional: f64,
    pub max_conditional: f64,
    /// bounds of P(Z_n(J) | Z_n(I)) · 2ⁿ γ^{ℓ/2} over pairs at this level
    pub min_ratio: f64,
    pub max_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalProfile {
    pub gamma: GammaParam,
    pub n: u32,
    pub levels: Vec<LevelProfile>,
    pub c3_hat: f64,
    pub c4_hat: f64,
}

/// Exact conditional probabilities P(Z_n(J) | Z_n(I)), I < J, grouped by
/// separation level ℓ (all levels when `level` is `None`).
pub fn conditional_profile(gamma: GammaParam, n: u32, level: Option<u32>) -> Result<ConditionalProfile> {
    if gamma.get() < 0.25 {
        return Err(Error::Precondition(
            "profile not asserted below critical gamma = 1/4".into(),
        ));
    }
    check_level(n, MAX_SECOND_MOMENT_LEVEL, "conditional profile")?;
    if let Some(l) = level {
        if l >= n {
            return Err(Error::range("level", format!("separation level {l} must be < n = {n}")));
        }
    }
    let w = Windows::new(gamma, n);
    let count = w.ends.len();
    let scale = f64::from(n).exp2();
    let rows: Vec<Vec<LevelProfile>> = (0..count)
        .into_par_iter()
        .map(|i| {
            let mut row: Vec<LevelProfile> = (0..n)
                .map(|l| LevelProfile {
                    level: l,
                    pairs: 0,
                    min_conditional: f64::INFINITY,
                    max_conditional: 0.0,
                    min_ratio: f64::INFINITY,
                    max_ratio: 0.0,
                })
                .collect();
            let marginal = w.marginal(i);
            for j in i + 1..count {
                let l = separation_level(n, i as u64, j as u64);
                if level.is_some_and(|want| want != l) {
                    continue;
                }
                let cond = w.joint(i, j) / marginal;
                let ratio = cond * scale * gamma.get().powf(f64::from(l) / 2.0);
                let entry = &mut row[l as usize];
                entry.pairs += 1;
                entry.min_conditional = entry.min_conditional.min(cond);
                entry.max_conditional = entry.max_conditional.max(cond);
                entry.min_ratio = entry.min_ratio.min(ratio);
                entry.max_ratio = entry.max_ratio.max(ratio);
            }
            row
        })
        .collect();
    let mut levels = rows[0].clone();
    for row in &rows[1..] {
        for (acc, r) in levels.iter_mut().zip(row) {
            acc.pairs += r.pairs;
            acc.min_conditional = acc.min_conditional.min(r.min_conditional);
            acc.max_conditional = acc.max_conditional.max(r.max_conditional);
            acc.min_ratio = acc.min_ratio.min(r.min_ratio);
            acc.max_ratio = acc.max_ratio.max(r.max_ratio);
        }
    }
    levels.retain(|l| l.pairs > 0);
    let c3_hat = levels.iter().map(|l| l.min_ratio).fold(f64::INFINITY, f64::min);
    let c4_hat = levels.iter().map(|l| l.max_ratio).fold(0.0, f64::max);
    Ok(ConditionalProfile {
        gamma,
        n,
        levels,
        c3_hat,
        c4_hat,
    })
}

/// K⁻¹ = P(0 ≤ B(1) ≤ 1).
pub fn unit_window_prob() -> f64 {
    normal_interval(0.0, 1.0)
}
