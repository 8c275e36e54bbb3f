//! Box counting, covering sums and defect sets.
//!
//! Boxes are the absolute dyadic intervals [j 2^{-k}, (j+1) 2^{-k}). A box
//! counting slope bounds Hausdorff dimension from above, so a slope below a
//! bound is evidence for it while a slope above it is not evidence against.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cantor::{CantorSet, GammaParam, MAX_ENUMERATION_LEVEL};
use crate::drift::DriftFunction;
use crate::error::{Error, Result};
use crate::gaussian::SeedSpec;
use crate::stats::{linear_fit, Estimate, Moments};
use crate::zeros::{detect_zeros, ZeroSetEstimate, DEFAULT_REFINE_BUDGET, MAX_ZERO_DEPTH};

pub const MAX_BOX_LEVEL: u32 = 52;
pub const MAX_DEFECT_DEPTH: u32 = 24;
/// Scales dropped at each end of the fit range.
pub const FIT_TRIM: u32 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxCountTable {
    /// levels k of the box sizes 2^{-k}
    pub scales: Vec<u32>,
    pub counts: Vec<u64>,
    /// least-squares slope of log2 N against k; `None` when undefined
    pub slope: Option<f64>,
    pub slope_se: Option<f64>,
    pub fit_range: (u32, u32),
}

impl BoxCountTable {
    pub fn count_at(&self, k: u32) -> Option<u64> {
        self.scales.iter().position(|&s| s == k).map(|i| self.counts[i])
    }
}

fn check_range(k_range: &RangeInclusive<u32>) -> Result<()> {
    if k_range.is_empty() || *k_range.end() > MAX_BOX_LEVEL {
        return Err(Error::range(
            "k_range",
            format!("{k_range:?} must be nonempty within 0..={MAX_BOX_LEVEL}"),
        ));
    }
    if k_range.end() - k_range.start() < 2 * FIT_TRIM + 1 {
        return Err(Error::range(
            "k_range",
            format!("{k_range:?} leaves fewer than two scales after trimming {FIT_TRIM} at each end"),
        ));
    }
    Ok(())
}

/// Number of level-k boxes meeting the union of `sorted` (sorted by `lo`).
fn boxes_at(sorted: &[(f64, f64)], k: u32) -> u64 {
    let scale = (k as f64).exp2();
    let mut count = 0u64;
    let mut last: Option<i64> = None;
    for &(lo, hi) in sorted {
        let jlo = (lo * scale).floor() as i64;
        let jhi = if hi > lo {
            ((hi * scale).ceil() as i64 - 1).max(jlo)
        } else {
            jlo
        };
        let start = match last {
            Some(l) if l >= jlo => l + 1,
            _ => jlo,
        };
        if jhi >= start {
            count += (jhi - start + 1) as u64;
        }
        last = Some(last.map_or(jhi, |l| l.max(jhi)));
    }
    count
}

/// Box counts of a union of closed intervals over `k_range`, with the
/// slope fitted after trimming [`FIT_TRIM`] scales at each end.
pub fn box_count(intervals: &[(f64, f64)], k_range: RangeInclusive<u32>) -> Result<BoxCountTable> {
    check_range(&k_range)?;
    if intervals
        .iter()
        .any(|&(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi))
    {
        return Err(Error::invalid("intervals must be finite with lo <= hi"));
    }
    let mut sorted = intervals.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let scales: Vec<u32> = k_range.clone().collect();
    let counts: Vec<u64> = scales.par_iter().map(|&k| boxes_at(&sorted, k)).collect();
    let fit_range = (k_range.start() + FIT_TRIM, k_range.end() - FIT_TRIM);
    let (xs, ys): (Vec<f64>, Vec<f64>) = scales
        .iter()
        .zip(&counts)
        .filter(|(k, n)| (fit_range.0..=fit_range.1).contains(*k) && **n > 0)
        .map(|(&k, &n)| (f64::from(k), (n as f64).log2()))
        .unzip();
    let fit = if xs.len() >= 2 { linear_fit(&xs, &ys) } else { None };
    Ok(BoxCountTable {
        scales,
        counts,
        slope: fit.map(|f| f.slope),
        slope_se: fit.map(|f| f.slope_se),
        fit_range,
    })
}

/// Confirmed crossings only, and confirmed plus possible zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroBoxCount {
    pub confirmed: BoxCountTable,
    pub with_possible: BoxCountTable,
}

pub fn zero_set_box_count(z: &ZeroSetEstimate, k_range: RangeInclusive<u32>) -> Result<ZeroBoxCount> {
    let confirmed: Vec<(f64, f64)> = z.confirmed().map(|c| (c.lo, c.hi)).collect();
    let all: Vec<(f64, f64)> = z.crossings.iter().map(|c| (c.lo, c.hi)).collect();
    Ok(ZeroBoxCount {
        confirmed: box_count(&confirmed, k_range.clone())?,
        with_possible: box_count(&all, k_range)?,
    })
}

/// Level-`depth` intervals of C_γ.
pub fn cantor_intervals(set: &CantorSet, depth: u32) -> Result<Vec<(f64, f64)>> {
    if depth > MAX_ENUMERATION_LEVEL {
        return Err(Error::ResourceGuard(format!(
            "Cantor level {depth} exceeds {MAX_ENUMERATION_LEVEL}"
        )));
    }
    set.intervals(depth)
}

/// Box counts of C_{γ,depth} from level 2 down to the scale of its intervals.
pub fn cantor_box_count(gamma: GammaParam, depth: u32) -> Result<BoxCountTable> {
    let set = CantorSet::new(gamma);
    let intervals = cantor_intervals(&set, depth)?;
    let finest = (-(set.base_len() * gamma.get().powi(depth as i32)).log2()).floor() as u32;
    box_count(&intervals, 2..=finest.clamp(2 + 2 * FIT_TRIM + 1, MAX_BOX_LEVEL))
}

/// Σ over level-k boxes meeting the confirmed crossings of 2^{-k/2}.
pub fn covering_sum(z: &ZeroSetEstimate, k: u32) -> Result<f64> {
    let size = (-f64::from(k)).exp2();
    if z.resolution > size || k > MAX_BOX_LEVEL {
        return Err(Error::range(
            "k",
            format!("box size 2^-{k} is finer than the resolution {}", z.resolution),
        ));
    }
    let mut confirmed: Vec<(f64, f64)> = z.confirmed().map(|c| (c.lo, c.hi)).collect();
    confirmed.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(boxes_at(&confirmed, k) as f64 * size.sqrt())
}

/// Grid cells [t_i, t_i + step] of the 2^grid_depth grid on `domain` whose
/// left end violates |f(t + h) − f(t)| ≤ h^α for some h = 2^{-j} < 2^{-n}
/// not below the grid step, merged into maximal intervals. Restricting h to
/// dyadic values makes this an under-approximation.
pub fn defect_set(
    f: &DriftFunction,
    domain: (f64, f64),
    alpha: f64,
    n: u32,
    grid_depth: u32,
) -> Result<Vec<(f64, f64)>> {
    if !(domain.0 >= 0.0 && domain.0 < domain.1 && domain.1.is_finite()) {
        return Err(Error::invalid("domain must satisfy 0 <= a < b"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::range("alpha", format!("{alpha} must lie in (0, 1]")));
    }
    if grid_depth < n + 4 {
        return Err(Error::range(
            "grid_depth",
            format!("{grid_depth} must be at least n + 4 = {}", n + 4),
        ));
    }
    if grid_depth > MAX_DEFECT_DEPTH {
        return Err(Error::ResourceGuard(format!(
            "defect grid depth {grid_depth} exceeds {MAX_DEFECT_DEPTH}"
        )));
    }
    let cells = 1usize << grid_depth;
    let step = (domain.1 - domain.0) / cells as f64;
    let hs: Vec<f64> = ((n + 1)..=MAX_BOX_LEVEL)
        .map(|j| (-f64::from(j)).exp2())
        .take_while(|&h| h >= step)
        .collect();
    let flagged: Vec<bool> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let t = domain.0 + i as f64 * step;
            let ft = f.value(t);
            hs.iter().any(|&h| (f.value(t + h) - ft).abs() > h.powf(alpha))
        })
        .collect();
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (i, _) in flagged.iter().enumerate().filter(|(_, &b)| b) {
        let lo = domain.0 + i as f64 * step;
        let hi = lo + step;
        match out.last_mut() {
            Some(last) if last.1 >= lo => last.1 = hi,
            _ => out.push((lo, hi)),
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionSummary {
    pub depth: u32,
    pub paths: u64,
    /// paths whose confirmed zero set is nonempty and yields a slope
    pub fitted_paths: u64,
    pub mean_slope: Estimate,
    pub mean_slope_with_possible: Estimate,
    pub scales: Vec<u32>,
    pub mean_counts: Vec<f64>,
    /// mean of 2^{-k/2} N(2^{-k}) over all paths, per scale
    pub mean_covering_sums: Vec<f64>,
    pub fit_range: (u32, u32),
    pub seed: SeedSpec,
}

/// Per-path box counts of the detected zero set of B − f on the dyadic grid
/// of `domain`; path p uses `seed.task(p)`. Slopes are averaged over paths
/// where they are defined.
pub fn zero_set_dimension(
    f: &DriftFunction,
    domain: (f64, f64),
    depth: u32,
    k_range: RangeInclusive<u32>,
    paths: u64,
    seed: SeedSpec,
) -> Result<DimensionSummary> {
    check_range(&k_range)?;
    if depth > MAX_ZERO_DEPTH {
        return Err(Error::ResourceGuard(format!("depth {depth} exceeds {MAX_ZERO_DEPTH}")));
    }
    if paths == 0 {
        return Err(Error::invalid("paths must be at least 1"));
    }
    let tables: Vec<Result<ZeroBoxCount>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let z = detect_zeros(f, domain, depth, seed.task(p), DEFAULT_REFINE_BUDGET)?;
            zero_set_box_count(&z, k_range.clone())
        })
        .collect();
    let scales: Vec<u32> = k_range.clone().collect();
    let mut sums = vec![0.0; scales.len()];
    let (mut slope, mut slope_all) = (Moments::default(), Moments::default());
    let mut fit_range = (0, 0);
    for t in tables {
        let t = t?;
        fit_range = t.confirmed.fit_range;
        for (s, &c) in sums.iter_mut().zip(&t.confirmed.counts) {
            *s += c as f64;
        }
        if let Some(v) = t.confirmed.slope {
            slope.push(v);
        }
        if let Some(v) = t.with_possible.slope {
            slope_all.push(v);
        }
    }
    let mean_counts: Vec<f64> = sums.iter().map(|s| s / paths as f64).collect();
    let mean_covering_sums = scales
        .iter()
        .zip(&mean_counts)
        .map(|(&k, &n)| n * (-f64::from(k) / 2.0).exp2())
        .collect();
    Ok(DimensionSummary {
        depth,
        paths,
        fitted_paths: slope.count(),
        mean_slope: Estimate::from_moments(&slope),
        mean_slope_with_possible: Estimate::from_moments(&slope_all),
        scales,
        mean_counts,
        mean_covering_sums,
        fit_range,
        seed,
    })
}
