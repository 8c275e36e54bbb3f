//! Brownian paths on arbitrary grids, midpoint bridging, and exact fractional
//! Brownian motion on small uniform grids.

use std::io::Write;
use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{std_normal_sample, SeedSpec};

/// Bridging refuses intervals narrower than this fraction of the path span.
pub const RESOLUTION_FLOOR: f64 = 1.0 / (1u64 << 52) as f64;

/// Largest uniform grid accepted by [`sample_fbm`] (points, including t = 0).
pub const MAX_FBM_POINTS: usize = 1 << 13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    times: Vec<f64>,
    values: Vec<f64>,
    origin_pinned: bool,
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    if !(grid[0] >= 0.0) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("grid must be finite and start at t >= 0"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("grid must be strictly increasing"));
    }
    Ok(())
}

impl SampledPath {
    pub fn new(times: Vec<f64>, values: Vec<f64>, origin_pinned: bool) -> Result<Self> {
        check_grid(&times)?;
        if times.len() != values.len() {
            return Err(Error::invalid("times and values differ in length"));
        }
        if origin_pinned && times[0] == 0.0 && values[0] != 0.0 {
            return Err(Error::invalid("pinned path must vanish at t = 0"));
        }
        Ok(Self {
            times,
            values,
            origin_pinned,
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn origin_pinned(&self) -> bool {
        self.origin_pinned
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.times, self.values)
    }

    /// Inserts the Brownian-bridge midpoint of interval `index` in place and
    /// returns the new sample's position.
    pub fn insert_midpoint<R: Rng + ?Sized>(&mut self, index: usize, rng: &mut R) -> Result<usize> {
        if index + 1 >= self.times.len() {
            return Err(Error::range(
                "interval index",
                format!("{index} with {} points", self.times.len()),
            ));
        }
        let (t0, t1) = (self.times[index], self.times[index + 1]);
        let span = self.times[self.times.len() - 1] - self.times[0];
        let mid = 0.5 * (t0 + t1);
        if t1 - t0 < RESOLUTION_FLOOR * span || !(mid > t0 && mid < t1) {
            return Err(Error::IntervalTooSmall);
        }
        let (v0, v1) = (self.values[index], self.values[index + 1]);
        let value = bridge_midpoint(v0, v1, t1 - t0, rng);
        self.times.insert(index + 1, mid);
        self.values.insert(index + 1, value);
        Ok(index + 1)
    }

    /// Linear interpolation; constant extension outside the grid.
    pub fn interpolate(&self, t: f64) -> f64 {
        let times = &self.times;
        if t <= times[0] {
            return self.values[0];
        }
        let last = times.len() - 1;
        if t >= times[last] {
            return self.values[last];
        }
        let i = times.partition_point(|&s| s <= t) - 1;
        let w = (t - times[i]) / (times[i + 1] - times[i]);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "time,value")?;
        for (t, v) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t},{v}")?;
        }
        Ok(())
    }
}

/// Conditional midpoint of a Brownian bridge of duration `dt` between `v0`
/// and `v1`: N((v0 + v1)/2, dt/4).
#[inline]
pub fn bridge_midpoint<R: Rng + ?Sized>(v0: f64, v1: f64, dt: f64, rng: &mut R) -> f64 {
    0.5 * (v0 + v1) + 0.5 * dt.sqrt() * std_normal_sample(rng)
}

/// Fills `out` with Brownian motion at `grid` using sequential increments.
pub fn fill_bm<R: Rng + ?Sized>(grid: &[f64], rng: &mut R, out: &mut Vec<f64>) {
    out.clear();
    out.reserve(grid.len());
    let mut prev_t = 0.0;
    let mut value = 0.0;
    for &t in grid {
        let dt = t - prev_t;
        if dt > 0.0 {
            value += dt.sqrt() * std_normal_sample(rng);
        }
        out.push(value);
        prev_t = t;
    }
}

pub fn sample_bm(grid: &[f64], seed: SeedSpec) -> Result<SampledPath> {
    check_grid(grid)?;
    let mut rng = seed.rng();
    let mut values = Vec::new();
    fill_bm(grid, &mut rng, &mut values);
    Ok(SampledPath {
        times: grid.to_vec(),
        values,
        origin_pinned: true,
    })
}

/// Returns a copy of `path` with the bridge midpoint of interval
/// `interval_index` inserted.
pub fn bridge_refine(path: &SampledPath, interval_index: usize, seed: SeedSpec) -> Result<SampledPath> {
    let mut out = path.clone();
    out.insert_midpoint(interval_index, &mut seed.rng())?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstParam(f64);

impl HurstParam {
    pub fn new(h: f64) -> Result<Self> {
        if h > 0.0 && h < 1.0 {
            Ok(Self(h))
        } else {
            Err(Error::range("Hurst index", format!("{h} not in (0, 1)")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Davies–Harte sampler for fractional Brownian motion on the uniform grid
/// `{0, T/n, …, T}`. The circulant eigenvalues are computed once and reused.
pub struct FbmSampler {
    hurst: HurstParam,
    horizon: f64,
    increments: usize,
    sqrt_eigen: Vec<f64>,
    fft: Arc<dyn rustfft::Fft<f64>>,
}

impl std::fmt::Debug for FbmSampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FbmSampler")
            .field("hurst", &self.hurst)
            .field("horizon", &self.horizon)
            .field("increments", &self.increments)
            .finish()
    }
}

fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let k = k as f64;
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

impl FbmSampler {
    /// `points` includes the origin, so the grid has `points − 1` increments.
    pub fn new(points: usize, horizon: f64, hurst: HurstParam) -> Result<Self> {
        if points > MAX_FBM_POINTS {
            return Err(Error::ResourceGuard(format!(
                "fBm grid of {points} points exceeds {MAX_FBM_POINTS}"
            )));
        }
        if points < 2 {
            return Err(Error::invalid("fBm grid needs at least two points"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::invalid("fBm horizon must be positive"));
        }
        let n = points - 1;
        let m = 2 * n;
        let mut row: Vec<Complex<f64>> = (0..m)
            .map(|j| {
                let lag = if j <= n { j } else { m - j };
                Complex::new(fgn_autocov(lag, hurst.get()), 0.0)
            })
            .collect();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        fft.process(&mut row);
        let scale = row.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
        let mut sqrt_eigen = Vec::with_capacity(m);
        for c in &row {
            let lambda = c.re;
            if lambda < -1e-10 * scale {
                return Err(Error::Factorization(format!(
                    "negative circulant eigenvalue {lambda:e} (n = {n}, H = {})",
                    hurst.get()
                )));
            }
            sqrt_eigen.push(lambda.max(0.0).sqrt());
        }
        Ok(Self {
            hurst,
            horizon,
            increments: n,
            sqrt_eigen,
            fft,
        })
    }

    pub fn grid(&self) -> Vec<f64> {
        let step = self.horizon / self.increments as f64;
        (0..=self.increments).map(|i| i as f64 * step).collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SampledPath {
        let n = self.increments;
        let m = 2 * n;
        let mf = m as f64;
        let mut w = vec![Complex::new(0.0, 0.0); m];
        w[0] = Complex::new(self.sqrt_eigen[0] / mf.sqrt() * std_normal_sample(rng), 0.0);
        w[n] = Complex::new(self.sqrt_eigen[n] / mf.sqrt() * std_normal_sample(rng), 0.0);
        for k in 1..n {
            let a = self.sqrt_eigen[k] / (2.0 * mf).sqrt();
            let z = Complex::new(std_normal_sample(rng), std_normal_sample(rng)) * a;
            w[k] = z;
            w[m - k] = z.conj();
        }
        self.fft.process(&mut w);
        let scale = (self.horizon / n as f64).powf(self.hurst.get());
        let mut values = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for z in w.iter().take(n) {
            acc += z.re * scale;
            values.push(acc);
        }
        SampledPath {
            times: self.grid(),
            values,
            origin_pinned: true,
        }
    }
}

/// Exact fBm on `points` uniform grid points over `[0, horizon]`.
pub fn sample_fbm(points: usize, horizon: f64, hurst: HurstParam, seed: SeedSpec) -> Result<SampledPath> {
    let sampler = FbmSampler::new(points, horizon, hurst)?;
    Ok(sampler.sample(&mut seed.rng()))
}

/// Dyadic grid `a + i (b − a) 2^{-depth}`, `i = 0..=2^depth`.
pub fn dyadic_grid(a: f64, b: f64, depth: u32) -> Vec<f64> {
    let n = 1usize << depth;
    let step = (b - a) / n as f64;
    (0..=n).map(|i| a + i as f64 * step).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{correlation, ks_two_sample, Moments};

    #[test]
    fn origin_only() {
        let p = sample_bm(&[0.0], SeedSpec::new(1, 0)).unwrap();
        assert_eq!(p.values(), &[0.0]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(sample_bm(&[], SeedSpec::new(1, 0)).is_err());
        assert!(sample_bm(&[1.0, 1.0], SeedSpec::new(1, 0)).is_err());
        assert!(sample_bm(&[2.0, 1.0], SeedSpec::new(1, 0)).is_err());
        assert!(sample_bm(&[-1.0, 1.0], SeedSpec::new(1, 0)).is_err());
    }

    #[test]
    fn variance_and_covariance() {
        let reps = 1_000_000u64;
        let mut v1 = Moments::default();
        let mut cross = Moments::default();
        let mut rng = SeedSpec::new(5, 0).rng();
        let mut buf = Vec::new();
        for _ in 0..reps {
            fill_bm(&[1.0, 2.0], &mut rng, &mut buf);
            v1.push(buf[0] * buf[0]);
            cross.push(buf[0] * buf[1]);
        }
        assert!((v1.mean() - 1.0).abs() < 0.01, "{}", v1.mean());
        assert!((cross.mean() - 1.0).abs() < 0.01, "{}", cross.mean());
    }

    #[test]
    fn bridge_midpoint_law() {
        let path = SampledPath::new(vec![0.0, 1.0], vec![0.0, 0.0], true).unwrap();
        let mut m = Moments::default();
        for i in 0..100_000u64 {
            let refined = bridge_refine(&path, 0, SeedSpec::new(9, i)).unwrap();
            assert_eq!(refined.times(), &[0.0, 0.5, 1.0]);
            assert_eq!(refined.values()[0], 0.0);
            assert_eq!(refined.values()[2], 0.0);
            m.push(refined.values()[1]);
        }
        assert!(m.mean().abs() < 4.0 * m.std_err());
        let var_se = 0.25 * (2.0 / 100_000f64).sqrt();
        assert!((m.variance() - 0.25).abs() < 4.0 * var_se, "{}", m.variance());
    }

    #[test]
    fn bridge_guards() {
        let path = SampledPath::new(vec![0.0, 1.0], vec![0.0, 0.0], true).unwrap();
        assert!(matches!(
            bridge_refine(&path, 1, SeedSpec::new(1, 0)),
            Err(Error::OutOfRange { .. })
        ));
        let tiny = SampledPath::new(vec![1.0, 1.0 + f64::EPSILON, 2.0], vec![0.0; 3], false).unwrap();
        assert_eq!(
            bridge_refine(&tiny, 0, SeedSpec::new(1, 0)),
            Err(Error::IntervalTooSmall)
        );
    }

    #[test]
    fn bridging_matches_direct_sampling() {
        // Law of B(1/4) obtained by bridging from {0, 1/2, 1} vs direct.
        let reps = 10_000u64;
        let mut direct = Vec::new();
        let mut bridged = Vec::new();
        let grid = dyadic_grid(0.0, 1.0, 2);
        for i in 0..reps {
            let p = sample_bm(&grid, SeedSpec::new(77, i)).unwrap();
            direct.push(p.values()[1]);
            let coarse = sample_bm(&[0.0, 0.5, 1.0], SeedSpec::new(78, i)).unwrap();
            let mut rng = SeedSpec::new(79, i).rng();
            let mut fine = coarse.clone();
            fine.insert_midpoint(1, &mut rng).unwrap();
            fine.insert_midpoint(0, &mut rng).unwrap();
            assert_eq!(fine.times(), grid.as_slice());
            bridged.push(fine.values()[1]);
        }
        assert!(ks_two_sample(&direct, &bridged).p_value > 1e-3);
    }

    #[test]
    fn fbm_guards() {
        assert!(HurstParam::new(0.0).is_err());
        assert!(HurstParam::new(1.0).is_err());
        let h = HurstParam::new(0.3).unwrap();
        assert!(matches!(
            sample_fbm(MAX_FBM_POINTS + 1, 1.0, h, SeedSpec::new(1, 0)),
            Err(Error::ResourceGuard(_))
        ));
    }

    #[test]
    fn fbm_half_is_brownian() {
        let h = HurstParam::new(0.5).unwrap();
        let sampler = FbmSampler::new(65, 1.0, h).unwrap();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..10_000u64 {
            let p = sampler.sample(&mut SeedSpec::new(3, i).rng());
            let v = p.values();
            a.push(v[10] - v[9]);
            b.push(v[11] - v[10]);
        }
        let r = correlation(&a, &b);
        assert!(r.abs() < 4.0 / 100.0, "lag-1 correlation {r}");
    }

    #[test]
    fn fbm_variogram() {
        let h = HurstParam::new(0.25).unwrap();
        let sampler = FbmSampler::new(33, 1.0, h).unwrap();
        let mut m = Moments::default();
        for i in 0..10_000u64 {
            let p = sampler.sample(&mut SeedSpec::new(4, i).rng());
            let v = p.values();
            // |t - s| = 0.5
            m.push((v[24] - v[8]).powi(2));
        }
        let expect = 0.5f64.powf(0.5);
        assert!(
            (m.mean() - expect).abs() < 4.0 * m.std_err(),
            "{} vs {expect}",
            m.mean()
        );
    }

    #[test]
    fn interpolation_is_linear() {
        let p = SampledPath::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0], true).unwrap();
        assert_eq!(p.interpolate(0.5), 1.0);
        assert_eq!(p.interpolate(2.0), 1.0);
        assert_eq!(p.interpolate(5.0), 0.0);
    }
}
