//! Reproducible random streams and Gaussian kernels.
//!
//! Every Monte Carlo task draws from its own ChaCha8 stream keyed by
//! `(master_seed, stream_index)`. Tasks never share a generator, so results do
//! not depend on how work is scheduled across threads.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::OnceLock;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generator used for every sampled quantity in the crate.
pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedSpec {
    pub master_seed: u64,
    pub stream_index: u64,
}

impl SeedSpec {
    pub const fn new(master_seed: u64, stream_index: u64) -> Self {
        Self {
            master_seed,
            stream_index,
        }
    }

    /// Substream for Monte Carlo task `index` (path, tree, replicate).
    pub const fn task(&self, index: u64) -> Self {
        Self {
            master_seed: self.master_seed,
            stream_index: index,
        }
    }

    /// Independent master seed for a named sub-experiment, e.g. the
    /// percolation trees that accompany a set of Brownian paths.
    pub fn fork(&self, label: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(label ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_word_pos(u128::from(self.stream_index) << 1);
        Self {
            master_seed: rng.next_u64(),
            stream_index: self.stream_index,
        }
    }

    pub fn rng(&self) -> StreamRng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master_seed);
        rng.set_stream(self.stream_index);
        rng
    }
}

impl std::fmt::Display for SeedSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.master_seed, self.stream_index)
    }
}

/// Draws `count` i.i.d. standard normals from the stream named by `seed`.
pub fn gaussian_stream(seed: SeedSpec, count: usize) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..count).map(|_| rng.sample(StandardNormal)).collect()
}

#[inline]
pub fn std_normal_sample<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

#[inline]
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal CDF without the NaN check, for internal hot loops.
#[inline]
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal CDF Φ(x). Infinite arguments are allowed.
pub fn std_normal_cdf(x: f64) -> Result<f64> {
    if x.is_nan() {
        return Err(Error::invalid("normal cdf of NaN"));
    }
    Ok(phi(x))
}

/// Φ(b) − Φ(a) computed on the tail that avoids cancellation.
pub(crate) fn normal_interval(a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    if a >= 0.0 {
        phi(-a) - phi(-b)
    } else {
        phi(b) - phi(a)
    }
}

/// Rectangle `[x_lo, x_hi] × [y_lo, y_hi]` for a standard bivariate normal with
/// correlation `rho`. Bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BivariateRect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
    pub rho: f64,
}

impl BivariateRect {
    pub fn new(x: (f64, f64), y: (f64, f64), rho: f64) -> Result<Self> {
        let rect = Self {
            x_lo: x.0,
            x_hi: x.1,
            y_lo: y.0,
            y_hi: y.1,
            rho,
        };
        rect.validate()?;
        Ok(rect)
    }

    fn validate(&self) -> Result<()> {
        let bounds = [self.x_lo, self.x_hi, self.y_lo, self.y_hi, self.rho];
        if bounds.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("NaN in bivariate rectangle"));
        }
        if self.x_lo > self.x_hi || self.y_lo > self.y_hi {
            return Err(Error::invalid("rectangle bounds out of order"));
        }
        if self.rho.abs() > 1.0 {
            return Err(Error::range("rho", format!("|{}| > 1", self.rho)));
        }
        Ok(())
    }
}

/// P((X, Y) ∈ rect) for a standard bivariate normal with correlation `rect.rho`.
pub fn bivariate_rect_prob(rect: &BivariateRect) -> Result<f64> {
    rect.validate()?;
    let BivariateRect {
        x_lo,
        x_hi,
        y_lo,
        y_hi,
        rho,
    } = *rect;
    if x_lo == x_hi || y_lo == y_hi {
        return Ok(0.0);
    }
    let p = upper_orthant(x_lo, y_lo, rho) - upper_orthant(x_hi, y_lo, rho) - upper_orthant(x_lo, y_hi, rho)
        + upper_orthant(x_hi, y_hi, rho);
    Ok(p.clamp(0.0, 1.0))
}

/// P(X > h, Y > k) for a standard bivariate normal with correlation `r`.
///
/// Finite arguments go through Genz's BVNU scheme (Gauss–Legendre on the
/// arcsine form for |r| < 0.925, Drezner's asymptotic expansion above).
pub fn upper_orthant(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return phi(-k);
    }
    if k == f64::NEG_INFINITY {
        return phi(-h);
    }
    if r >= 1.0 {
        return phi(-h.max(k));
    }
    if r <= -1.0 {
        // Y = -X: h < X < -k
        return normal_interval(h, -k);
    }
    genz_bvnu(h, k, r)
}

struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

/// Positive half of an n-point Gauss–Legendre rule on [-1, 1], by Newton
/// iteration on the Legendre recurrence.
fn gauss_legendre_half(n: usize) -> GaussLegendre {
    let half = n / 2;
    let mut nodes = Vec::with_capacity(half);
    let mut weights = Vec::with_capacity(half);
    for i in 0..half {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let jf = j as f64;
                let p2 = ((2.0 * jf - 1.0) * z * p1 - (jf - 1.0) * p0) / jf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        nodes.push(z);
        weights.push(2.0 / ((1.0 - z * z) * dp * dp));
    }
    GaussLegendre { nodes, weights }
}

fn legendre_rule(points: usize) -> &'static GaussLegendre {
    static RULES: OnceLock<[GaussLegendre; 3]> = OnceLock::new();
    let rules = RULES.get_or_init(|| [gauss_legendre_half(6), gauss_legendre_half(12), gauss_legendre_half(20)]);
    match points {
        6 => &rules[0],
        12 => &rules[1],
        _ => &rules[2],
    }
}

fn genz_bvnu(h: f64, k: f64, r: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let rule = if r.abs() < 0.3 {
        legendre_rule(6)
    } else if r.abs() < 0.75 {
        legendre_rule(12)
    } else {
        legendre_rule(20)
    };
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin();
        for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
            for sgn in [-1.0, 1.0] {
                let sn = (asr * (sgn * x + 1.0) / 2.0).sin();
                bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
            }
        }
        return bvn * asr / (2.0 * two_pi) + phi(-h) * phi(-k);
    }
    let mut k = k;
    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let as_ = (1.0 - r) * (1.0 + r);
    let mut a = as_.sqrt();
    let bs = (h - k) * (h - k);
    let c = (4.0 - hk) / 8.0;
    let d = (12.0 - hk) / 16.0;
    bvn = a
        * (-(bs / as_ + hk) / 2.0).exp()
        * (1.0 - c * (bs - as_) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as_ * as_ / 5.0);
    if hk > -160.0 {
        let b = bs.sqrt();
        bvn -= (-hk / 2.0).exp() * two_pi.sqrt() * phi(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
    }
    a /= 2.0;
    for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
        for sgn in [-1.0, 1.0] {
            let xs = (a * (sgn * x + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let asr = -(bs / xs + hk) / 2.0;
            if asr > -100.0 {
                bvn += a
                    * w
                    * asr.exp()
                    * ((-hk * xs / (2.0 * (1.0 + rs).powi(2))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)));
            }
        }
    }
    bvn = -bvn / two_pi;
    if r > 0.0 {
        bvn + phi(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += normal_interval(h, k);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Adaptive Simpson on the standard normal density.
    fn simpson_density(a: f64, b: f64, tol: f64) -> f64 {
        #[allow(clippy::too_many_arguments)]
        fn rec(a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
            let m = 0.5 * (a + b);
            let lm = 0.5 * (a + m);
            let rm = 0.5 * (m + b);
            let flm = std_normal_pdf(lm);
            let frm = std_normal_pdf(rm);
            let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
            let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
            if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
                return left + right + (left + right - whole) / 15.0;
            }
            rec(a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
        }
        let (fa, fb, fm) = (std_normal_pdf(a), std_normal_pdf(b), std_normal_pdf(0.5 * (a + b)));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        rec(a, b, fa, fm, fb, whole, tol, 50)
    }

    #[test]
    fn cdf_basic_values() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY).unwrap(), 0.0);
        assert_eq!(std_normal_cdf(f64::INFINITY).unwrap(), 1.0);
        for x in [0.3, 1.0, 2.5] {
            let lhs = std_normal_cdf(-x).unwrap();
            let rhs = 1.0 - std_normal_cdf(x).unwrap();
            assert!((lhs - rhs).abs() < 1e-15, "{x}");
        }
        assert!(std_normal_cdf(f64::NAN).is_err());
    }

    #[test]
    fn cdf_matches_quadrature() {
        let quad = 0.5 + simpson_density(0.0, 1.0, 1e-14);
        let got = std_normal_cdf(1.0).unwrap();
        assert!((got - quad).abs() < 1e-10, "{got} vs {quad}");
        let quad = 0.5 - simpson_density(-3.7, 0.0, 1e-14);
        assert!((std_normal_cdf(-3.7).unwrap() - quad).abs() < 1e-10);
    }

    #[test]
    fn cdf_monotone_on_grid() {
        let mut prev = 0.0;
        for i in -4000..=4000 {
            let v = std_normal_cdf(i as f64 * 2e-3).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        for n in [6usize, 12, 20] {
            let rule = legendre_rule(n);
            // ∫_{-1}^{1} x^{2j} dx = 2/(2j+1), exact up to degree 2n-1.
            for j in 0..n {
                let sum: f64 = rule
                    .nodes
                    .iter()
                    .zip(&rule.weights)
                    .map(|(x, w)| 2.0 * w * x.powi(2 * j as i32))
                    .sum();
                assert!((sum - 2.0 / (2 * j + 1) as f64).abs() < 1e-13, "n={n} j={j}");
            }
        }
    }

    #[test]
    fn bivariate_special_cases() {
        let inf = f64::INFINITY;
        let quad = BivariateRect::new((0.0, inf), (0.0, inf), 0.0).unwrap();
        assert!((bivariate_rect_prob(&quad).unwrap() - 0.25).abs() < 1e-14);

        // Quadrant arcsine law, evaluated independently.
        for rho in [-0.95, -0.6, -0.2, 0.5, 0.8, 0.93, 0.99] {
            let rect = BivariateRect::new((0.0, inf), (0.0, inf), rho).unwrap();
            let expect = 0.25 + f64::asin(rho) / (2.0 * PI);
            let got = bivariate_rect_prob(&rect).unwrap();
            assert!((got - expect).abs() < 1e-12, "rho={rho}: {got} vs {expect}");
        }

        let rect = BivariateRect::new((-0.5, 1.2), (0.3, 2.0), 1.0).unwrap();
        let expect = phi(1.2) - phi(0.3);
        assert!((bivariate_rect_prob(&rect).unwrap() - expect).abs() < 1e-14);

        let rect = BivariateRect::new((-0.5, 1.2), (0.3, 2.0), -1.0).unwrap();
        // Y = -X ∈ [0.3, 2] ⇔ X ∈ [-2, -0.3]; intersect with [-0.5, 1.2]
        let expect = phi(-0.3) - phi(-0.5);
        assert!((bivariate_rect_prob(&rect).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn bivariate_rejects_bad_rho() {
        let err = BivariateRect::new((0.0, 1.0), (0.0, 1.0), 1.5);
        assert!(err.is_err());
        let rect = BivariateRect {
            x_lo: 0.0,
            x_hi: 1.0,
            y_lo: 0.0,
            y_hi: 1.0,
            rho: -1.01,
        };
        assert!(bivariate_rect_prob(&rect).is_err());
    }

    #[test]
    fn independent_rectangles_factor() {
        let mut rng = SeedSpec::new(11, 0).rng();
        for _ in 0..1000 {
            let mut pick = || -> (f64, f64) {
                let a: f64 = rng.random_range(-3.0..3.0);
                let b: f64 = rng.random_range(-3.0..3.0);
                (a.min(b), a.max(b))
            };
            let (x, y) = (pick(), pick());
            let rect = BivariateRect::new(x, y, 0.0).unwrap();
            let expect = (phi(x.1) - phi(x.0)) * (phi(y.1) - phi(y.0));
            assert!((bivariate_rect_prob(&rect).unwrap() - expect).abs() < 1e-8);
        }
    }

    #[test]
    fn stream_is_deterministic_and_distinct() {
        let s = SeedSpec::new(42, 7);
        let a = gaussian_stream(s, 1000);
        let b = gaussian_stream(s, 1000);
        assert_eq!(a, b);
        assert!(gaussian_stream(s, 0).is_empty());
        let c = gaussian_stream(s.task(8), 1000);
        assert_ne!(a, c);
        assert_ne!(s.fork(1), s.fork(2));
        assert_eq!(s.fork(1), s.fork(1));
    }

    #[test]
    fn stream_moments() {
        let xs = gaussian_stream(SeedSpec::new(2024, 0), 1_000_000);
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4.0 / n.sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
    }
}
