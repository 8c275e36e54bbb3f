//! Drift catalog: every function here is continuous on [0, ∞) and can be
//! evaluated pointwise. Kinds that admit a clean Hölder bound carry it as
//! metadata; the zero detector uses it to size its uncertainty band.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::brownian::{FbmSampler, HurstParam, SampledPath};
use crate::cantor::{CantorSet, GammaParam};
use crate::error::{Error, Result};
use crate::gaussian::SeedSpec;

/// |f(t) − f(s)| ≤ constant · |t − s|^alpha.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holder {
    pub alpha: f64,
    pub constant: f64,
}

impl Holder {
    pub fn bound(&self, h: f64) -> f64 {
        self.constant * h.powf(self.alpha)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoudParams {
    alpha: f64,
    a: u32,
    term_count: u32,
}

/// Tail of the truncated Loud series must stay below this.
pub const LOUD_TAIL_TOLERANCE: f64 = 1e-12;

impl LoudParams {
    /// Chooses the truncation so the neglected tail is below
    /// [`LOUD_TAIL_TOLERANCE`].
    pub fn new(alpha: f64, a: u32) -> Result<Self> {
        Self::validate(alpha, a)?;
        let mut k = 1;
        while Self::tail_bound_for(alpha, a, k) >= LOUD_TAIL_TOLERANCE {
            k += 1;
        }
        Ok(Self {
            alpha,
            a,
            term_count: k,
        })
    }

    pub fn with_terms(alpha: f64, a: u32, term_count: u32) -> Result<Self> {
        Self::validate(alpha, a)?;
        if term_count == 0 {
            return Err(Error::invalid("Loud series needs at least one term"));
        }
        Ok(Self { alpha, a, term_count })
    }

    fn validate(alpha: f64, a: u32) -> Result<()> {
        if !(alpha > 0.0 && alpha < 1.0) || a == 0 {
            return Err(Error::invalid(format!("Loud parameters alpha = {alpha}, A = {a}")));
        }
        if 2.0 * f64::from(a) * (1.0 - alpha) <= 1.0 {
            return Err(Error::invalid(format!(
                "Loud parameters violate 2A(1 - alpha) > 1 (alpha = {alpha}, A = {a})"
            )));
        }
        Ok(())
    }

    fn tail_bound_for(alpha: f64, a: u32, k: u32) -> f64 {
        let r = (-2.0 * f64::from(a) * alpha).exp2();
        r.powi(k as i32 + 1) / (1.0 - r)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn a(&self) -> u32 {
        self.a
    }

    pub fn term_count(&self) -> u32 {
        self.term_count
    }

    /// Upper bound on Σ_{k > K} g_k.
    pub fn tail_bound(&self) -> f64 {
        Self::tail_bound_for(self.alpha, self.a, self.term_count)
    }

    fn log_scale(&self) -> i32 {
        2 * self.a as i32
    }

    /// g_k(t) = 2^{-2Aαk} g₀(2^{2Ak} t).
    pub fn term(&self, k: u32, t: f64) -> f64 {
        let lg = self.log_scale() * k as i32;
        (-f64::from(lg) * self.alpha).exp2() * triangle_wave(t * f64::from(lg).exp2())
    }

    pub fn eval(&self, t: f64) -> f64 {
        (1..=self.term_count).map(|k| self.term(k, t)).sum()
    }
}

/// g₀: 0 at even integers, 1 at odd integers, linear in between.
pub fn triangle_wave(x: f64) -> f64 {
    let r = x.rem_euclid(2.0);
    if r <= 1.0 {
        r
    } else {
        2.0 - r
    }
}

/// Cube-root start, linear bridge, Cantor middle and slope-one tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingletonDriftParams {
    pub c: f64,
    pub delta: f64,
    pub q1: f64,
    pub q2: f64,
    pub gamma: GammaParam,
    pub epsilon: f64,
}

impl SingletonDriftParams {
    pub fn new(c: f64, delta: f64, q1: f64, q2: f64, gamma: GammaParam, epsilon: f64) -> Result<Self> {
        if !(c > 0.0) || !(epsilon >= 0.0) {
            return Err(Error::invalid("singleton drift needs c > 0 and epsilon >= 0"));
        }
        if !(0.0 < delta && delta < q1 && q1 < q2) {
            return Err(Error::invalid(format!(
                "singleton drift needs 0 < delta < q1 < q2, got {delta}, {q1}, {q2}"
            )));
        }
        Ok(Self {
            c,
            delta,
            q1,
            q2,
            gamma,
            epsilon,
        })
    }

    pub fn cantor(&self) -> CantorSet {
        CantorSet::new(self.gamma)
    }

    pub fn eval(&self, t: f64) -> f64 {
        let cantor = self.cantor();
        if t <= self.delta {
            -self.c * t.cbrt()
        } else if t <= self.q1 {
            let start = -self.c * self.delta.cbrt();
            let end = cantor.eval(self.q1);
            start + (end - start) * (t - self.delta) / (self.q1 - self.delta)
        } else if t <= self.q2 {
            cantor.eval(t)
        } else {
            cantor.eval(self.q2) + (t - self.q2)
        }
    }
}

/// Self-similar cascade of Cantor functions: f(4^{-n}(1 + 3t)) = 2^{-n}(1 + f_γ(t))
/// for n ≥ 1, t ∈ [0, 1]; f(0) = 0 and f = 1 on [1, ∞).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeDrift {
    pub unit: CantorSet,
}

impl CascadeDrift {
    pub fn new(gamma: GammaParam) -> Self {
        Self {
            unit: CantorSet::with_base(gamma, 0.0, 1.0).expect("unit base"),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        // Smallest n ≥ 1 with 4^{-n} ≤ s; scaling by powers of four is exact.
        let mut n = 1i32;
        let mut scaled = 4.0 * s;
        while scaled < 1.0 {
            scaled *= 4.0;
            n += 1;
        }
        let t = ((scaled - 1.0) / 3.0).clamp(0.0, 1.0);
        (-f64::from(n)).exp2() * (1.0 + self.unit.eval(t))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DriftKind {
    Cantor {
        set: CantorSet,
    },
    Cascade {
        drift: CascadeDrift,
    },
    Loud {
        params: LoudParams,
    },
    SingletonPiecewise {
        params: SingletonDriftParams,
    },
    Linear {
        slope: f64,
        intercept: f64,
    },
    /// coef · t^exponent; `cube_root` is exponent 1/3.
    Power {
        coef: f64,
        exponent: f64,
    },
    FbmSample {
        path: SampledPath,
        hurst: f64,
    },
    Constant {
        value: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftFunction {
    kind: DriftKind,
    declared_holder: Option<Holder>,
    spec: String,
}

impl fmt::Display for DriftFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.spec)
    }
}

impl DriftFunction {
    pub fn cantor(set: CantorSet) -> Self {
        let alpha = set.gamma.holder_exponent();
        let constant = ((1.0 - 2.0 * set.gamma.get()) * set.base_len()).powf(-alpha);
        let spec = if set.base == (1.0, 2.0) {
            format!("cantor:gamma={}", set.gamma.get())
        } else {
            format!("cantor:gamma={},a={},b={}", set.gamma.get(), set.base.0, set.base.1)
        };
        Self {
            kind: DriftKind::Cantor { set },
            declared_holder: Some(Holder { alpha, constant }),
            spec,
        }
    }

    pub fn cascade(gamma: GammaParam) -> Self {
        Self {
            kind: DriftKind::Cascade {
                drift: CascadeDrift::new(gamma),
            },
            declared_holder: Some(Holder {
                alpha: gamma.holder_exponent().min(0.5),
                constant: 3.0,
            }),
            spec: format!("cascade:gamma={}", gamma.get()),
        }
    }

    pub fn loud(params: LoudParams) -> Self {
        let two_a = 2.0 * f64::from(params.a());
        let alpha = params.alpha();
        let constant = 1.0 / (1.0 - (-two_a * (1.0 - alpha)).exp2()) + 1.0 / (1.0 - (-two_a * alpha).exp2());
        Self {
            kind: DriftKind::Loud { params },
            declared_holder: Some(Holder { alpha, constant }),
            spec: format!("loud:alpha={},A={},K={}", alpha, params.a(), params.term_count()),
        }
    }

    pub fn singleton(params: SingletonDriftParams) -> Self {
        Self {
            spec: format!(
                "singleton:gamma={},epsilon={},c={},delta={},q1={},q2={}",
                params.gamma.get(),
                params.epsilon,
                params.c,
                params.delta,
                params.q1,
                params.q2
            ),
            kind: DriftKind::SingletonPiecewise { params },
            declared_holder: None,
        }
    }

    pub fn linear(slope: f64, intercept: f64) -> Self {
        Self {
            kind: DriftKind::Linear { slope, intercept },
            declared_holder: Some(Holder {
                alpha: 1.0,
                constant: slope.abs(),
            }),
            spec: format!("linear:slope={slope},intercept={intercept}"),
        }
    }

    pub fn power(coef: f64, exponent: f64) -> Result<Self> {
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(Error::invalid(format!("power exponent {exponent} not in (0, 1]")));
        }
        Ok(Self {
            kind: DriftKind::Power { coef, exponent },
            declared_holder: Some(Holder {
                alpha: exponent,
                constant: coef.abs(),
            }),
            spec: format!("power:c={coef},p={exponent}"),
        })
    }

    pub fn cube_root(coef: f64) -> Self {
        let mut f = Self::power(coef, 1.0 / 3.0).expect("valid exponent");
        f.spec = format!("cube_root:c={coef}");
        f
    }

    /// Frozen fBm sample, linearly interpolated between grid points and held
    /// constant past the end of the grid.
    pub fn fbm_sample(path: SampledPath, hurst: HurstParam) -> Self {
        let spec = format!(
            "fbm:H={},points={},horizon={}",
            hurst.get(),
            path.len(),
            path.times()[path.len() - 1]
        );
        Self {
            kind: DriftKind::FbmSample {
                path,
                hurst: hurst.get(),
            },
            declared_holder: None,
            spec,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self {
            kind: DriftKind::Constant { value },
            declared_holder: Some(Holder {
                alpha: 1.0,
                constant: 0.0,
            }),
            spec: if value == 0.0 {
                "zero".to_string()
            } else {
                format!("constant:value={value}")
            },
        }
    }

    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn kind(&self) -> &DriftKind {
        &self.kind
    }

    pub fn declared_holder(&self) -> Option<Holder> {
        self.declared_holder
    }

    /// True for drifts that are monotone on [0, ∞), where the oscillation
    /// over a cell is the difference of its endpoint values.
    pub fn is_monotone(&self) -> bool {
        matches!(
            self.kind,
            DriftKind::Cantor { .. }
                | DriftKind::Cascade { .. }
                | DriftKind::Linear { .. }
                | DriftKind::Power { .. }
                | DriftKind::Constant { .. }
        )
    }

    pub fn with_holder(mut self, holder: Option<Holder>) -> Self {
        self.declared_holder = holder;
        self
    }

    /// Catalog string that [`DriftFunction::parse`] maps back to this drift
    /// (fBm drifts additionally need their sampling seed).
    pub fn spec(&self) -> &str {
        &self.spec
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("drift evaluated at t = {t} < 0")));
        }
        Ok(self.value(t))
    }

    /// Evaluation without the domain check (t ≥ 0 assumed).
    pub fn value(&self, t: f64) -> f64 {
        match &self.kind {
            DriftKind::Cantor { set } => set.eval(t),
            DriftKind::Cascade { drift } => drift.eval(t),
            DriftKind::Loud { params } => params.eval(t),
            DriftKind::SingletonPiecewise { params } => params.eval(t),
            DriftKind::Linear { slope, intercept } => intercept + slope * t,
            DriftKind::Power { coef, exponent } => coef * t.powf(*exponent),
            DriftKind::FbmSample { path, .. } => path.interpolate(t),
            DriftKind::Constant { value } => *value,
        }
    }

    /// Parses `name[:key=value,...]`. fBm drifts are sampled from `seed`.
    pub fn parse(text: &str, seed: SeedSpec) -> Result<Self> {
        let (name, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut args = BTreeMap::new();
        for part in rest.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::invalid(format!("drift parameter {part:?} lacks '='")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("drift parameter {k} = {v:?} is not a number")))?;
            args.insert(k.trim().to_string(), v);
        }
        let get = |key: &str, default: Option<f64>| -> Result<f64> {
            args.get(key)
                .copied()
                .or(default)
                .ok_or_else(|| Error::invalid(format!("drift {name} needs parameter {key}")))
        };
        let drift = match name.trim() {
            "zero" => Self::zero(),
            "constant" => Self::constant(get("value", Some(0.0))?),
            "linear" => Self::linear(get("slope", Some(1.0))?, get("intercept", Some(0.0))?),
            "cube_root" => Self::cube_root(get("c", Some(1.0))?),
            "power" => Self::power(get("c", Some(1.0))?, get("p", None)?)?,
            "cantor" => {
                let gamma = GammaParam::new(get("gamma", None)?)?;
                let set = CantorSet::with_base(gamma, get("a", Some(1.0))?, get("b", Some(2.0))?)?;
                Self::cantor(set)
            }
            "cascade" => Self::cascade(GammaParam::new(get("gamma", None)?)?),
            "loud" => {
                let alpha = get("alpha", None)?;
                let a = get("A", Some(2.0))? as u32;
                let params = match args.get("K") {
                    Some(&k) => LoudParams::with_terms(alpha, a, k as u32)?,
                    None => LoudParams::new(alpha, a)?,
                };
                Self::loud(params)
            }
            "singleton" => {
                let gamma = GammaParam::new(get("gamma", Some(0.15))?)?;
                Self::singleton(SingletonDriftParams::new(
                    get("c", Some(1.0))?,
                    get("delta", Some(0.01))?,
                    get("q1", Some(1.0))?,
                    get("q2", Some(2.0))?,
                    gamma,
                    get("epsilon", Some(0.5))?,
                )?)
            }
            "fbm" => {
                let hurst = HurstParam::new(get("H", None)?)?;
                let points = get("points", Some(8192.0))? as usize;
                let horizon = get("horizon", Some(2.0))?;
                let sampler = FbmSampler::new(points, horizon, hurst)?;
                let path = sampler.sample(&mut seed.rng());
                Self::fbm_sample(path, hurst)
            }
            other => return Err(Error::invalid(format!("unknown drift {other:?}"))),
        };
        Ok(drift)
    }
}

pub fn eval_drift(f: &DriftFunction, t: f64) -> Result<f64> {
    f.eval(t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementClass {
    DivergesPlus,
    DivergesMinus,
    Bounded,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncrementDiagnostic {
    pub scales: Vec<f64>,
    /// (f(t + h) − f(t)) / √h for each scale.
    pub ratios: Vec<f64>,
    pub class: IncrementClass,
}

const DIVERGENCE_FACTOR: f64 = 10.0;

fn diverges_up(r: &[f64]) -> bool {
    let (first, last) = (r[0], r[r.len() - 1]);
    let tail = &r[r.len() / 2..];
    last > 0.0 && last > DIVERGENCE_FACTOR * first.abs() && tail.windows(2).all(|w| w[1] >= w[0])
}

/// Local increment exponent relative to √h along decreasing scales.
pub fn increment_exponent(f: &DriftFunction, t: f64, h_scales: &[f64]) -> Result<IncrementDiagnostic> {
    if h_scales.len() < 2 {
        return Err(Error::invalid("need at least two scales"));
    }
    if h_scales.windows(2).any(|w| w[1] >= w[0]) || h_scales[h_scales.len() - 1] < (-40.0f64).exp2() {
        return Err(Error::invalid("scales must decrease strictly and stay >= 2^-40"));
    }
    let base = f.eval(t)?;
    let ratios: Vec<f64> = h_scales.iter().map(|&h| (f.value(t + h) - base) / h.sqrt()).collect();
    let negated: Vec<f64> = ratios.iter().map(|r| -r).collect();
    let tail = &ratios[ratios.len() / 2..];
    let max_abs = tail.iter().map(|r| r.abs()).fold(0.0, f64::max);
    let min_abs = tail.iter().map(|r| r.abs()).fold(f64::INFINITY, f64::min);
    let class = if diverges_up(&ratios) {
        IncrementClass::DivergesPlus
    } else if diverges_up(&negated) {
        IncrementClass::DivergesMinus
    } else if max_abs <= DIVERGENCE_FACTOR * min_abs {
        IncrementClass::Bounded
    } else {
        IncrementClass::Inconclusive
    };
    Ok(IncrementDiagnostic {
        scales: h_scales.to_vec(),
        ratios,
        class,
    })
}

/// Step used to probe the neighbourhood in [`loud_descent_check`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescentStep {
    /// 2^{-2A(m+1)}. This shifts g_{m+1} by exactly one unit, which flips it
    /// about 1/2, so the asserted monotonicity fails for a sizeable fraction
    /// of points.
    Published,
    /// 2^{1-2A(m+1)}: every g_k with k > m is left unchanged.
    Doubled,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescentVerdict {
    pub pass: bool,
    /// true when the probe went right (expects a decrease), false when left
    pub probe_right: bool,
    pub probe_point: f64,
    pub value_at_t: f64,
    pub value_at_probe: f64,
}

/// Checks that g is not increasing at `t` at the scale of term `m`.
pub fn loud_descent_check(params: &LoudParams, t: f64, m: u32, step: DescentStep) -> Result<DescentVerdict> {
    let two_a = 2 * params.a() as i32;
    let scaled = t * f64::from(two_a * m as i32).exp2();
    if !scaled.is_finite() || scaled.floor().rem_euclid(2.0) != 1.0 {
        return Err(Error::Precondition(
            "parity precondition: floor(2^{2Am} t) must be odd".into(),
        ));
    }
    let mut h = f64::from(-two_a * (m as i32 + 1)).exp2();
    if step == DescentStep::Doubled {
        h *= 2.0;
    }
    let threshold = (-f64::from(two_a) * params.alpha() * f64::from(m) - 1.0).exp2();
    let g = |x: f64| params.eval(x);
    let value_at_t = g(t);
    let probe_right = params.term(m, t) >= threshold;
    let (probe_point, pass) = if probe_right {
        let p = t + h;
        (p, g(p) < value_at_t)
    } else {
        let p = t - h;
        (p, g(p) > value_at_t)
    };
    Ok(DescentVerdict {
        pass,
        probe_right,
        probe_point,
        value_at_t,
        value_at_probe: g(probe_point),
    })
}

/// Draws a point with odd ⌊2^{2Am} t⌋ in [lo, hi) (rejection sampling).
pub fn sample_odd_parity_point<R: Rng + ?Sized>(params: &LoudParams, m: u32, lo: f64, hi: f64, rng: &mut R) -> f64 {
    let scale = f64::from(2 * params.a() as i32 * m as i32).exp2();
    loop {
        let t: f64 = rng.random_range(lo..hi);
        if (t * scale).floor().rem_euclid(2.0) == 1.0 {
            return t;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderAudit {
    pub pairs: usize,
    pub violations: usize,
    /// max over audited pairs of |f(t) − f(s)| / |t − s|^alpha
    pub max_ratio: f64,
}

/// Audits |f(t) − f(s)| ≤ C |t − s|^α (with `slack`) on random pairs in
/// `[lo, hi]`, with pair separations spread log-uniformly down to 2^-30.
pub fn holder_audit(
    f: &DriftFunction,
    holder: Holder,
    lo: f64,
    hi: f64,
    pairs: usize,
    slack: f64,
    seed: SeedSpec,
) -> HolderAudit {
    let mut rng = seed.rng();
    let mut report = HolderAudit {
        pairs,
        violations: 0,
        max_ratio: 0.0,
    };
    let span = hi - lo;
    for _ in 0..pairs {
        let t: f64 = rng.random_range(lo..hi);
        let h = span * rng.random_range(-30.0f64..0.0).exp2();
        let s = if t + h <= hi { t + h } else { (t - h).max(lo) };
        let diff = (f.value(t) - f.value(s)).abs();
        let gap = (t - s).abs();
        if gap == 0.0 {
            continue;
        }
        report.max_ratio = report.max_ratio.max(diff / gap.powf(holder.alpha));
        if diff > holder.bound(gap) + slack {
            report.violations += 1;
        }
    }
    report
}

/// Largest |Δf| over a uniform grid of `2^depth` steps on `[lo, hi]`.
pub fn grid_modulus(f: &DriftFunction, lo: f64, hi: f64, depth: u32) -> f64 {
    let n = 1usize << depth;
    let step = (hi - lo) / n as f64;
    let mut prev = f.value(lo);
    let mut worst: f64 = 0.0;
    for i in 1..=n {
        let v = f.value(lo + i as f64 * step);
        worst = worst.max((v - prev).abs());
        prev = v;
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(x: f64) -> GammaParam {
        GammaParam::new(x).unwrap()
    }

    #[test]
    fn triangle_wave_values() {
        assert_eq!(triangle_wave(0.5), 0.5);
        assert_eq!(triangle_wave(1.0), 1.0);
        assert_eq!(triangle_wave(2.0), 0.0);
        assert_eq!(triangle_wave(3.25), 0.75);
    }

    #[test]
    fn loud_params_rules() {
        assert!(LoudParams::new(0.8, 2).is_err()); // 2·2·0.2 = 0.8 ≤ 1
        assert!(LoudParams::new(0.5, 1).is_err()); // 2·1·0.5 = 1
        let p = LoudParams::new(0.5, 2).unwrap();
        assert!(p.tail_bound() < LOUD_TAIL_TOLERANCE);
        let shorter = LoudParams::with_terms(0.5, 2, p.term_count() - 1).unwrap();
        assert!(shorter.tail_bound() >= LOUD_TAIL_TOLERANCE);
    }

    #[test]
    fn cascade_scaling_example() {
        let f = DriftFunction::cascade(g(0.2));
        let t = (1.0 + 3.0 * 0.5) / 16.0;
        assert!((f.eval(t).unwrap() - 0.375).abs() < 1e-15);
        assert_eq!(f.value(0.0), 0.0);
        assert_eq!(f.value(1.0), 1.0);
        assert_eq!(f.value(7.0), 1.0);
        // Continuity at the joints 4^{-n}.
        for n in 1..10 {
            let s = 0.25f64.powi(n);
            let left = f.value(s * (1.0 - 1e-12));
            let right = f.value(s * (1.0 + 1e-12));
            assert!((left - right).abs() < 1e-3, "n={n}");
        }
    }

    #[test]
    fn cascade_identity_random() {
        let gamma = g(0.15);
        let f = DriftFunction::cascade(gamma);
        let unit = CantorSet::with_base(gamma, 0.0, 1.0).unwrap();
        let mut rng = SeedSpec::new(3, 0).rng();
        for _ in 0..10_000 {
            let n: i32 = rng.random_range(1..20);
            let t: f64 = rng.random_range(0.0..1.0);
            let lhs = f.value(0.25f64.powi(n) * (1.0 + 3.0 * t));
            let rhs = 0.5f64.powi(n) * (1.0 + unit.eval(t));
            assert!((lhs - rhs).abs() < 1e-12, "n={n} t={t}");
        }
    }

    #[test]
    fn singleton_pieces() {
        let p = SingletonDriftParams::new(1.0, 0.01, 1.0, 2.0, g(0.15), 0.5).unwrap();
        let f = DriftFunction::singleton(p);
        assert!((f.value(0.001) + 0.1).abs() < 1e-12);
        assert!((f.value(2.0 + 0.7) - 1.7).abs() < 1e-12);
        // Joins.
        for knot in [0.01, 1.0, 2.0] {
            assert!((f.value(knot - 1e-12) - f.value(knot + 1e-12)).abs() < 1e-3);
        }
        assert!(SingletonDriftParams::new(1.0, 1.0, 0.5, 2.0, g(0.15), 0.5).is_err());
    }

    #[test]
    fn eval_rejects_negative_time() {
        assert!(DriftFunction::zero().eval(-1.0).is_err());
        assert!(eval_drift(&DriftFunction::linear(1.0, 0.0), 2.0).unwrap() == 2.0);
    }

    #[test]
    fn increment_classes() {
        let scales: Vec<f64> = (1..=40).map(|k| (-(k as f64)).exp2()).collect();
        let sqrt = DriftFunction::power(2.0, 0.5).unwrap();
        assert_eq!(
            increment_exponent(&sqrt, 0.0, &scales).unwrap().class,
            IncrementClass::Bounded
        );
        let cube = DriftFunction::cube_root(1.0);
        assert_eq!(
            increment_exponent(&cube, 0.0, &scales).unwrap().class,
            IncrementClass::DivergesPlus
        );
        let neg = DriftFunction::cube_root(-1.0);
        assert_eq!(
            increment_exponent(&neg, 0.0, &scales).unwrap().class,
            IncrementClass::DivergesMinus
        );

        let gamma = g(0.15);
        let cantor = DriftFunction::cantor(CantorSet::new(gamma));
        let gscales: Vec<f64> = (1..)
            .map(|k| gamma.get().powi(k))
            .take_while(|&h| h >= (-40.0f64).exp2())
            .collect();
        let diag = increment_exponent(&cantor, 1.0, &gscales).unwrap();
        assert_eq!(diag.class, IncrementClass::DivergesPlus, "{:?}", diag.ratios);

        assert!(increment_exponent(&sqrt, 0.0, &[0.1, 0.2]).is_err());
    }

    #[test]
    fn declared_holder_audits() {
        let cases = vec![
            DriftFunction::cantor(CantorSet::new(g(0.15))),
            DriftFunction::cantor(CantorSet::new(g(0.4))),
            DriftFunction::cascade(g(0.15)),
            DriftFunction::loud(LoudParams::new(0.5, 2).unwrap()),
            DriftFunction::cube_root(1.5),
            DriftFunction::linear(-2.0, 1.0),
        ];
        for f in cases {
            let holder = f.declared_holder().unwrap();
            let audit = holder_audit(&f, holder, 0.0, 3.0, 10_000, 1e-9, SeedSpec::new(8, 0));
            assert_eq!(audit.violations, 0, "{f}: {audit:?}");
        }
    }

    #[test]
    fn cantor_half_holder_dichotomy() {
        let half = |c: f64| Holder {
            alpha: 0.5,
            constant: c,
        };
        // γ ≥ 1/4: 1/2-Hölder holds with the declared constant.
        for gamma in [0.25, 0.4] {
            let f = DriftFunction::cantor(CantorSet::new(g(gamma)));
            let c = f.declared_holder().unwrap().constant.max(1.0);
            let audit = holder_audit(&f, half(c), 0.0, 3.0, 10_000, 1e-9, SeedSpec::new(9, 0));
            assert_eq!(audit.violations, 0, "gamma={gamma}");
        }
        // γ < 1/4: the ratio blows up at Cantor endpoints.
        let gamma = g(0.15);
        let f = DriftFunction::cantor(CantorSet::new(gamma));
        let ratios: Vec<f64> = (1..15)
            .map(|n| {
                let h = gamma.get().powi(n);
                (f.value(1.0 + h) - f.value(1.0)) / h.sqrt()
            })
            .collect();
        assert!(ratios.windows(2).all(|w| w[1] > w[0]));
        assert!(ratios[ratios.len() - 1] > 10.0 * ratios[0]);
    }

    #[test]
    fn parse_catalog() {
        let seed = SeedSpec::new(1, 0);
        for text in [
            "zero",
            "constant:value=0.3",
            "linear:slope=2,intercept=1",
            "cube_root:c=1",
            "power:c=1,p=0.5",
            "cantor:gamma=0.15",
            "cascade:gamma=0.2",
            "loud:alpha=0.5,A=2",
            "singleton:gamma=0.15,epsilon=0.5",
            "fbm:H=0.3,points=129,horizon=2",
        ] {
            let f = DriftFunction::parse(text, seed).unwrap();
            assert!(f.eval(1.3).unwrap().is_finite(), "{text}");
            if !text.starts_with("fbm") {
                let again = DriftFunction::parse(f.spec(), seed).unwrap();
                assert_eq!(again.value(1.37), f.value(1.37), "{text}");
            }
        }
        assert!(DriftFunction::parse("nope", seed).is_err());
        assert!(DriftFunction::parse("cantor", seed).is_err());
        assert!(DriftFunction::parse("cantor:gamma=x", seed).is_err());
    }

    #[test]
    fn loud_descent_step_comparison() {
        let params = LoudParams::new(0.5, 2).unwrap();
        let mut rng = SeedSpec::new(21, 0).rng();
        let (mut doubled_fail, mut prescribed_fail, mut total) = (0, 0, 0);
        for _ in 0..500 {
            let m = rng.random_range(1..=5);
            let t = sample_odd_parity_point(&params, m, 1.0, 2.0, &mut rng);
            total += 1;
            if !loud_descent_check(&params, t, m, DescentStep::Doubled).unwrap().pass {
                doubled_fail += 1;
            }
            if !loud_descent_check(&params, t, m, DescentStep::Published).unwrap().pass {
                prescribed_fail += 1;
            }
        }
        assert_eq!(doubled_fail, 0);
        // The prescribed step fails on a substantial fraction (about a third).
        assert!(prescribed_fail > total / 10, "{prescribed_fail}/{total}");
    }

    #[test]
    fn loud_descent_parity_guard() {
        let params = LoudParams::new(0.5, 2).unwrap();
        // ⌊16 · 1.0⌋ = 16 is even.
        let err = loud_descent_check(&params, 1.0, 1, DescentStep::Published).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn continuity_audit() {
        let seed = SeedSpec::new(4, 0);
        let fbm = DriftFunction::parse("fbm:H=0.3,points=1025,horizon=2", seed).unwrap();
        let cases = vec![
            DriftFunction::cantor(CantorSet::new(g(0.15))),
            DriftFunction::cascade(g(0.15)),
            DriftFunction::loud(LoudParams::new(0.5, 2).unwrap()),
            DriftFunction::singleton(SingletonDriftParams::new(1.0, 0.01, 1.0, 2.0, g(0.15), 0.5).unwrap()),
            DriftFunction::linear(1.0, 0.0),
            DriftFunction::cube_root(1.0),
            fbm,
        ];
        for f in cases {
            let jump = grid_modulus(&f, 0.0, 3.0, 20);
            let h = 3.0 / (1u64 << 20) as f64;
            let allowed = match f.declared_holder() {
                Some(holder) => holder.bound(h),
                None => match f.kind() {
                    // cube-root start dominates
                    DriftKind::SingletonPiecewise { params } => params.c * h.cbrt() + 4.0 * h.sqrt(),
                    DriftKind::FbmSample { path, .. } => {
                        let steps: Vec<f64> = path.values().windows(2).map(|w| (w[1] - w[0]).abs()).collect();
                        let cell = path.times()[1] - path.times()[0];
                        steps.iter().cloned().fold(0.0, f64::max) * h / cell
                    }
                    _ => unreachable!(),
                },
            };
            assert!(jump <= allowed + 1e-6, "{f}: {jump} > {allowed}");
        }
    }
}
