//! Middle-(1 − 2γ) Cantor sets, their level-n interval families and the
//! associated Cantor function.
//!
//! A level-n interval is identified by an n-letter binary word (0 = left
//! child, 1 = right child). Words are stored MSB-first in a `u64`, so the
//! numeric order of words is the spatial order of intervals and the Cantor
//! function at the left endpoint is exactly `word / 2^n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_ENUMERATION_LEVEL: u32 = 30;
pub const MAX_ADDRESS_LEVEL: u32 = 52;
pub const DEFAULT_DESCENT_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Subcritical,
    Critical,
    Supercritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParam {
    gamma: f64,
}

impl GammaParam {
    pub fn new(gamma: f64) -> Result<Self> {
        if gamma > 0.0 && gamma < 0.5 {
            Ok(Self { gamma })
        } else {
            Err(Error::range("gamma", format!("{gamma} not in (0, 1/2)")))
        }
    }

    pub fn get(self) -> f64 {
        self.gamma
    }

    pub fn regime(self) -> Regime {
        if self.gamma < 0.25 {
            Regime::Subcritical
        } else if self.gamma == 0.25 {
            Regime::Critical
        } else {
            Regime::Supercritical
        }
    }

    /// Hölder exponent (and box dimension of C_γ): log 2 / log(1/γ).
    pub fn holder_exponent(self) -> f64 {
        std::f64::consts::LN_2 / (1.0 / self.gamma).ln()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CantorAddress {
    word: u64,
    level: u32,
}

impl CantorAddress {
    pub fn new(word: u64, level: u32) -> Result<Self> {
        if level > MAX_ADDRESS_LEVEL {
            return Err(Error::range("address level", format!("{level} > {MAX_ADDRESS_LEVEL}")));
        }
        if level < 64 && word >> level != 0 {
            return Err(Error::invalid(format!("word {word:#b} longer than level {level}")));
        }
        Ok(Self { word, level })
    }

    pub fn root() -> Self {
        Self { word: 0, level: 0 }
    }

    /// Parses a word such as `"0110"`.
    pub fn parse(word: &str) -> Result<Self> {
        let mut bits = 0u64;
        for c in word.chars() {
            bits = (bits << 1)
                | match c {
                    '0' => 0,
                    '1' => 1,
                    _ => return Err(Error::invalid(format!("bad address letter {c:?}"))),
                };
        }
        Self::new(bits, word.len() as u32)
    }

    pub fn word(&self) -> u64 {
        self.word
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    /// Letter `i` (1-based, as in the address string).
    pub fn letter(&self, i: u32) -> bool {
        debug_assert!(i >= 1 && i <= self.level);
        (self.word >> (self.level - i)) & 1 == 1
    }

    pub fn zeros(&self) -> u32 {
        self.level - self.word.count_ones()
    }

    pub fn child(&self, right: bool) -> Self {
        Self {
            word: (self.word << 1) | u64::from(right),
            level: self.level + 1,
        }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            word: self.word >> 1,
            level: self.level - 1,
        })
    }

    /// Level of the deepest common ancestor of two same-level addresses.
    pub fn common_level(&self, other: &Self) -> u32 {
        debug_assert_eq!(self.level, other.level);
        let diff = self.word ^ other.word;
        if diff == 0 {
            self.level
        } else {
            self.level - (64 - diff.leading_zeros())
        }
    }
}

impl std::fmt::Display for CantorAddress {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 1..=self.level {
            f.write_str(if self.letter(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Exact dyadic rational `numerator / 2^exponent` in [0, 1].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DyadicValue {
    numerator: u64,
    exponent: u32,
}

impl DyadicValue {
    pub fn new(numerator: u64, exponent: u32) -> Result<Self> {
        if exponent > 62 || numerator > (1u64 << exponent) {
            return Err(Error::invalid(format!("{numerator}/2^{exponent} is not in [0, 1]")));
        }
        Ok(Self { numerator, exponent })
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    pub fn exponent(&self) -> u32 {
        self.exponent
    }

    /// Lowest-terms form (odd numerator or zero exponent).
    pub fn reduced(&self) -> Self {
        if self.numerator == 0 {
            return Self {
                numerator: 0,
                exponent: 0,
            };
        }
        let shift = self.numerator.trailing_zeros().min(self.exponent);
        Self {
            numerator: self.numerator >> shift,
            exponent: self.exponent - shift,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.numerator as f64 / (1u64 << self.exponent) as f64
    }
}

impl PartialEq for DyadicValue {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = (self.reduced(), other.reduced());
        a.numerator == b.numerator && a.exponent == b.exponent
    }
}

impl Eq for DyadicValue {}

/// C_γ built on a base interval, default [1, 2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CantorSet {
    pub gamma: GammaParam,
    pub base: (f64, f64),
}

impl CantorSet {
    pub fn new(gamma: GammaParam) -> Self {
        Self {
            gamma,
            base: (1.0, 2.0),
        }
    }

    pub fn with_base(gamma: GammaParam, a: f64, b: f64) -> Result<Self> {
        if !(a < b) || !a.is_finite() || !b.is_finite() {
            return Err(Error::invalid("base interval must satisfy a < b"));
        }
        Ok(Self { gamma, base: (a, b) })
    }

    pub fn base_len(&self) -> f64 {
        self.base.1 - self.base.0
    }

    /// Closed interval addressed by `addr`.
    pub fn interval(&self, addr: CantorAddress) -> (f64, f64) {
        let g = self.gamma.get();
        let len = self.base_len();
        let mut offset = 0.0;
        let mut scale = 1.0;
        for i in 1..=addr.level {
            if addr.letter(i) {
                offset += (1.0 - g) * scale;
            }
            scale *= g;
        }
        let left = self.base.0 + len * offset;
        (left, left + len * scale)
    }

    /// All level-n intervals, left to right, as (left, right) endpoints.
    pub fn intervals(&self, n: u32) -> Result<Vec<(f64, f64)>> {
        check_enumeration_level(n)?;
        Ok(self.endpoint_table(n))
    }

    pub(crate) fn endpoint_table(&self, n: u32) -> Vec<(f64, f64)> {
        let g = self.gamma.get();
        let len = self.base_len();
        let mut lefts = vec![0.0f64];
        let mut scale = 1.0;
        for _ in 0..n {
            let shift = (1.0 - g) * scale;
            lefts = lefts.iter().flat_map(|&l| [l, l + shift]).collect();
            scale *= g;
        }
        lefts
            .into_iter()
            .map(|l| (self.base.0 + len * l, self.base.0 + len * (l + scale)))
            .collect()
    }

    /// Right endpoints of all level-n intervals, left to right.
    pub fn right_endpoints(&self, n: u32) -> Vec<f64> {
        self.endpoint_table(n).into_iter().map(|(_, r)| r).collect()
    }

    /// Whether `t` lies in the level-n approximation C_{γ,n}.
    pub fn in_level(&self, t: f64, n: u32) -> bool {
        let g = self.gamma.get();
        let mut u = (t - self.base.0) / self.base_len();
        if !(0.0..=1.0).contains(&u) {
            return false;
        }
        for _ in 0..n {
            if u <= g {
                u /= g;
            } else if u >= 1.0 - g {
                u = (u - (1.0 - g)) / g;
            } else {
                return false;
            }
        }
        true
    }

    /// Whether the closed interval [s, t] meets C_{γ,n}.
    pub fn meets_level(&self, s: f64, t: f64, n: u32) -> bool {
        fn rec(g: f64, lo: f64, hi: f64, a: f64, b: f64, depth: u32) -> bool {
            if hi < a || lo > b {
                return false;
            }
            if depth == 0 {
                return true;
            }
            let w = (b - a) * g;
            rec(g, lo, hi, a, a + w, depth - 1) || rec(g, lo, hi, b - w, b, depth - 1)
        }
        rec(self.gamma.get(), s, t, self.base.0, self.base.1, n)
    }

    /// f_γ(t), extended by 0 left of the base and 1 right of it.
    pub fn eval(&self, t: f64) -> f64 {
        self.eval_with_depth(t, DEFAULT_DESCENT_DEPTH)
    }

    pub fn eval_with_depth(&self, t: f64, depth: u32) -> f64 {
        let u = (t - self.base.0) / self.base_len();
        eval_unit(self.gamma.get(), u, depth)
    }
}

/// Cantor function on [0, 1] by descent through the self-affine maps; exact
/// on gap plateaus, otherwise the level-`depth` piecewise-linear approximant.
pub(crate) fn eval_unit(g: f64, mut u: f64, depth: u32) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return 1.0;
    }
    let mut value = 0.0;
    let mut scale = 0.5;
    for _ in 0..depth {
        if u <= g {
            u /= g;
        } else if u >= 1.0 - g {
            value += scale;
            u = (u - (1.0 - g)) / g;
        } else {
            return value + scale;
        }
        scale *= 0.5;
    }
    value + 2.0 * scale * u.clamp(0.0, 1.0)
}

fn check_enumeration_level(n: u32) -> Result<()> {
    if (1..=MAX_ENUMERATION_LEVEL).contains(&n) {
        Ok(())
    } else {
        Err(Error::range("level", format!("{n} not in 1..={MAX_ENUMERATION_LEVEL}")))
    }
}

/// All 2ⁿ level-n addresses in spatial order.
pub fn enumerate_intervals(gamma: GammaParam, n: u32) -> Result<Vec<CantorAddress>> {
    let _ = gamma;
    check_enumeration_level(n)?;
    Ok((0..1u64 << n).map(|word| CantorAddress { word, level: n }).collect())
}

/// Cantor-function values at the two endpoints of the addressed interval.
pub fn cantor_value_at_endpoints(addr: CantorAddress) -> (DyadicValue, DyadicValue) {
    let left = DyadicValue {
        numerator: addr.word,
        exponent: addr.level,
    };
    let right = DyadicValue {
        numerator: addr.word + 1,
        exponent: addr.level,
    };
    (left, right)
}

pub fn eval_cantor(gamma: GammaParam, t: f64) -> f64 {
    CantorSet::new(gamma).eval(t)
}

/// Balanced (critical-regime) intervals have at least n/3 zero letters.
pub fn classify_balanced(addr: CantorAddress) -> bool {
    3 * addr.zeros() >= addr.level
}

pub const MAX_UNBALANCED_LEVEL: u32 = 60;

/// Number of level-n words with fewer than n/3 zero letters.
pub fn count_unbalanced(n: u32) -> Result<u64> {
    if !(1..=MAX_UNBALANCED_LEVEL).contains(&n) {
        return Err(Error::range("level", format!("{n} not in 1..={MAX_UNBALANCED_LEVEL}")));
    }
    let threshold = n.div_ceil(3);
    let mut binom: u128 = 1;
    let mut total: u128 = 0;
    for k in 0..threshold {
        total += binom;
        binom = binom * u128::from(n - k) / u128::from(k + 1);
    }
    u64::try_from(total).map_err(|_| Error::range("count", "overflow"))
}

/// Parameters of the dyadic exclusion set M_{n0} = ⋃_{n ≥ n0} ⋃_k J_{k,n},
/// J_{k,n} = [k 2^{-n} − γ₁^{n/2}/2, k 2^{-n} + γ₁^{n/2}/2].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExclusionParams {
    pub gamma: GammaParam,
    pub gamma1: f64,
    pub n0: u32,
    pub digit_budget: u32,
}

impl ExclusionParams {
    pub fn new(gamma: GammaParam, gamma1: f64, n0: u32, digit_budget: u32) -> Result<Self> {
        if !(gamma.get() < gamma1 && gamma1 < 0.25) {
            return Err(Error::invalid(format!(
                "need gamma < gamma1 < 1/4, got gamma = {}, gamma1 = {gamma1}",
                gamma.get()
            )));
        }
        if n0 == 0 || digit_budget < n0 || digit_budget > 1024 {
            return Err(Error::invalid(format!(
                "need 1 <= n0 <= digit_budget <= 1024, got n0 = {n0}, budget = {digit_budget}"
            )));
        }
        Ok(Self {
            gamma,
            gamma1,
            n0,
            digit_budget,
        })
    }

    /// Half-width threshold on the *scaled* tail distance at level n:
    /// |v − k 2^{-n}| ≤ γ₁^{n/2}/2 ⇔ min(τ, 1 − τ) ≤ (2√γ₁)^n / 2 with τ the
    /// fractional part of 2^n v.
    fn scaled_threshold(&self, n: u32) -> f64 {
        (2.0 * self.gamma1.sqrt()).powi(n as i32) / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Membership {
    Member,
    NonMember,
    Undecided,
}

/// Value whose membership in M_{n0} is queried. Rationals carry their full
/// (eventually periodic) digit stream; approximate reals only their digits
/// down to the stated radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExclusionValue {
    Dyadic(DyadicValue),
    Rational { numerator: u64, denominator: u64 },
    Approx { value: f64, radius: f64 },
}

fn tail_distance(tau: f64) -> f64 {
    tau.min(1.0 - tau)
}

pub fn in_exclusion_set(value: ExclusionValue, params: &ExclusionParams) -> Result<Membership> {
    let levels = params.n0..=params.digit_budget;
    match value {
        ExclusionValue::Dyadic(d) => {
            let d = d.reduced();
            let hit = params.n0.max(d.exponent);
            if hit <= params.digit_budget {
                return Ok(Membership::Member);
            }
            // Levels below the dyadic exponent: exact tails from the numerator.
            for n in levels {
                let shift = d.exponent - n;
                let rem = d.numerator & ((1u64 << shift) - 1);
                let tau = rem as f64 / (1u64 << shift) as f64;
                if tail_distance(tau) <= params.scaled_threshold(n) {
                    return Ok(Membership::Member);
                }
            }
            // Member at level `hit`, beyond the budget.
            Ok(Membership::Undecided)
        }
        ExclusionValue::Rational { numerator, denominator } => {
            if denominator == 0 || numerator > denominator {
                return Err(Error::invalid("rational must lie in [0, 1]"));
            }
            let q = u128::from(denominator);
            let mut r = u128::from(numerator) % q;
            // r_n = 2^n p mod q, so τ_n = r_n / q.
            for _ in 0..params.n0 {
                r = (2 * r) % q;
            }
            for n in levels {
                let rq = r.min(q - r);
                if rq as f64 / q as f64 <= params.scaled_threshold(n) {
                    return Ok(Membership::Member);
                }
                r = (2 * r) % q;
            }
            // Deeper tails cycle through finitely many residues; their
            // smallest distance certifies non-membership once the threshold
            // has dropped below it.
            let mut seen = std::collections::HashSet::new();
            let mut min_dist = u128::MAX;
            while seen.insert(r) {
                min_dist = min_dist.min(r.min(q - r));
                r = (2 * r) % q;
            }
            let floor = min_dist as f64 / q as f64;
            if floor > params.scaled_threshold(params.digit_budget + 1) {
                Ok(Membership::NonMember)
            } else {
                Ok(Membership::Undecided)
            }
        }
        ExclusionValue::Approx { value, radius } => {
            if !(0.0..=1.0).contains(&value) || !(radius >= 0.0) {
                return Err(Error::invalid("approximate value must lie in [0, 1]"));
            }
            for n in levels {
                let grid = (n as f64).exp2();
                let half_width = params.gamma1.powf(n as f64 / 2.0) / 2.0;
                let k = (value * grid).round();
                let dist = (value - k / grid).abs();
                if dist + radius <= half_width {
                    return Ok(Membership::Member);
                }
            }
            Ok(Membership::Undecided)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quarter() -> GammaParam {
        GammaParam::new(0.25).unwrap()
    }

    /// Left endpoints by literal recursive subdivision.
    fn subdivide(g: f64, a: f64, b: f64, n: u32, out: &mut Vec<(f64, f64)>) {
        if n == 0 {
            out.push((a, b));
            return;
        }
        let w = (b - a) * g;
        subdivide(g, a, a + w, n - 1, out);
        subdivide(g, b - w, b, n - 1, out);
    }

    #[test]
    fn gamma_validation_and_regimes() {
        assert!(GammaParam::new(0.0).is_err());
        assert!(GammaParam::new(0.5).is_err());
        assert_eq!(GammaParam::new(0.1).unwrap().regime(), Regime::Subcritical);
        assert_eq!(quarter().regime(), Regime::Critical);
        assert_eq!(GammaParam::new(0.3).unwrap().regime(), Regime::Supercritical);
    }

    #[test]
    fn level_one_and_two() {
        let set = CantorSet::new(quarter());
        assert_eq!(set.intervals(1).unwrap(), vec![(1.0, 1.25), (1.75, 2.0)]);
        let addr = CantorAddress::parse("01").unwrap();
        let (l, r) = set.interval(addr);
        assert!((l - 1.1875).abs() < 1e-15 && (r - 1.25).abs() < 1e-15);
        assert!(set.intervals(0).is_err());
        assert!(set.intervals(31).is_err());
    }

    #[test]
    fn endpoints_match_subdivision() {
        for g in [0.15, 0.25, 0.4] {
            let set = CantorSet::new(GammaParam::new(g).unwrap());
            for n in 1..=10 {
                let mut oracle = Vec::new();
                subdivide(g, 1.0, 2.0, n, &mut oracle);
                let table = set.intervals(n).unwrap();
                let addrs = enumerate_intervals(set.gamma, n).unwrap();
                assert_eq!(addrs.len(), 1 << n);
                for ((addr, got), want) in addrs.iter().zip(&table).zip(&oracle) {
                    assert!((got.0 - want.0).abs() < 1e-13 && (got.1 - want.1).abs() < 1e-13);
                    let direct = set.interval(*addr);
                    assert!((direct.0 - want.0).abs() < 1e-13);
                }
                let total: f64 = table.iter().map(|(l, r)| r - l).sum();
                assert!((total - (2.0 * g).powi(n as i32)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn endpoint_values() {
        let (l, r) = cantor_value_at_endpoints(CantorAddress::parse("10").unwrap());
        assert_eq!(l, DyadicValue::new(1, 1).unwrap());
        assert_eq!(r, DyadicValue::new(3, 2).unwrap());
        let (l, r) = cantor_value_at_endpoints(CantorAddress::root());
        assert_eq!((l.to_f64(), r.to_f64()), (0.0, 1.0));
        let (l, r) = cantor_value_at_endpoints(CantorAddress::parse("00000").unwrap());
        assert_eq!((l.to_f64(), r.to_f64()), (0.0, 1.0 / 32.0));
    }

    #[test]
    fn eval_known_points() {
        for g in [0.1, 0.25, 0.45] {
            assert_eq!(eval_cantor(GammaParam::new(g).unwrap(), 1.5), 0.5);
        }
        assert_eq!(eval_cantor(quarter(), 1.0625), 0.25);
        assert_eq!(eval_cantor(quarter(), 0.5), 0.0);
        assert_eq!(eval_cantor(quarter(), 3.0), 1.0);
    }

    #[test]
    fn balanced_classification() {
        assert!(classify_balanced(CantorAddress::parse("000").unwrap()));
        assert!(!classify_balanced(CantorAddress::parse("111").unwrap()));
        assert!(classify_balanced(CantorAddress::parse("100111").unwrap()));
        assert!(!classify_balanced(CantorAddress::parse("101111").unwrap()));
        // n = 4: threshold ⌈4/3⌉ = 2
        assert!(!classify_balanced(CantorAddress::parse("1011").unwrap()));
        assert!(classify_balanced(CantorAddress::parse("1001").unwrap()));
    }

    #[test]
    fn unbalanced_counts() {
        assert_eq!(count_unbalanced(3).unwrap(), 1);
        assert_eq!(count_unbalanced(6).unwrap(), 7);
        assert_eq!(count_unbalanced(9).unwrap(), 46);
        assert!(count_unbalanced(61).is_err());
        assert!(count_unbalanced(0).is_err());
        // Brute force over words.
        for n in 1..=16u32 {
            let brute = (0..1u64 << n)
                .filter(|&w| !classify_balanced(CantorAddress::new(w, n).unwrap()))
                .count() as u64;
            assert_eq!(count_unbalanced(n).unwrap(), brute, "n={n}");
        }
        assert!(count_unbalanced(60).is_ok());
    }

    #[test]
    fn exclusion_examples() {
        let g = GammaParam::new(0.15).unwrap();
        let half = ExclusionValue::Dyadic(DyadicValue::new(1, 1).unwrap());
        let p = ExclusionParams::new(g, 0.2, 1, 10).unwrap();
        assert_eq!(in_exclusion_set(half, &p).unwrap(), Membership::Member);

        let third = ExclusionValue::Rational {
            numerator: 1,
            denominator: 3,
        };
        assert_eq!(in_exclusion_set(third, &p).unwrap(), Membership::Member);
        let p4 = ExclusionParams::new(g, 0.2, 4, 64).unwrap();
        assert_eq!(in_exclusion_set(third, &p4).unwrap(), Membership::NonMember);

        assert!(ExclusionParams::new(g, 0.1, 1, 10).is_err());
        assert!(ExclusionParams::new(g, 0.3, 1, 10).is_err());
        assert!(ExclusionParams::new(g, 0.2, 5, 4).is_err());
    }

    #[test]
    fn dyadic_membership_respects_budget() {
        let g = GammaParam::new(0.15).unwrap();
        let v = ExclusionValue::Dyadic(DyadicValue::new(5, 20).unwrap());
        let shallow = ExclusionParams::new(g, 0.2, 4, 12).unwrap();
        let deep = ExclusionParams::new(g, 0.2, 4, 20).unwrap();
        assert_eq!(in_exclusion_set(v, &deep).unwrap(), Membership::Member);
        // 5/2^20 is within 2^{-18} of 0: member at small levels already.
        assert_eq!(in_exclusion_set(v, &shallow).unwrap(), Membership::Member);
        let mid = ExclusionValue::Dyadic(DyadicValue::new((1 << 19) + 1, 20).unwrap());
        // 1/2 + 2^{-20}: within γ₁^{n/2}/2 of 1/2 at every level up to 12.
        assert_eq!(in_exclusion_set(mid, &shallow).unwrap(), Membership::Member);
    }

    #[test]
    fn approximate_values_never_certify_absence() {
        let g = GammaParam::new(0.15).unwrap();
        let p = ExclusionParams::new(g, 0.2, 4, 40).unwrap();
        let v = ExclusionValue::Approx {
            value: 1.0 / 3.0,
            radius: 1e-12,
        };
        assert_eq!(in_exclusion_set(v, &p).unwrap(), Membership::Undecided);
        let v = ExclusionValue::Approx {
            value: 0.5 + 1e-6,
            radius: 1e-12,
        };
        assert_eq!(in_exclusion_set(v, &p).unwrap(), Membership::Member);
    }

    #[test]
    fn address_helpers() {
        let a = CantorAddress::parse("0110").unwrap();
        assert_eq!(a.to_string(), "0110");
        assert_eq!(a.zeros(), 2);
        assert_eq!(a.parent().unwrap().to_string(), "011");
        assert_eq!(a.child(true).to_string(), "01101");
        let b = CantorAddress::parse("0101").unwrap();
        assert_eq!(a.common_level(&b), 2);
        assert!(CantorAddress::parse("012").is_err());
        assert!(CantorAddress::new(4, 2).is_err());
    }

    #[test]
    fn level_membership() {
        let set = CantorSet::new(GammaParam::new(0.15).unwrap());
        assert!(set.in_level(1.0, 5));
        assert!(!set.in_level(1.5, 1));
        assert!(set.meets_level(1.14, 1.16, 1));
        assert!(!set.meets_level(1.2, 1.8, 1));
    }
}
