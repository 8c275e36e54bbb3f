//! Zeros of X = B − f at finite resolution.
//!
//! A zero is only ever reported as an interval. A grid cell is a confirmed
//! crossing when X changes sign across it, and a possible zero when X keeps
//! its sign but comes within the modulus budget of 0. Possible cells are
//! refined by Brownian bridging, in sweeps, until they resolve or the
//! refinement budget runs out.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::brownian::{bridge_midpoint, check_grid, dyadic_grid, SampledPath, RESOLUTION_FLOOR};
use crate::cantor::{
    CantorAddress, CantorSet, ExclusionParams, ExclusionValue, GammaParam, Membership, MAX_ENUMERATION_LEVEL,
};
use crate::drift::{DriftFunction, Holder, SingletonDriftParams};
use crate::error::{Error, Result};
use crate::gaussian::{std_normal_sample, SeedSpec};
use crate::stats::{Estimate, Moments};

pub const MAX_ZERO_DEPTH: u32 = 24;
pub const DEFAULT_REFINE_BUDGET: usize = 1 << 16;
const REFINE_STREAM: u64 = 0x5eed_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZeroStatus {
    ConfirmedCrossing,
    PossibleZero,
}

/// One reported interval with the path and drift values at its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossingInterval {
    pub lo: f64,
    pub hi: f64,
    pub status: ZeroStatus,
    pub b_lo: f64,
    pub b_hi: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    /// index of the base grid cell this interval lies in
    pub cell: usize,
}

impl CrossingInterval {
    pub fn x_lo(&self) -> f64 {
        self.b_lo - self.f_lo
    }

    pub fn x_hi(&self) -> f64 {
        self.b_hi - self.f_hi
    }

    pub fn is_confirmed(&self) -> bool {
        self.status == ZeroStatus::ConfirmedCrossing
    }

    /// Root of the linear interpolant of X, as (time, weight toward `hi`).
    pub fn interpolated_root(&self) -> (f64, f64) {
        let (x0, x1) = (self.x_lo(), self.x_hi());
        let w = if x0 == x1 {
            0.5
        } else {
            (x0 / (x0 - x1)).clamp(0.0, 1.0)
        };
        (self.lo + w * (self.hi - self.lo), w)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZeroSetEstimate {
    pub domain: (f64, f64),
    /// largest base grid spacing
    pub resolution: f64,
    pub crossings: Vec<CrossingInterval>,
    pub drift_id: String,
    pub path_seed: SeedSpec,
    pub refinements: usize,
    pub budget_exhausted: bool,
    /// Base cells holding an unresolved possible zero: before refinement,
    /// then after each sweep.
    pub possible_cells_by_sweep: Vec<usize>,
    /// X at the right end of the domain
    pub x_end: f64,
}

impl ZeroSetEstimate {
    pub fn confirmed(&self) -> impl Iterator<Item = &CrossingInterval> {
        self.crossings.iter().filter(|c| c.is_confirmed())
    }

    pub fn confirmed_count(&self) -> usize {
        self.confirmed().count()
    }

    pub fn possible_count(&self) -> usize {
        self.crossings.len() - self.confirmed_count()
    }

    /// Maximal runs of intervals separated by less than one base grid
    /// spacing, as index ranges into `crossings`.
    pub fn clusters(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.crossings.len() {
            if i == self.crossings.len() || self.crossings[i].lo - self.crossings[i - 1].hi >= self.resolution {
                if i > start {
                    out.push(start..i);
                }
                start = i;
            }
        }
        out
    }
}

/// 3√(h log(1/h)); the logarithm is floored at 1 for h > 1/e.
pub fn levy_budget(h: f64) -> f64 {
    3.0 * (h * (1.0 / h).ln().max(1.0)).sqrt()
}

#[derive(Clone, Copy)]
struct Point {
    t: f64,
    b: f64,
    f: f64,
}

/// Allowed |X| at a cell endpoint for the cell to possibly hold a zero:
/// the Lévy modulus plus the drift's oscillation over the cell (exact for
/// monotone drifts, else the declared Hölder bound, else twice a
/// three-point estimate).
fn cell_budget(f: &DriftFunction, holder: Option<Holder>, p0: Point, p1: Point) -> f64 {
    let h = p1.t - p0.t;
    let drift = match holder {
        _ if f.is_monotone() => (p1.f - p0.f).abs(),
        Some(hd) => hd.bound(h),
        None => {
            let fm = f.value(0.5 * (p0.t + p1.t));
            2.0 * (p1.f - p0.f).abs().max((fm - p0.f).abs()).max((p1.f - fm).abs())
        }
    };
    levy_budget(h) + drift
}

fn classify(f: &DriftFunction, holder: Option<Holder>, p0: Point, p1: Point) -> Option<ZeroStatus> {
    let (x0, x1) = (p0.b - p0.f, p1.b - p1.f);
    if x0 * x1 <= 0.0 {
        Some(ZeroStatus::ConfirmedCrossing)
    } else if x0.abs().min(x1.abs()) <= cell_budget(f, holder, p0, p1) {
        Some(ZeroStatus::PossibleZero)
    } else {
        None
    }
}

fn interval(p0: Point, p1: Point, status: ZeroStatus, cell: usize) -> CrossingInterval {
    CrossingInterval {
        lo: p0.t,
        hi: p1.t,
        status,
        b_lo: p0.b,
        b_hi: p1.b,
        f_lo: p0.f,
        f_hi: p1.f,
        cell,
    }
}

/// Sequential cell classifier fed one grid point at a time.
struct Scanner<'a> {
    f: &'a DriftFunction,
    holder: Option<Holder>,
    prev: Option<Point>,
    index: usize,
    skip_first: bool,
    out: Vec<CrossingInterval>,
    resolution: f64,
}

impl<'a> Scanner<'a> {
    fn new(f: &'a DriftFunction) -> Self {
        Self {
            f,
            holder: f.declared_holder(),
            prev: None,
            index: 0,
            skip_first: false,
            out: Vec::new(),
            resolution: 0.0,
        }
    }

    fn push(&mut self, t: f64, b: f64) {
        let p = Point {
            t,
            b,
            f: self.f.value(t),
        };
        if let Some(q) = self.prev {
            self.resolution = self.resolution.max(t - q.t);
            let cell = self.index;
            self.index += 1;
            let skip = cell == 0 && self.skip_first;
            if !skip {
                if let Some(status) = classify(self.f, self.holder, q, p) {
                    self.out.push(interval(q, p, status, cell));
                }
            }
        } else if t == 0.0 && b == 0.0 && p.f == 0.0 {
            // X vanishes trivially at a pinned origin; that zero and its
            // cell are not reported.
            self.skip_first = true;
        }
        self.prev = Some(p);
    }

    fn last_x(&self) -> f64 {
        self.prev.map_or(f64::NAN, |p| p.b - p.f)
    }
}

struct Leaf {
    p0: Point,
    p1: Point,
    status: ZeroStatus,
}

/// Confirmed cells with no other confirmed cell closer than `radius`.
fn lonely_crossings(cells: &[CrossingInterval], radius: f64) -> Vec<(f64, f64)> {
    let confirmed: Vec<_> = cells.iter().filter(|c| c.is_confirmed()).collect();
    (0..confirmed.len())
        .filter(|&i| {
            (i == 0 || confirmed[i].lo - confirmed[i - 1].hi >= radius)
                && (i + 1 == confirmed.len() || confirmed[i + 1].lo - confirmed[i].hi >= radius)
        })
        .map(|i| (confirmed[i].lo, confirmed[i].hi))
        .collect()
}

fn near_any(sorted: &[(f64, f64)], c: &CrossingInterval, radius: f64) -> bool {
    let k = sorted.partition_point(|iv| iv.1 <= c.lo);
    (k > 0 && c.lo - sorted[k - 1].1 < radius) || (k < sorted.len() && sorted[k].0 - c.hi < radius)
}

/// Sweep-wise bridge refinement of the possible cells in `cells`. With a
/// focus radius only cells that close to a lonely confirmed crossing are
/// refined.
fn refine(
    f: &DriftFunction,
    cells: Vec<CrossingInterval>,
    span: f64,
    budget: usize,
    seed: SeedSpec,
    focus: Option<f64>,
) -> (Vec<CrossingInterval>, usize, bool, Vec<usize>) {
    let holder = f.declared_holder();
    let floor = RESOLUTION_FLOOR * span;
    let lonely = focus.map(|r| (lonely_crossings(&cells, r), r));
    let mut out = Vec::with_capacity(cells.len());
    let mut idle = 0;
    // (base cell, leaves in spatial order)
    let mut pending: Vec<(usize, Vec<Leaf>)> = Vec::new();
    for c in cells {
        let take = match &lonely {
            None => !c.is_confirmed(),
            Some((l, r)) => {
                near_any(l, &c, *r) || (c.is_confirmed() && l.binary_search_by(|iv| iv.0.total_cmp(&c.lo)).is_ok())
            }
        };
        if !take {
            idle += usize::from(!c.is_confirmed());
            out.push(c);
            continue;
        }
        let p0 = Point {
            t: c.lo,
            b: c.b_lo,
            f: c.f_lo,
        };
        let p1 = Point {
            t: c.hi,
            b: c.b_hi,
            f: c.f_hi,
        };
        pending.push((
            c.cell,
            vec![Leaf {
                p0,
                p1,
                status: c.status,
            }],
        ));
    }
    // Focused runs also bisect confirmed leaves, which keeps one confirmed
    // child and exposes further sign changes inside the cell.
    let split_confirmed = focus.is_some();
    let wants = |l: &Leaf| l.status == ZeroStatus::PossibleZero || split_confirmed;
    let possible_cells = |pending: &[(usize, Vec<Leaf>)]| {
        idle + pending
            .iter()
            .filter(|(_, l)| l.iter().any(|x| x.status == ZeroStatus::PossibleZero))
            .count()
    };
    let mut by_sweep = vec![possible_cells(&pending)];
    let mut rngs: Vec<_> = pending
        .iter()
        .map(|(cell, _)| seed.fork(REFINE_STREAM).task(*cell as u64).rng())
        .collect();
    let mut used = 0;
    let mut exhausted = false;
    loop {
        let mut progressed = false;
        'cells: for ((_, leaves), rng) in pending.iter_mut().zip(rngs.iter_mut()) {
            if !leaves.iter().any(wants) {
                continue;
            }
            let mut next = Vec::with_capacity(leaves.len() + 1);
            let mut drained = std::mem::take(leaves).into_iter();
            while let Some(leaf) = drained.next() {
                let refinable = wants(&leaf) && leaf.p1.t - leaf.p0.t >= 2.0 * floor;
                if !refinable {
                    next.push(leaf);
                    continue;
                }
                if used == budget {
                    exhausted = true;
                    next.push(leaf);
                    next.extend(drained);
                    *leaves = next;
                    break 'cells;
                }
                used += 1;
                progressed = true;
                let tm = 0.5 * (leaf.p0.t + leaf.p1.t);
                let mid = Point {
                    t: tm,
                    b: bridge_midpoint(leaf.p0.b, leaf.p1.b, leaf.p1.t - leaf.p0.t, rng),
                    f: f.value(tm),
                };
                for (a, b) in [(leaf.p0, mid), (mid, leaf.p1)] {
                    if let Some(status) = classify(f, holder, a, b) {
                        next.push(Leaf { p0: a, p1: b, status });
                    }
                }
            }
            *leaves = next;
        }
        if exhausted || !progressed {
            break;
        }
        by_sweep.push(possible_cells(&pending));
    }
    if exhausted {
        by_sweep.push(possible_cells(&pending));
    }
    for (cell, leaves) in pending {
        out.extend(leaves.into_iter().map(|l| interval(l.p0, l.p1, l.status, cell)));
    }
    out.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    (out, used, exhausted, by_sweep)
}

fn finish(
    scanner: Scanner<'_>,
    domain: (f64, f64),
    seed: SeedSpec,
    refine_budget: usize,
    focus: Option<f64>,
) -> ZeroSetEstimate {
    let x_end = scanner.last_x();
    let resolution = scanner.resolution;
    let f = scanner.f;
    let (crossings, refinements, budget_exhausted, possible_cells_by_sweep) =
        refine(f, scanner.out, domain.1 - domain.0, refine_budget, seed, focus);
    ZeroSetEstimate {
        domain,
        resolution,
        crossings,
        drift_id: f.spec().to_string(),
        path_seed: seed,
        refinements,
        budget_exhausted,
        possible_cells_by_sweep,
        x_end,
    }
}

fn check_domain(domain: (f64, f64)) -> Result<()> {
    if !(domain.0 >= 0.0 && domain.0 < domain.1 && domain.1.is_finite()) {
        return Err(Error::invalid(format!(
            "domain [{}, {}] must satisfy 0 <= a < b",
            domain.0, domain.1
        )));
    }
    Ok(())
}

/// Samples B on the dyadic grid of `domain` (path stream `seed`, refinement
/// streams forked from it) and returns the zero estimate of B − f.
pub fn detect_zeros(
    f: &DriftFunction,
    domain: (f64, f64),
    depth: u32,
    seed: SeedSpec,
    refine_budget: usize,
) -> Result<ZeroSetEstimate> {
    detect(f, domain, depth, seed, refine_budget, None)
}

/// Like [`detect_zeros`], but spends the refinement budget only on possible
/// cells within `delta` of a confirmed cell that has no other confirmed cell
/// within `delta`. Other possible cells are reported unrefined. Candidates
/// at radius `delta` depend only on the refined cells.
pub fn detect_zeros_focused(
    f: &DriftFunction,
    domain: (f64, f64),
    depth: u32,
    seed: SeedSpec,
    refine_budget: usize,
    delta: f64,
) -> Result<ZeroSetEstimate> {
    detect(f, domain, depth, seed, refine_budget, Some(delta))
}

fn detect(
    f: &DriftFunction,
    domain: (f64, f64),
    depth: u32,
    seed: SeedSpec,
    refine_budget: usize,
    focus: Option<f64>,
) -> Result<ZeroSetEstimate> {
    check_domain(domain)?;
    if depth > MAX_ZERO_DEPTH {
        return Err(Error::ResourceGuard(format!(
            "zero detection depth {depth} exceeds {MAX_ZERO_DEPTH}"
        )));
    }
    let mut rng = seed.rng();
    let n = 1usize << depth;
    let step = (domain.1 - domain.0) / n as f64;
    let mut scanner = Scanner::new(f);
    let (mut t_prev, mut b) = (0.0, 0.0);
    for i in 0..=n {
        let t = domain.0 + i as f64 * step;
        if t > t_prev {
            b += (t - t_prev).sqrt() * std_normal_sample(&mut rng);
        }
        t_prev = t;
        scanner.push(t, b);
    }
    Ok(finish(scanner, domain, seed, refine_budget, focus))
}

/// Zero estimate for an explicit path; `seed` only drives refinement.
pub fn detect_zeros_on_path(
    path: &SampledPath,
    f: &DriftFunction,
    seed: SeedSpec,
    refine_budget: usize,
) -> Result<ZeroSetEstimate> {
    detect_on_path(path, f, seed, refine_budget, None)
}

/// Focused refinement (see [`detect_zeros_focused`]) on an explicit path.
pub fn detect_zeros_on_path_focused(
    path: &SampledPath,
    f: &DriftFunction,
    seed: SeedSpec,
    refine_budget: usize,
    delta: f64,
) -> Result<ZeroSetEstimate> {
    detect_on_path(path, f, seed, refine_budget, Some(delta))
}

fn detect_on_path(
    path: &SampledPath,
    f: &DriftFunction,
    seed: SeedSpec,
    refine_budget: usize,
    focus: Option<f64>,
) -> Result<ZeroSetEstimate> {
    if path.len() < 2 {
        return Err(Error::invalid("path needs at least two samples"));
    }
    let times = path.times();
    let mut scanner = Scanner::new(f);
    for (&t, &b) in times.iter().zip(path.values()) {
        scanner.push(t, b);
    }
    let domain = (times[0], times[times.len() - 1]);
    Ok(finish(scanner, domain, seed, refine_budget, focus))
}

/// Isolation radius 2^{-⌊depth/2⌋}(b − a).
pub fn default_delta(domain: (f64, f64), depth: u32) -> f64 {
    (-f64::from(depth / 2)).exp2() * (domain.1 - domain.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsolatedCandidate {
    pub location: f64,
    pub interval: (f64, f64),
    pub gap_left: f64,
    pub gap_right: f64,
    pub in_cantor: Option<bool>,
    pub f_value: f64,
    pub f_value_excluded: Option<Membership>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationReport {
    pub delta: f64,
    pub cantor_level: Option<u32>,
    pub candidates: Vec<IsolatedCandidate>,
}

/// Level of C_γ used for the membership annotation at radius δ.
pub fn annotation_level(gamma: GammaParam, delta: f64) -> u32 {
    let level = ((1.0 / delta).ln() / (1.0 / gamma.get()).ln()).floor();
    (level.max(0.0) as u32).min(MAX_ENUMERATION_LEVEL)
}

/// Clusters of touching intervals that hold exactly one confirmed crossing,
/// span at most δ, and are at least δ away from every other reported
/// interval and from the domain ends. A cluster whose possible cells were
/// left unrefined (budget exhausted) is not a candidate.
pub fn isolated_candidates(
    z: &ZeroSetEstimate,
    delta: f64,
    gamma: Option<GammaParam>,
    excl: Option<&ExclusionParams>,
) -> Result<IsolationReport> {
    if !(delta > 2.0 * z.resolution) {
        return Err(Error::invalid(format!(
            "isolation radius {delta} must exceed twice the resolution {}",
            z.resolution
        )));
    }
    let cantor_level = gamma.map(|g| annotation_level(g, delta));
    let refinable = 2.0 * RESOLUTION_FLOOR * (z.domain.1 - z.domain.0);
    let clusters = z.clusters();
    let mut candidates = Vec::new();
    for (k, range) in clusters.iter().enumerate() {
        let members = &z.crossings[range.clone()];
        let mut confirmed = members.iter().filter(|c| c.is_confirmed());
        let (Some(hit), None) = (confirmed.next(), confirmed.next()) else {
            continue;
        };
        if members.iter().any(|c| !c.is_confirmed() && c.hi - c.lo >= refinable) {
            continue;
        }
        let lo = members[0].lo;
        let hi = members[members.len() - 1].hi;
        if hi - lo > delta {
            continue;
        }
        let left_edge = if k == 0 {
            z.domain.0
        } else {
            z.crossings[clusters[k - 1].end - 1].hi
        };
        let right_edge = clusters.get(k + 1).map_or(z.domain.1, |r| z.crossings[r.start].lo);
        let (gap_left, gap_right) = (lo - left_edge, right_edge - hi);
        if gap_left < delta || gap_right < delta {
            continue;
        }
        let (location, w) = hit.interpolated_root();
        let f_value = hit.f_lo + w * (hit.f_hi - hit.f_lo);
        let in_cantor = match (gamma, cantor_level) {
            (Some(g), Some(level)) => Some(CantorSet::new(g).meets_level(hit.lo, hit.hi, level)),
            _ => None,
        };
        let f_value_excluded = match excl {
            Some(params) => Some(in_exclusion_set_approx(f_value, (hit.f_hi - hit.f_lo).abs(), params)?),
            None => None,
        };
        candidates.push(IsolatedCandidate {
            location,
            interval: (hit.lo, hit.hi),
            gap_left,
            gap_right,
            in_cantor,
            f_value,
            f_value_excluded,
        });
    }
    Ok(IsolationReport {
        delta,
        cantor_level,
        candidates,
    })
}

fn in_exclusion_set_approx(value: f64, radius: f64, params: &ExclusionParams) -> Result<Membership> {
    crate::cantor::in_exclusion_set(ExclusionValue::Approx { value, radius }, params)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationExperiment {
    pub depth: u32,
    pub delta: f64,
    pub paths: u64,
    /// fraction of paths with at least one candidate
    pub frequency: Estimate,
    pub candidates: u64,
    /// candidates whose crossing interval meets the annotated Cantor level
    pub in_cantor: u64,
    /// candidates whose f-value is certified inside the exclusion set
    pub excluded: u64,
    pub seed: SeedSpec,
}

/// Repeats detection and isolation over `paths` independent paths; path p
/// uses `seed.task(p)`.
#[allow(clippy::too_many_arguments)]
pub fn isolation_experiment(
    f: &DriftFunction,
    domain: (f64, f64),
    depth: u32,
    delta: f64,
    paths: u64,
    seed: SeedSpec,
    gamma: Option<GammaParam>,
    excl: Option<&ExclusionParams>,
    refine_budget: usize,
) -> Result<IsolationExperiment> {
    let reports: Vec<Result<IsolationReport>> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let z = detect_zeros_focused(f, domain, depth, seed.task(p), refine_budget, delta)?;
            isolated_candidates(&z, delta, gamma, excl)
        })
        .collect();
    let (mut with, mut candidates, mut in_cantor, mut excluded) = (0, 0, 0, 0);
    for r in reports {
        let r = r?;
        if !r.candidates.is_empty() {
            with += 1;
        }
        for c in &r.candidates {
            candidates += 1;
            in_cantor += u64::from(c.in_cantor == Some(true));
            excluded += u64::from(c.f_value_excluded == Some(Membership::Member));
        }
    }
    Ok(IsolationExperiment {
        depth,
        delta,
        paths,
        frequency: Estimate::proportion(with, paths),
        candidates,
        in_cantor,
        excluded,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingletonReport {
    pub epsilon: f64,
    pub horizon: f64,
    pub paths: u64,
    /// P(B(t) < t + ε for all t ∈ (0, horizon])
    pub prob_no_zero_linear_tail: Estimate,
    pub target: f64,
    /// P(the full-drift zero estimate is one cluster with one crossing and
    /// the slope-one tail is never reached)
    pub prob_single_crossing_cluster: Option<Estimate>,
    /// fraction of paths with a reported interval inside (0, δ)
    pub spurious_early_zero: Option<Estimate>,
    pub seed: SeedSpec,
}

/// Grid steps for the linear-tail estimator.
const TAIL_STEPS: usize = 1 << 10;

/// Probability that a Brownian bridge over `dt` starting `d0 > 0` and ending
/// `d1 > 0` below a straight boundary never reaches it.
fn bridge_survival(d0: f64, d1: f64, dt: f64) -> f64 {
    if d0 <= 0.0 || d1 <= 0.0 {
        0.0
    } else {
        1.0 - (-2.0 * d0 * d1 / dt).exp()
    }
}

/// Conditional no-crossing probability of B(t) − t − ε on (0, horizon]
/// given B on a uniform grid; its mean is the unconditional probability.
fn linear_tail_survival(epsilon: f64, horizon: f64, seed: SeedSpec) -> f64 {
    let mut rng = seed.rng();
    let dt = horizon / TAIL_STEPS as f64;
    let mut d_prev = epsilon;
    let mut survive = 1.0;
    let mut b = 0.0;
    for i in 1..=TAIL_STEPS {
        b += dt.sqrt() * std_normal_sample(&mut rng);
        let d = i as f64 * dt + epsilon - b;
        survive *= bridge_survival(d_prev, d, dt);
        if survive == 0.0 {
            break;
        }
        d_prev = d;
    }
    survive
}

/// Geometric grid δ 2^{-j} near the origin, then 2^depth uniform cells on
/// each of [δ, q1] and [q1, q2].
pub fn singleton_grid(params: &SingletonDriftParams, depth: u32) -> Vec<f64> {
    let mut grid = vec![0.0];
    for j in (1..=40).rev() {
        grid.push(params.delta * (-f64::from(j)).exp2());
    }
    grid.extend(dyadic_grid(params.delta, params.q1, depth));
    grid.extend(dyadic_grid(params.q1, params.q2, depth).into_iter().skip(1));
    grid
}

/// Linear-tail estimate over `paths`; when `full_paths > 0` also runs the
/// full piecewise drift on `full_paths` paths at grid `depth`.
pub fn singleton_experiment(
    params: &SingletonDriftParams,
    horizon: f64,
    paths: u64,
    seed: SeedSpec,
    full_paths: u64,
    depth: u32,
) -> Result<SingletonReport> {
    if !(horizon >= 100.0 * params.epsilon) || !(horizon > 0.0) {
        return Err(Error::Precondition(format!(
            "horizon {horizon} must be >= 100 epsilon = {}",
            100.0 * params.epsilon
        )));
    }
    if paths == 0 {
        return Err(Error::invalid("paths must be at least 1"));
    }
    if depth > MAX_ZERO_DEPTH {
        return Err(Error::ResourceGuard(format!("depth {depth} exceeds {MAX_ZERO_DEPTH}")));
    }
    let tail_seed = seed.fork(11);
    let values: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|p| linear_tail_survival(params.epsilon, horizon, tail_seed.task(p)))
        .collect();
    let mut tail = Moments::default();
    values.iter().for_each(|&v| tail.push(v));

    let (single, spurious) = if full_paths > 0 {
        let f = DriftFunction::singleton(*params);
        let grid = singleton_grid(params, depth);
        check_grid(&grid)?;
        let full_seed = seed.fork(12);
        let outcomes: Vec<Result<(f64, bool)>> = (0..full_paths)
            .into_par_iter()
            .map(|p| {
                let s = full_seed.task(p);
                let path = crate::brownian::sample_bm(&grid, s)?;
                // A radius spanning the grid makes the lone crossing, if
                // any, the focus of refinement.
                let z = detect_zeros_on_path_focused(&path, &f, s, DEFAULT_REFINE_BUDGET, params.q2)?;
                let early = z.confirmed().any(|c| c.lo < params.delta);
                let clusters = z.clusters();
                let single = clusters.len() == 1
                    && z.crossings[clusters[0].clone()]
                        .iter()
                        .filter(|c| c.is_confirmed())
                        .count()
                        == 1;
                // Given B(q2), the slope-one tail is avoided with probability 1 − e^{−2d}.
                let weight = if single { bridge_tail(-z.x_end) } else { 0.0 };
                Ok((weight, early))
            })
            .collect();
        let (mut m, mut early) = (Moments::default(), 0);
        for o in outcomes {
            let (w, e) = o?;
            m.push(w);
            early += u64::from(e);
        }
        (
            Some(Estimate::from_moments(&m)),
            Some(Estimate::proportion(early, full_paths)),
        )
    } else {
        (None, None)
    };
    Ok(SingletonReport {
        epsilon: params.epsilon,
        horizon,
        paths,
        prob_no_zero_linear_tail: Estimate::from_moments(&tail),
        target: 1.0 - (-2.0 * params.epsilon).exp(),
        prob_single_crossing_cluster: single,
        spurious_early_zero: spurious,
        seed,
    })
}

/// P(W(s) − s < d for all s > 0) = 1 − e^{−2d}.
fn bridge_tail(d: f64) -> f64 {
    if d <= 0.0 {
        0.0
    } else {
        1.0 - (-2.0 * d).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceEstimate {
    pub width: f64,
    pub prob: Estimate,
}

/// P(Z_depth(I) for some level-`depth` Cantor interval I ⊂ f_γ^{-1}(J)):
/// the probability that B − f_γ hits C_{γ,depth} inside the preimage of J.
/// J must be a dyadic interval [k 2^{-m}, (k+1) 2^{-m}] with m ≤ depth, or
/// degenerate.
pub fn preimage_slice_prob(
    gamma: GammaParam,
    j: (f64, f64),
    paths: u64,
    seed: SeedSpec,
    depth: u32,
) -> Result<SliceEstimate> {
    if gamma.get() >= 0.25 {
        return Err(Error::Precondition("slice probabilities need gamma < 1/4".into()));
    }
    let width = j.1 - j.0;
    if width == 0.0 && (0.0..=1.0).contains(&j.0) {
        return Ok(SliceEstimate {
            width,
            prob: Estimate::new(0.0, 0.0),
        });
    }
    let m = -width.log2();
    let k = j.0 / width;
    if !(width > 0.0 && m.fract() == 0.0 && k.fract() == 0.0 && j.0 >= 0.0 && j.1 <= 1.0) {
        return Err(Error::invalid(format!(
            "J = [{}, {}] is not a dyadic subinterval of [0, 1]",
            j.0, j.1
        )));
    }
    let (m, k) = (m as u32, k as u64);
    if depth > crate::counting::MAX_MC_LEVEL || depth < m || depth == 0 {
        return Err(Error::range("depth", format!("{depth} must lie in max(1, m)..=22")));
    }
    if u128::from(paths) << (depth - m) > crate::counting::MC_WORK_LIMIT {
        return Err(Error::ResourceGuard("paths * 2^(depth - m) exceeds 2^34".into()));
    }
    // Level-depth intervals below address (k, m) are words k·2^{depth−m} + i.
    let set = CantorSet::new(gamma);
    let first = k << (depth - m);
    let count = 1u64 << (depth - m);
    let ends: Vec<f64> = (first..first + count)
        .map(|w| set.interval(CantorAddress::new(w, depth).expect("valid word")).1)
        .collect();
    let unit = (-f64::from(depth)).exp2();
    let hits: Vec<bool> = (0..paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = seed.task(p).rng();
            let (mut t_prev, mut b) = (0.0, 0.0);
            for (i, &s) in ends.iter().enumerate() {
                b += (s - t_prev).sqrt() * std_normal_sample(&mut rng);
                t_prev = s;
                let lo = (first + i as u64) as f64 * unit;
                if b >= lo && b <= lo + unit {
                    return true;
                }
            }
            false
        })
        .collect();
    let hit = hits.iter().filter(|&&h| h).count() as u64;
    Ok(SliceEstimate {
        width,
        prob: Estimate::proportion(hit, paths),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordReport {
    pub records: Vec<f64>,
    pub isolated: Vec<f64>,
}

/// Grid record times of X = B − f and those with no other record within δ.
pub fn record_times(path: &SampledPath, f: &DriftFunction, delta: f64) -> RecordReport {
    let xs: Vec<f64> = path
        .times()
        .iter()
        .zip(path.values())
        .map(|(&t, &b)| b - f.value(t))
        .collect();
    record_times_of(path.times(), &xs, delta)
}

pub fn record_times_of(times: &[f64], xs: &[f64], delta: f64) -> RecordReport {
    let mut records = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for (&t, &x) in times.iter().zip(xs) {
        if x >= best {
            best = x;
            records.push(t);
        }
    }
    let isolated = (0..records.len())
        .filter(|&i| {
            let left_ok = i == 0 || records[i] - records[i - 1] > delta;
            let right_ok = i + 1 == records.len() || records[i + 1] - records[i] > delta;
            left_ok && right_ok
        })
        .map(|i| records[i])
        .collect();
    RecordReport { records, isolated }
}

/// Mean number of δ-isolated grid records over `paths` paths on the dyadic
/// grid of `domain` at `depth`.
pub fn isolated_record_mean(
    f: &DriftFunction,
    domain: (f64, f64),
    depth: u32,
    delta: f64,
    paths: u64,
    seed: SeedSpec,
) -> Result<Estimate> {
    check_domain(domain)?;
    if depth > MAX_ZERO_DEPTH {
        return Err(Error::ResourceGuard(format!("depth {depth} exceeds {MAX_ZERO_DEPTH}")));
    }
    let grid = dyadic_grid(domain.0, domain.1, depth);
    let fvals: Vec<f64> = grid.iter().map(|&t| f.value(t)).collect();
    let counts: Vec<f64> = (0..paths)
        .into_par_iter()
        .map_init(Vec::new, |buf, p| {
            crate::brownian::fill_bm(&grid, &mut seed.task(p).rng(), buf);
            for (x, fv) in buf.iter_mut().zip(&fvals) {
                *x -= fv;
            }
            record_times_of(&grid, buf, delta).isolated.len() as f64
        })
        .collect();
    let mut m = Moments::default();
    counts.iter().for_each(|&c| m.push(c));
    Ok(Estimate::from_moments(&m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremaAudit {
    pub crossings: u64,
    pub violations: u64,
}

/// Counts confirmed crossing cells whose near-zero endpoint (|X| ≤ tol) is
/// also a grid-local extremum of X.
pub fn zeros_extrema_audit(
    f: &DriftFunction,
    domain: (f64, f64),
    depth: u32,
    paths: u64,
    seed: SeedSpec,
    tol: f64,
) -> Result<ExtremaAudit> {
    check_domain(domain)?;
    if depth > MAX_ZERO_DEPTH {
        return Err(Error::ResourceGuard(format!("depth {depth} exceeds {MAX_ZERO_DEPTH}")));
    }
    let grid = dyadic_grid(domain.0, domain.1, depth);
    let fvals: Vec<f64> = grid.iter().map(|&t| f.value(t)).collect();
    let per_path: Vec<ExtremaAudit> = (0..paths)
        .into_par_iter()
        .map_init(Vec::new, |x, p| {
            crate::brownian::fill_bm(&grid, &mut seed.task(p).rng(), x);
            for (v, fv) in x.iter_mut().zip(&fvals) {
                *v -= fv;
            }
            let mut audit = ExtremaAudit {
                crossings: 0,
                violations: 0,
            };
            let extremum = |i: usize| i > 0 && i + 1 < x.len() && (x[i - 1] - x[i]) * (x[i + 1] - x[i]) > 0.0;
            for i in 0..x.len() - 1 {
                if x[i] * x[i + 1] <= 0.0 && !(grid[i] == 0.0 && x[i] == 0.0) {
                    audit.crossings += 1;
                    if (x[i].abs() <= tol && extremum(i)) || (x[i + 1].abs() <= tol && extremum(i + 1)) {
                        audit.violations += 1;
                    }
                }
            }
            audit
        })
        .collect();
    Ok(per_path.iter().fold(
        ExtremaAudit {
            crossings: 0,
            violations: 0,
        },
        |a, b| ExtremaAudit {
            crossings: a.crossings + b.crossings,
            violations: a.violations + b.violations,
        },
    ))
}
