//! One function per experiment: validate every parameter, then compute.

use serde_json::{json, Value};
use zerolab::cantor::{ExclusionParams, GammaParam, MAX_ENUMERATION_LEVEL};
use zerolab::counting::{
    analytic_moments, hit_constant, hit_prob_table, mc_counting, MAX_FIRST_MOMENT_LEVEL, MAX_MC_LEVEL,
    MAX_SECOND_MOMENT_LEVEL,
};
use zerolab::dimension::{box_count, cantor_box_count, defect_set, zero_set_dimension, FIT_TRIM, MAX_DEFECT_DEPTH};
use zerolab::drift::{DriftFunction, SingletonDriftParams};
use zerolab::percolation::{
    gw_survival, joint_hawkes_experiment, survival_probability, survives_to_depth, RetentionSchedule, MAX_HAWKES_LEVEL,
    MAX_TREE_DEPTH,
};
use zerolab::stats::{isotonic_nonincreasing, weighted_trend, Estimate};
use zerolab::zeros::{
    default_delta, detect_zeros, isolated_record_mean, isolation_experiment, singleton_experiment, ZeroStatus,
    DEFAULT_REFINE_BUDGET, MAX_ZERO_DEPTH,
};
use zerolab::SeedSpec;

use crate::config::Params;
use crate::report::{num, opt, Report};
use crate::CliError;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn guard(ok: bool, msg: impl FnOnce() -> String) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Guard(msg()))
    }
}

fn gammas(values: &[f64]) -> Result<Vec<GammaParam>, CliError> {
    values
        .iter()
        .map(|&g| GammaParam::new(g).map_err(CliError::from))
        .collect()
}

fn levels_within(levels: &[u32], lo: u32, max: u32, what: &str) -> Result<(), CliError> {
    if let Some(&n) = levels.iter().find(|&&n| n < lo) {
        return Err(invalid(format!("{what} {n} below {lo}")));
    }
    guard(levels.iter().all(|&n| n <= max), || {
        format!("{what} limited to <= {max}, got {}", levels.iter().max().unwrap())
    })
}

fn positive(x: u64, key: &str) -> Result<u64, CliError> {
    if x == 0 {
        Err(invalid(format!("{key} must be at least 1")))
    } else {
        Ok(x)
    }
}

fn domain(p: &mut Params, a: f64, b: f64) -> Result<(f64, f64), CliError> {
    let a: f64 = p.get("a", a)?;
    let b: f64 = p.get("b", b)?;
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(invalid(format!("domain [{a}, {b}] must satisfy 0 <= a < b")));
    }
    Ok((a, b))
}

fn drift(p: &mut Params, default: &str, seed: SeedSpec) -> Result<DriftFunction, CliError> {
    let spec = p.get_str("drift", default);
    // fBm drifts draw from their own stream so paths are unaffected
    Ok(DriftFunction::parse(&spec, seed.fork(0xd1f7))?)
}

fn schedule(p: &mut Params, depth: u32) -> Result<RetentionSchedule, CliError> {
    let spec = p.get_str("schedule", "near-critical");
    let parsed = if spec == "near-critical" {
        Ok(RetentionSchedule::near_critical(depth))
    } else if let Some(v) = spec.strip_prefix("p=") {
        let prob: f64 = v
            .parse()
            .map_err(|_| invalid(format!("schedule {spec:?}: bad probability")))?;
        RetentionSchedule::with_probability(prob, depth)
    } else if let Some(v) = spec.strip_prefix("beta=") {
        let beta: f64 = v
            .parse()
            .map_err(|_| invalid(format!("schedule {spec:?}: bad exponent")))?;
        RetentionSchedule::constant(beta, depth)
    } else {
        return Err(invalid(format!(
            "schedule {spec:?}: expected near-critical, p=<prob> or beta=<exponent>"
        )));
    };
    Ok(parsed?)
}

fn estimate(e: &Estimate) -> [Value; 2] {
    [num(e.value), num(e.se)]
}

fn trend_summary(report: &mut Report, key: &str, xs: &[f64], est: &[Estimate]) {
    let values: Vec<f64> = est.iter().map(|e| e.value).collect();
    let weights: Vec<f64> = est
        .iter()
        .map(|e| if e.se > 0.0 { 1.0 / (e.se * e.se) } else { 1.0 })
        .collect();
    let iso = isotonic_nonincreasing(&values, &weights);
    let trend = weighted_trend(xs, est).filter(|t| t.slope_se.is_finite() && t.slope_se > 0.0);
    report.note(
        key,
        json!({
            "slope": trend.map(|t| num(t.slope)),
            "slope_se": trend.map(|t| num(t.slope_se)),
            "z": trend.map(|t| num(t.z)),
            "isotonic_fit": iso.into_iter().map(num).collect::<Vec<_>>(),
        }),
    );
}

pub fn hitting(p: &mut Params, _seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["gamma", "n"])?;
    let gs = gammas(&p.get_list::<f64>("gamma", "0.15,0.25,0.35")?)?;
    let ns = p.get_levels("n", "1..12")?;
    levels_within(&ns, 1, MAX_FIRST_MOMENT_LEVEL.min(MAX_ENUMERATION_LEVEL), "level n")?;

    let mut r = Report::new(&["gamma", "n", "min_prob", "max_prob", "bound", "c1", "within_bound"]);
    for g in &gs {
        for &n in &ns {
            let table = hit_prob_table(*g, n)?;
            let bound = (-f64::from(n)).exp2();
            let lo = table.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = table.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let within = table.iter().all(|&x| x > 0.0 && x <= bound);
            r.push(vec![
                num(g.get()),
                json!(n),
                num(lo),
                num(hi),
                num(bound),
                num(hit_constant(*g, n)?),
                json!(within),
            ]);
        }
    }
    Ok(r)
}

pub fn moments(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["gamma", "n", "second", "paths"])?;
    let gs = gammas(&p.get_list::<f64>("gamma", "0.25")?)?;
    let ns = p.get_levels("n", "1..10")?;
    let second = p.get_bool("second", true)?;
    let paths: u64 = p.get("paths", 0)?;
    levels_within(&ns, 1, MAX_FIRST_MOMENT_LEVEL, "level n")?;
    if second {
        levels_within(&ns, 1, MAX_SECOND_MOMENT_LEVEL, "second-moment level n")?;
    }
    if paths > 0 {
        levels_within(&ns, 1, MAX_MC_LEVEL, "Monte Carlo level n")?;
    }

    let mut r = Report::new(&[
        "gamma",
        "n",
        "mean_analytic",
        "second_moment_analytic",
        "mc_mean",
        "mc_mean_se",
        "mc_second_moment",
        "mc_second_moment_se",
        "mc_prob_positive",
        "mc_prob_positive_se",
    ]);
    for g in &gs {
        for &n in &ns {
            let a = analytic_moments(*g, n, second)?;
            let mut row = vec![
                num(g.get()),
                json!(n),
                num(a.mean_analytic),
                opt(a.second_moment_analytic),
            ];
            if paths > 0 {
                let mc = mc_counting(*g, n, paths, seed.fork(u64::from(n)))?
                    .mc
                    .expect("Monte Carlo requested");
                row.extend(estimate(&mc.mean));
                row.extend(estimate(&mc.second_moment));
                row.extend(estimate(&mc.prob_positive));
            } else {
                row.extend(std::iter::repeat_n(Value::Null, 6));
            }
            r.push(row);
        }
    }
    Ok(r)
}

pub fn regime_scan(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["gamma", "n", "paths"])?;
    let gs = gammas(&p.get_list::<f64>("gamma", "0.15,0.25,0.35")?)?;
    let ns = p.get_levels("n", "6..14")?;
    let paths = positive(p.get("paths", 100_000u64)?, "paths")?;
    levels_within(&ns, 1, MAX_MC_LEVEL, "level n")?;
    let work: u128 = ns.iter().map(|&n| (1u128 << n) * u128::from(paths)).sum();
    guard(work <= zerolab::counting::MC_WORK_LIMIT, || {
        format!(
            "{work} Gaussian draws per gamma exceed the limit {}",
            zerolab::counting::MC_WORK_LIMIT
        )
    })?;

    let mut r = Report::new(&["gamma", "n", "prob_positive", "prob_positive_se", "mean", "mean_se"]);
    let xs: Vec<f64> = ns.iter().map(|&n| f64::from(n)).collect();
    for g in &gs {
        let mut probs = Vec::new();
        for &n in &ns {
            let mc = mc_counting(*g, n, paths, seed.fork(u64::from(n)))?
                .mc
                .expect("Monte Carlo requested");
            let mut row = vec![num(g.get()), json!(n)];
            row.extend(estimate(&mc.prob_positive));
            row.extend(estimate(&mc.mean));
            r.push(row);
            probs.push(mc.prob_positive);
        }
        trend_summary(&mut r, &format!("trend_gamma_{}", g.get()), &xs, &probs);
    }
    Ok(r)
}

pub fn zeros(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["drift", "a", "b", "depth", "budget", "path"])?;
    let f = drift(p, "zero", seed)?;
    let dom = domain(p, 0.0, 1.0)?;
    let depth: u32 = p.get("depth", 16)?;
    let budget: usize = p.get("budget", DEFAULT_REFINE_BUDGET)?;
    let path: u64 = p.get("path", 0)?;
    guard(depth <= MAX_ZERO_DEPTH, || {
        format!("depth {depth} exceeds {MAX_ZERO_DEPTH}")
    })?;

    let z = detect_zeros(&f, dom, depth, seed.task(path), budget)?;
    let mut r = Report::new(&["lo", "hi", "status", "x_lo", "x_hi"]);
    for c in &z.crossings {
        let status = match c.status {
            ZeroStatus::ConfirmedCrossing => "confirmed_crossing",
            ZeroStatus::PossibleZero => "possible_zero",
        };
        r.push(vec![num(c.lo), num(c.hi), json!(status), num(c.x_lo()), num(c.x_hi())]);
    }
    r.note("confirmed", z.confirmed_count());
    r.note("possible", z.possible_count());
    r.note("clusters", z.clusters().len());
    r.note("resolution", num(z.resolution));
    r.note("refinements", z.refinements);
    r.note("budget_exhausted", z.budget_exhausted);
    r.note("drift", z.drift_id.clone());
    Ok(r)
}

pub fn isolated(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&[
        "gamma",
        "drift",
        "a",
        "b",
        "depth",
        "delta",
        "paths",
        "budget",
        "gamma1",
        "n0",
        "digit_budget",
    ])?;
    let g = GammaParam::new(p.get("gamma", 0.15)?)?;
    let f = if p.contains("drift") {
        drift(p, "", seed)?
    } else {
        DriftFunction::parse(&format!("cantor:gamma={}", g.get()), seed)?
    };
    let dom = domain(p, 1.0, 2.0)?;
    let depths = p.get_levels("depth", "18")?;
    let delta: Option<f64> = p.get_opt("delta")?;
    let paths = positive(p.get("paths", 1000u64)?, "paths")?;
    let budget: usize = p.get("budget", DEFAULT_REFINE_BUDGET)?;
    let excl = match p.get_opt::<f64>("gamma1")? {
        Some(g1) => {
            let n0: u32 = p.get("n0", 4)?;
            let digits: u32 = p.get("digit_budget", 64)?;
            Some(ExclusionParams::new(g, g1, n0, digits)?)
        }
        None => None,
    };
    levels_within(&depths, 1, MAX_ZERO_DEPTH, "depth")?;
    let span = dom.1 - dom.0;
    let deltas: Vec<f64> = depths
        .iter()
        .map(|&k| delta.unwrap_or_else(|| default_delta(dom, k)))
        .collect();
    for (&k, &d) in depths.iter().zip(&deltas) {
        let resolution = span * (-f64::from(k)).exp2();
        if !(d > 2.0 * resolution) {
            return Err(invalid(format!(
                "delta {d} must exceed twice the resolution {resolution} at depth {k}"
            )));
        }
    }

    let mut r = Report::new(&[
        "depth",
        "delta",
        "paths",
        "frequency",
        "frequency_se",
        "candidates",
        "in_cantor",
        "excluded",
    ]);
    let mut freqs = Vec::new();
    for (&k, &d) in depths.iter().zip(&deltas) {
        let e = isolation_experiment(
            &f,
            dom,
            k,
            d,
            paths,
            seed.fork(u64::from(k)),
            Some(g),
            excl.as_ref(),
            budget,
        )?;
        let mut row = vec![json!(k), num(d), json!(paths)];
        row.extend(estimate(&e.frequency));
        row.extend([json!(e.candidates), json!(e.in_cantor), json!(e.excluded)]);
        r.push(row);
        freqs.push(e.frequency);
    }
    if depths.len() > 1 {
        let xs: Vec<f64> = depths.iter().map(|&k| f64::from(k)).collect();
        trend_summary(&mut r, "trend", &xs, &freqs);
    }
    Ok(r)
}

pub fn singleton(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&[
        "c",
        "delta",
        "q1",
        "q2",
        "gamma",
        "epsilon",
        "horizon",
        "paths",
        "full_paths",
        "depth",
    ])?;
    let params = SingletonDriftParams::new(
        p.get("c", 1.0)?,
        p.get("delta", 0.01)?,
        p.get("q1", 1.0)?,
        p.get("q2", 2.0)?,
        GammaParam::new(p.get("gamma", 0.15)?)?,
        p.get("epsilon", 0.5)?,
    )?;
    let horizon: f64 = p.get("horizon", 200.0)?;
    let paths = positive(p.get("paths", 100_000u64)?, "paths")?;
    let full_paths: u64 = p.get("full_paths", 0)?;
    let depth: u32 = p.get("depth", 12)?;
    if !(horizon >= 100.0 * params.epsilon) {
        return Err(invalid(format!("horizon {horizon} must be >= 100 epsilon")));
    }
    guard(depth <= MAX_ZERO_DEPTH, || {
        format!("depth {depth} exceeds {MAX_ZERO_DEPTH}")
    })?;

    let s = singleton_experiment(&params, horizon, paths, seed, full_paths, depth)?;
    let mut r = Report::new(&[
        "epsilon",
        "horizon",
        "paths",
        "prob_no_zero_linear_tail",
        "prob_no_zero_linear_tail_se",
        "target",
        "full_paths",
        "prob_single_crossing_cluster",
        "prob_single_crossing_cluster_se",
        "spurious_early_zero",
        "spurious_early_zero_se",
    ]);
    let mut row = vec![num(s.epsilon), num(s.horizon), json!(s.paths)];
    row.extend(estimate(&s.prob_no_zero_linear_tail));
    row.extend([num(s.target), json!(full_paths)]);
    for e in [s.prob_single_crossing_cluster, s.spurious_early_zero] {
        match e {
            Some(e) => row.extend(estimate(&e)),
            None => row.extend([Value::Null, Value::Null]),
        }
    }
    r.push(row);
    Ok(r)
}

pub fn record_times(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["drift", "a", "b", "depth", "delta", "paths"])?;
    let f = drift(p, "cantor:gamma=0.15", seed)?;
    let dom = domain(p, 0.0, 2.0)?;
    let depths = p.get_levels("depth", "14,16,18,20")?;
    let delta: f64 = p.get("delta", 1.0 / 256.0)?;
    let paths = positive(p.get("paths", 1000u64)?, "paths")?;
    if !(delta > 0.0) {
        return Err(invalid("delta must be positive"));
    }
    levels_within(&depths, 1, MAX_ZERO_DEPTH, "depth")?;

    let mut r = Report::new(&[
        "depth",
        "delta",
        "paths",
        "mean_isolated_records",
        "mean_isolated_records_se",
    ]);
    let mut est = Vec::new();
    for &k in &depths {
        let e = isolated_record_mean(&f, dom, k, delta, paths, seed.fork(u64::from(k)))?;
        let mut row = vec![json!(k), num(delta), json!(paths)];
        row.extend(estimate(&e));
        r.push(row);
        est.push(e);
    }
    if depths.len() > 1 {
        let xs: Vec<f64> = depths.iter().map(|&k| f64::from(k)).collect();
        trend_summary(&mut r, "trend", &xs, &est);
    }
    Ok(r)
}

pub fn dimension(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["target", "gamma", "drift", "a", "b", "depth", "k", "paths"])?;
    let target = p.get_str("target", "zeros");
    match target.as_str() {
        "cantor" => {
            let g = GammaParam::new(p.get("gamma", 0.25)?)?;
            let depth: u32 = p.get("depth", 20)?;
            levels_within(&[depth], 1, MAX_ENUMERATION_LEVEL, "depth")?;
            let t = cantor_box_count(g, depth)?;
            let mut r = Report::new(&["k", "count"]);
            for (k, n) in t.scales.iter().zip(&t.counts) {
                r.push(vec![json!(k), json!(n)]);
            }
            r.note("slope", opt(t.slope));
            r.note("slope_se", opt(t.slope_se));
            r.note("fit_range", json!([t.fit_range.0, t.fit_range.1]));
            r.note("theory", num(2f64.ln() / (1.0 / g.get()).ln()));
            Ok(r)
        }
        "zeros" => {
            let f = drift(p, "zero", seed)?;
            let dom = domain(p, 0.0, 1.0)?;
            let depth: u32 = p.get("depth", 20)?;
            let ks = p.get_range("k", &format!("0..{depth}"))?;
            let paths = positive(p.get("paths", 100u64)?, "paths")?;
            guard(depth <= MAX_ZERO_DEPTH, || {
                format!("depth {depth} exceeds {MAX_ZERO_DEPTH}")
            })?;
            if ks.end() - ks.start() + 1 < 2 * FIT_TRIM + 2 {
                return Err(invalid(format!("k range needs at least {} levels", 2 * FIT_TRIM + 2)));
            }
            let s = zero_set_dimension(&f, dom, depth, ks, paths, seed)?;
            let mut r = Report::new(&["k", "mean_count", "mean_covering_sum"]);
            for ((k, n), c) in s.scales.iter().zip(&s.mean_counts).zip(&s.mean_covering_sums) {
                r.push(vec![json!(k), num(*n), num(*c)]);
            }
            r.note("mean_slope", num(s.mean_slope.value));
            r.note("mean_slope_se", num(s.mean_slope.se));
            r.note("mean_slope_with_possible", num(s.mean_slope_with_possible.value));
            r.note("mean_slope_with_possible_se", num(s.mean_slope_with_possible.se));
            r.note("fitted_paths", s.fitted_paths);
            r.note("fit_range", json!([s.fit_range.0, s.fit_range.1]));
            Ok(r)
        }
        other => Err(invalid(format!("target {other:?}: expected zeros or cantor"))),
    }
}

pub fn percolation(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["schedule", "depth", "trees"])?;
    let depth: u32 = p.get("depth", 20)?;
    guard(depth <= MAX_TREE_DEPTH, || {
        format!("tree depth {depth} exceeds {MAX_TREE_DEPTH}")
    })?;
    let s = schedule(p, depth)?;
    let trees: u64 = p.get("trees", 100_000)?;

    use rayon::prelude::*;
    let mut r = Report::new(&["m", "beta", "survival_exact", "survival_mc", "survival_mc_se"]);
    for m in 1..=depth {
        let mut row = vec![json!(m), num(s.beta(m)), num(survival_probability(&s, m)?)];
        if trees > 0 {
            let stream = seed.fork(u64::from(m));
            let hits: Result<Vec<bool>, _> = (0..trees)
                .into_par_iter()
                .map(|t| survives_to_depth(&s, m, stream.task(t)))
                .collect();
            let hits = hits?.into_iter().filter(|&b| b).count() as u64;
            row.extend(estimate(&Estimate::proportion(hits, trees)));
        } else {
            row.extend([Value::Null, Value::Null]);
        }
        r.push(row);
    }
    let betas = s.betas();
    if betas.windows(2).all(|w| w[0] == w[1]) {
        r.note("gw_survival_limit", num(gw_survival(s.p(1))?));
    }
    r.note("clamped_levels", json!(s.clamped_levels()));
    r.note("schedule_digest", s.digest());
    Ok(r)
}

pub fn hawkes_joint(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["drift", "m", "replicates", "epsilon", "schedule"])?;
    let f = drift(p, "zero", seed)?;
    let ms = p.get_levels("m", "6..14")?;
    levels_within(&ms, 1, MAX_HAWKES_LEVEL, "level m")?;
    let s = schedule(p, *ms.iter().max().unwrap())?;
    let replicates = positive(p.get("replicates", 10_000u64)?, "replicates")?;
    let epsilon: Option<f64> = p.get_opt("epsilon")?;
    if let Some(e) = epsilon {
        if !(e > 0.0) {
            return Err(invalid("epsilon must be positive"));
        }
    }

    let mut r = Report::new(&[
        "m",
        "epsilon",
        "gamma_m",
        "mean_y",
        "mean_y_se",
        "second_moment_y",
        "second_moment_y_se",
        "prob_positive",
        "prob_positive_se",
        "mean_y_analytic",
    ]);
    let mut probs = Vec::new();
    for &m in &ms {
        let h = joint_hawkes_experiment(&f, &s, m, replicates, epsilon, seed.fork(u64::from(m)))?;
        let mut row = vec![json!(m), num(h.epsilon), num(h.gamma_m)];
        row.extend(estimate(&h.mean_y));
        row.extend(estimate(&h.second_moment_y));
        row.extend(estimate(&h.prob_positive));
        row.push(num(h.mean_y_analytic));
        r.push(row);
        probs.push(h.prob_positive);
    }
    if ms.len() > 1 {
        let xs: Vec<f64> = ms.iter().map(|&m| f64::from(m)).collect();
        trend_summary(&mut r, "trend_prob_positive", &xs, &probs);
    }
    r.note("schedule_digest", s.digest());
    Ok(r)
}

pub fn defect(p: &mut Params, seed: SeedSpec) -> Result<Report, CliError> {
    p.check_keys(&["drift", "a", "b", "alpha", "n", "grid_depth"])?;
    let f = drift(p, "cantor:gamma=0.15", seed)?;
    let dom = domain(p, 1.0, 2.0)?;
    let alpha: f64 = p.get("alpha", 0.5)?;
    let n: u32 = p.get("n", 12)?;
    let grid_depth: u32 = p.get("grid_depth", n + 6)?;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha {alpha} not in (0, 1]")));
    }
    if grid_depth < n + 4 {
        return Err(invalid(format!("grid_depth {grid_depth} must be >= n + 4 = {}", n + 4)));
    }
    guard(grid_depth <= MAX_DEFECT_DEPTH, || {
        format!("grid depth {grid_depth} exceeds {MAX_DEFECT_DEPTH}")
    })?;

    let d = defect_set(&f, dom, alpha, n, grid_depth)?;
    let mut r = Report::new(&["lo", "hi"]);
    for (lo, hi) in &d {
        r.push(vec![num(*lo), num(*hi)]);
    }
    r.note("intervals", d.len());
    r.note("measure", num(d.iter().map(|(a, b)| b - a).sum()));
    // boxes finer than 2^-n only see the 2^-n-wide halo of flagged points
    if n >= 2 * FIT_TRIM + 3 && !d.is_empty() {
        let t = box_count(&d, 2..=n)?;
        r.note("box_slope", opt(t.slope));
        r.note("box_fit_range", json!([t.fit_range.0, t.fit_range.1]));
    }
    Ok(r)
}
