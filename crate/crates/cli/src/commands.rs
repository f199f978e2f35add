//! One function per subcommand. Each returns the report and the exit code it
//! warrants; writing the report is left to the caller.

use lenstrans::cohomology::{cat_lens, index_jump, ls_bound, shift_bound, IndexWindow};
use lenstrans::dynamics::HomogeneousMap;
use lenstrans::genfun::{GFProblem, GeneratingChain};
use lenstrans::sampling::sphere_sample;
use lenstrans::solve::{
    count_time_shifts, crosscheck, direct_scan, genfun_scan, verdict, ScanOutcome, Status, TranslatedPointRecord,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{LoadedConfig, RunConfig};
use crate::error::{CliError, EXIT_CONTRACT, EXIT_OK};
use crate::report::{ClusterSummary, Provenance, Report};

/// Largest `n` the sharpness demo accepts.
pub const SHARPNESS_MAX_N: usize = 3;

/// Where `F_t` is probed by `validate`.
const VALIDATION_T: f64 = 0.25;
const FD_DIRECTIONS: usize = 4;
const FD_STEP: f64 = 1e-6;

pub struct Outcome {
    pub report: Report,
    pub exit_code: i32,
}

#[derive(Clone, Debug, Serialize)]
struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
    passed: bool,
}

impl Check {
    fn new(name: &'static str, value: f64, tolerance: f64) -> Self {
        Check {
            name,
            value,
            tolerance,
            // NaN fails.
            passed: value <= tolerance,
        }
    }
}

fn echo(config: &RunConfig) -> Value {
    serde_json::to_value(config).expect("config serializes")
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report parts serialize")
}

/// Runs the map, factorization and generating-function invariant suites.
pub fn validate(loaded: &LoadedConfig) -> Result<Outcome, CliError> {
    let cfg = &loaded.config;
    let v = &cfg.validation;
    let map = cfg.lift()?;
    let sample = sphere_sample(map.n(), v.sample_size.max(1), cfg.solver.seed);
    let inv = map.invariants(&sample)?;

    let factors = cfg.factors(&map)?;
    let mut composition: f64 = 0.0;
    for p in &sample {
        composition = composition.max((&factors.apply(p)? - &map.apply(p)?).norm());
    }
    let achieved = factors.achieved();
    let m = factors.len();
    let problem = GFProblem::new(factors)?;
    let symmetry = problem.symmetry_residuals(&sample)?;
    let flagged = flagged_factors(&symmetry, v.symmetry_tol);
    let (gradient, euler) = gradient_checks(&problem, cfg.solver.seed)?;

    let mut checks = vec![
        Check::new("homogeneity", inv.homogeneity, v.homogeneity_tol),
        Check::new("equivariance", inv.equivariance, v.equivariance_tol),
        Check::new("symplecticity", inv.symplecticity, v.symplecticity_tol),
        Check::new("factor_composition", composition, v.composition_tol),
    ];
    if !achieved.is_nan() {
        checks.push(Check::new("factor_deviation", achieved, cfg.decomposition.theta));
    }
    checks.push(Check::new(
        "dg_symmetry",
        symmetry.iter().copied().fold(0.0, f64::max),
        v.symmetry_tol,
    ));
    checks.push(Check::new("gradient_fd", gradient, v.gradient_tol));
    checks.push(Check::new("euler_identity", euler, v.euler_tol));

    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    let ok = failed.is_empty();
    let report = Report {
        setting: echo(cfg),
        records: Vec::new(),
        shift_clusters: Vec::new(),
        verdict: json!({ "passed": ok, "failed": failed }),
        diagnostics: json!({
            "checks": checks,
            "factors": m,
            "dg_symmetry": symmetry,
            "flagged_factors": flagged,
        }),
        provenance: Provenance::new("validate", Some(&loaded.raw), cfg.solver.seed),
        residual_decay: Vec::new(),
    };
    Ok(Outcome {
        report,
        exit_code: if ok { EXIT_OK } else { EXIT_CONTRACT },
    })
}

/// Factors whose `dG` asymmetry exceeds the tolerance (0-based).
fn flagged_factors(symmetry: &[f64], tol: f64) -> Vec<usize> {
    symmetry
        .iter()
        .enumerate()
        .filter(|(_, &s)| s.is_nan() || s > tol)
        .map(|(i, _)| i)
        .collect()
}

/// Worst relative directional-derivative error and Euler-identity error on a
/// sampled chain.
fn gradient_checks(problem: &GFProblem, seed: u64) -> Result<(f64, f64), CliError> {
    let n = problem.n();
    let chain = GeneratingChain::new(sphere_sample(n, problem.chain_len(), seed.wrapping_add(1)))?;
    let eval = problem.evaluate(VALIDATION_T, &chain, Default::default())?;
    let v = chain.flatten();
    let scale = eval.gradient.norm().max(f64::MIN_POSITIVE);

    let euler = (eval.gradient.dot(&v) - 2.0 * eval.value).abs() / eval.value.abs().max(1.0);

    let dirs = sphere_sample(n * problem.chain_len(), FD_DIRECTIONS, seed.wrapping_add(2));
    let mut worst: f64 = 0.0;
    for d in dirs {
        let d = d.into_dvector();
        let h = FD_STEP * v.norm();
        let plus = GeneratingChain::from_flat(n, &(&v + &d * h))?;
        let minus = GeneratingChain::from_flat(n, &(&v - &d * h))?;
        let fd = (problem.value(VALIDATION_T, &plus)? - problem.value(VALIDATION_T, &minus)?) / (2.0 * h);
        worst = worst.max((fd - eval.gradient.dot(&d)).abs() / scale);
    }
    Ok((worst, euler))
}

struct Scanned {
    map: HomogeneousMap,
    outcome: ScanOutcome,
}

fn run_direct(cfg: &RunConfig) -> Result<Scanned, CliError> {
    let map = cfg.lift()?;
    let outcome = direct_scan(&map, &cfg.scan_settings());
    Ok(Scanned { map, outcome })
}

/// Diagnostics shared by scan-like commands.
fn scan_diagnostics(cfg: &RunConfig, scanned: &Scanned) -> Result<serde_json::Map<String, Value>, CliError> {
    let sample = sphere_sample(scanned.map.n(), cfg.validation.sample_size.max(1), cfg.solver.seed);
    let inv = scanned.map.invariants(&sample)?;
    let mut d = serde_json::Map::new();
    d.insert("direct".into(), to_value(&scanned.outcome.diagnostics));
    d.insert("map_invariants".into(), to_value(&inv));
    Ok(d)
}

fn scan_report(
    cfg: &RunConfig,
    command: &str,
    raw: Option<&[u8]>,
) -> Result<(Report, lenstrans::solve::Verdict), CliError> {
    let scanned = run_direct(cfg)?;
    let records = scanned.outcome.records.clone();
    let spectrum = count_time_shifts(&records, cfg.solver.cluster_tol);
    let v = verdict(&spectrum, &records, scanned.map.setting());
    let mut diagnostics = scan_diagnostics(cfg, &scanned)?;
    if let Some(w) = &spectrum.warning {
        diagnostics.insert("spectrum_warning".into(), json!(w));
    }
    let report = Report {
        setting: echo(cfg),
        shift_clusters: ClusterSummary::from_spectrum(&spectrum),
        records,
        verdict: to_value(&v),
        diagnostics: Value::Object(diagnostics),
        provenance: Provenance::new(command, raw, cfg.solver.seed),
        residual_decay: scanned.outcome.diagnostics.residual_decay.clone(),
    };
    Ok((report, v))
}

/// Direct multistart, shift clustering and the `2n` verdict. An ATTENTION
/// verdict is a result, not an error.
pub fn scan(loaded: &LoadedConfig) -> Result<Outcome, CliError> {
    let (report, _) = scan_report(&loaded.config, "scan", Some(&loaded.raw))?;
    Ok(Outcome {
        report,
        exit_code: EXIT_OK,
    })
}

#[derive(Serialize)]
struct GenfunHitSummary {
    record: usize,
    t: f64,
    value: f64,
    grad_norm: f64,
    closure_defect: f64,
    bound_constant: f64,
}

/// Both solvers, compared. A factor failing the `dG` symmetry check stops the
/// run before any solving, since its generating function is meaningless.
pub fn crosscheck_cmd(loaded: &LoadedConfig) -> Result<Outcome, CliError> {
    let cfg = &loaded.config;
    let provenance = Provenance::new("crosscheck", Some(&loaded.raw), cfg.solver.seed);
    let map = cfg.lift()?;
    let factors = cfg.factors(&map)?;
    let sample = sphere_sample(map.n(), cfg.validation.sample_size.max(1), cfg.solver.seed);
    let problem = GFProblem::new(factors)?;
    let symmetry = problem.symmetry_residuals(&sample)?;
    let flagged = flagged_factors(&symmetry, cfg.validation.symmetry_tol);
    if !flagged.is_empty() {
        let report = Report {
            setting: echo(cfg),
            records: Vec::new(),
            shift_clusters: Vec::new(),
            verdict: json!({ "agrees": false, "message": "factor generating functions failed the dG symmetry check" }),
            diagnostics: json!({
                "dg_symmetry": symmetry,
                "flagged_factors": flagged,
                "symmetry_tol": cfg.validation.symmetry_tol,
            }),
            provenance,
            residual_decay: Vec::new(),
        };
        return Ok(Outcome {
            report,
            exit_code: EXIT_CONTRACT,
        });
    }

    let direct = direct_scan(&map, &cfg.scan_settings());
    let genfun = genfun_scan(&problem, &cfg.genfun_settings())?;
    let genfun_records = genfun.records();
    let cc = crosscheck(
        map.setting(),
        &direct.records,
        &genfun_records,
        cfg.solver.crosscheck_tol,
    );

    // One record list: direct hits first, then generating-function hits.
    let offset = direct.records.len();
    let mut records: Vec<TranslatedPointRecord> = direct.records.clone();
    records.extend(genfun_records);
    let spectrum = count_time_shifts(&records, cfg.solver.cluster_tol);
    let v = verdict(&spectrum, &records, map.setting());

    let matched: Vec<Value> = cc
        .matched
        .iter()
        .map(|m| json!({ "direct": m.direct, "genfun": m.genfun + offset, "discrepancy": m.discrepancy }))
        .collect();
    let unmatched_genfun: Vec<usize> = cc.unmatched_genfun.iter().map(|j| j + offset).collect();
    let hits: Vec<GenfunHitSummary> = genfun
        .hits
        .iter()
        .enumerate()
        .map(|(j, h)| GenfunHitSummary {
            record: j + offset,
            t: h.t,
            value: h.value,
            grad_norm: h.grad_norm,
            closure_defect: h.closure_defect,
            bound_constant: h.bound_constant,
        })
        .collect();
    let max_abs_value = genfun.hits.iter().map(|h| h.value.abs()).fold(0.0, f64::max);
    let max_defect = genfun.hits.iter().map(|h| h.closure_defect).fold(0.0, f64::max);

    let report = Report {
        setting: echo(cfg),
        shift_clusters: ClusterSummary::from_spectrum(&spectrum),
        records,
        verdict: json!({
            "agrees": cc.agrees(),
            "shifts": to_value(&v),
        }),
        diagnostics: json!({
            "direct": direct.diagnostics,
            "genfun": genfun.diagnostics,
            "factors": problem.m(),
            "dg_symmetry": symmetry,
            "flagged_factors": flagged,
            "crosscheck": {
                "tolerance": cc.tolerance,
                "matched": matched,
                "unmatched_direct": cc.unmatched_direct,
                "unmatched_genfun": unmatched_genfun,
                "max_discrepancy": cc.max_discrepancy,
            },
            "genfun_hits": hits,
            "max_abs_value": max_abs_value,
            "max_closure_defect": max_defect,
        }),
        provenance,
        residual_decay: direct.diagnostics.residual_decay.clone(),
    };
    Ok(Outcome {
        report,
        exit_code: if cc.agrees() { EXIT_OK } else { EXIT_CONTRACT },
    })
}

/// Default window when neither the flags nor the config give one.
pub const DEFAULT_JUMP_WINDOW: (f64, f64) = (0.0, 2.0);

/// `i(Q_{t1}) − i(Q_{t0})`; for integer endpoints it must equal `2n(t1 − t0)`.
pub fn index_jump_cmd(loaded: &LoadedConfig, t0: f64, t1: f64) -> Result<Outcome, CliError> {
    let cfg = &loaded.config;
    let map = cfg.lift()?;
    let problem = cfg.problem(&map)?;
    let jump = index_jump(&problem, t0, t1)?;
    let n = problem.n() as f64;
    let expected = (t0.fract() == 0.0 && t1.fract() == 0.0).then_some((2.0 * n * (t1 - t0)) as i64);
    let matches = expected.map(|e| e == jump.jump);
    let report = Report {
        setting: echo(cfg),
        records: Vec::new(),
        shift_clusters: Vec::new(),
        verdict: json!({ "jump": jump.jump, "expected": expected, "matches_expected": matches }),
        diagnostics: json!({
            "t0": t0,
            "t1": t1,
            "index_t0": jump.index_t0,
            "index_t1": jump.index_t1,
            "factors": problem.m(),
            "form_dimension": problem.dim(),
        }),
        provenance: Provenance::new("index-jump", Some(&loaded.raw), cfg.solver.seed),
        residual_decay: Vec::new(),
    };
    Ok(Outcome {
        report,
        exit_code: if matches == Some(false) { EXIT_CONTRACT } else { EXIT_OK },
    })
}

/// Category, index-window bounds for both parities, and the shift bound.
pub fn bounds(p: u32, n: usize, seed: u64) -> Result<Outcome, CliError> {
    if n == 0 {
        return Err(CliError::Config("n must be at least 1".into()));
    }
    let cat = cat_lens(p, n)?;
    let big_n = 2 * n + 1;
    let even = IndexWindow::new(0, 4 * n, p, big_n)?;
    let odd = IndexWindow::new(1, 4 * n + 1, p, big_n)?;
    let (ls_even, ls_odd) = (ls_bound(&even), ls_bound(&odd));
    let shifts = shift_bound(n)?;
    let report = Report {
        setting: json!({ "p": p, "n": n }),
        records: Vec::new(),
        shift_clusters: Vec::new(),
        verdict: json!({ "shift_bound": shifts }),
        diagnostics: json!({
            "cat_lens": cat,
            "ls_bound_even": ls_even,
            "ls_bound_odd": ls_odd,
            "windows": [even, odd],
        }),
        provenance: Provenance::new("bounds", None, seed),
        residual_decay: Vec::new(),
    };
    Ok(Outcome {
        report,
        exit_code: EXIT_OK,
    })
}

/// Scans the Morse–Bott example on `L_p^{2n−1}`. Perturbed, it must show
/// exactly `2n` shifts; unperturbed, `n` circle families.
pub fn sharpness_demo(p: u32, n: usize, unperturbed: bool, seed: u64) -> Result<Outcome, CliError> {
    if n == 0 || n > SHARPNESS_MAX_N {
        return Err(CliError::Config(format!(
            "sharpness-demo runs at 1 ≤ n ≤ {SHARPNESS_MAX_N}, got n = {n}"
        )));
    }
    if p < 2 {
        return Err(CliError::Config(format!("p = {p} must be at least 2")));
    }
    let mut cfg = RunConfig::sharpness(p, n, !unperturbed);
    cfg.solver.seed = seed;
    cfg.validate()?;
    let (mut report, v) = scan_report(&cfg, "sharpness-demo", None)?;
    let (expected_label, expected, met) = if unperturbed {
        ("circle_families", n, v.families == n && v.status == Status::Attention)
    } else {
        ("clusters", 2 * n, v.clusters == 2 * n && !v.non_isolated)
    };
    if let Value::Object(d) = &mut report.diagnostics {
        d.insert(
            "sharpness".into(),
            json!({ "perturbed": !unperturbed, "expected": { expected_label: expected }, "met": met }),
        );
    }
    Ok(Outcome {
        report,
        exit_code: if met { EXIT_OK } else { EXIT_CONTRACT },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_nan_and_large_residuals() {
        assert_eq!(flagged_factors(&[1e-9, 2e-3, f64::NAN], 1e-6), vec![1, 2]);
    }

    #[test]
    fn bounds_examples() {
        let out = bounds(3, 2, 0).unwrap();
        let d = &out.report.diagnostics;
        assert_eq!(d["cat_lens"], 4);
        assert_eq!(
            (d["ls_bound_even"].as_u64(), d["ls_bound_odd"].as_u64()),
            (Some(8), Some(7))
        );
        assert_eq!(out.report.verdict["shift_bound"], 4);

        let d = bounds(5, 3, 0).unwrap().report.diagnostics;
        assert_eq!(
            (
                d["cat_lens"].as_u64(),
                d["ls_bound_even"].as_u64(),
                d["ls_bound_odd"].as_u64()
            ),
            (Some(6), Some(12), Some(11))
        );
        assert_eq!(bounds(3, 1, 0).unwrap().report.verdict["shift_bound"], 2);
        assert!(matches!(bounds(2, 2, 0), Err(CliError::Config(_))));
    }
}
