use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::direct::ScanDiagnostics;
use super::newton::{damped_newton, NewtonSettings};
use super::record::{dedup_by, Source, TranslatedPointRecord};
use crate::error::{Error, Result};
use crate::genfun::{EvalRequest, GFProblem, GeneratingChain};
use crate::sampling::sphere_sample;

/// Grids and tolerances of the critical-chain multistart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenfunScanSettings {
    pub sphere_points: usize,
    pub t_samples: usize,
    /// Starting parameters are spread over `[window.0, window.1)`.
    pub window: (f64, f64),
    /// Largest `‖∇F_t‖ / ‖v‖` accepted when projecting a chain.
    pub critical_tol: f64,
    pub residual_tol: f64,
    pub cluster_tol: f64,
    pub newton: NewtonSettings,
    pub seed: u64,
}

impl GenfunScanSettings {
    pub fn for_dimension(n: usize) -> Self {
        GenfunScanSettings {
            sphere_points: 8 * n * n,
            t_samples: 8,
            window: (0.0, 1.0),
            critical_tol: 1e-8,
            residual_tol: 1e-8,
            cluster_tol: 1e-5,
            newton: NewtonSettings::default(),
            seed: 0,
        }
    }
}

/// A critical chain and what it projects to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenfunHit {
    pub record: TranslatedPointRecord,
    /// The parameter `t` of the critical chain (not reduced mod 1).
    pub t: f64,
    /// `F_t(v)` on the unit chain.
    pub value: f64,
    pub grad_norm: f64,
    /// `‖e^{−2iπt}Φ(v_1) − v_1‖`.
    pub closure_defect: f64,
    pub bound_constant: f64,
}

#[derive(Clone, Debug)]
pub struct GenfunScanOutcome {
    pub hits: Vec<GenfunHit>,
    pub diagnostics: ScanDiagnostics,
}

impl GenfunScanOutcome {
    pub fn records(&self) -> Vec<TranslatedPointRecord> {
        self.hits.iter().map(|h| h.record.clone()).collect()
    }
}

enum StartResult {
    Hit(GenfunHit, Vec<f64>),
    Rejected,
    Failed,
}

/// Newton on `{∇F_t(v) = 0, ‖v‖² = 1}` in the unknowns `(v, t)`, started
/// from broken trajectories of sphere samples.
pub fn genfun_scan(problem: &GFProblem, settings: &GenfunScanSettings) -> Result<GenfunScanOutcome> {
    let (lo, hi) = settings.window;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(Error::domain(format!("empty t-window [{lo}, {hi})")));
    }
    problem.check_t(lo)?;
    problem.check_t(hi)?;
    let points = sphere_sample(problem.n(), settings.sphere_points.max(1), settings.seed);
    let ts: Vec<f64> = (0..settings.t_samples.max(1))
        .map(|j| lo + (j as f64 + 0.5) * (hi - lo) / settings.t_samples.max(1) as f64)
        .collect();
    let starts: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..ts.len()).map(move |j| (i, j)))
        .collect();

    let results: Vec<StartResult> = starts
        .par_iter()
        .map(|&(i, j)| solve_from(problem, &points[i], ts[j], settings))
        .collect();

    let mut diagnostics = ScanDiagnostics {
        starts: results.len(),
        ..ScanDiagnostics::default()
    };
    let mut hits = Vec::new();
    for r in results {
        match r {
            StartResult::Hit(hit, history) => {
                diagnostics.converged += 1;
                diagnostics.max_residual = diagnostics.max_residual.max(hit.record.residual);
                if diagnostics.residual_decay.is_empty() {
                    diagnostics.residual_decay = history;
                }
                hits.push(hit);
            }
            StartResult::Rejected => {
                diagnostics.converged += 1;
                diagnostics.rejected += 1;
            }
            StartResult::Failed => diagnostics.non_converged += 1,
        }
    }
    let (hits, duplicates) = dedup_by(problem.setting(), hits, settings.cluster_tol, |h| &h.record);
    diagnostics.duplicates = duplicates;
    Ok(GenfunScanOutcome { hits, diagnostics })
}

fn solve_from(
    problem: &GFProblem,
    z: &crate::geometry::ComplexVector,
    t0: f64,
    settings: &GenfunScanSettings,
) -> StartResult {
    let Ok((chain, _)) = problem.chain_from_fixed_point(t0, z) else {
        return StartResult::Failed;
    };
    let Ok(chain) = chain.normalized() else {
        return StartResult::Failed;
    };
    let dim = problem.dim();
    let n = problem.n();
    let mut x0 = DVector::zeros(dim + 1);
    x0.rows_mut(0, dim).copy_from(&chain.flatten());
    x0[dim] = t0;

    let system = |x: &DVector<f64>, jac: bool| {
        let v = x.rows(0, dim).into_owned();
        let t = x[dim];
        let chain = GeneratingChain::from_flat(n, &v)?;
        let req = EvalRequest {
            hessian: jac,
            dgrad_dt: jac,
        };
        let e = problem.evaluate(t, &chain, req)?;
        let mut f = DVector::zeros(dim + 1);
        f.rows_mut(0, dim).copy_from(&e.gradient);
        f[dim] = v.norm_squared() - 1.0;
        let j = e.hessian.map(|h| {
            let mut j = DMatrix::zeros(dim + 1, dim + 1);
            j.view_mut((0, 0), (dim, dim)).copy_from(&h);
            j.view_mut((0, dim), (dim, 1))
                .copy_from(e.dgrad_dt.as_ref().expect("requested"));
            j.view_mut((dim, 0), (1, dim)).copy_from(&(v.transpose() * 2.0));
            j
        });
        Ok((f, j))
    };
    let renormalize = |mut x: DVector<f64>| {
        let norm = x.rows(0, dim).norm();
        if norm > 0.0 {
            let mut head = x.rows_mut(0, dim);
            head /= norm;
        }
        x
    };

    let out = damped_newton(x0, &settings.newton, system, renormalize);
    if !out.converged {
        return StartResult::Failed;
    }
    let t = out.x[dim];
    let Ok(chain) = GeneratingChain::from_flat(n, &out.x.rows(0, dim).into_owned()) else {
        return StartResult::Failed;
    };
    let fp = match problem.fixed_point_from_chain(t, &chain, settings.critical_tol) {
        Ok(fp) => fp,
        Err(_) => return StartResult::Rejected,
    };
    let Ok(p) = fp.point.normalized() else {
        return StartResult::Failed;
    };
    let Ok(img) = problem.factors().apply(&p) else {
        return StartResult::Failed;
    };
    let residual = (&img - &p.rotate(2.0 * PI * t)).norm();
    if residual > settings.residual_tol {
        return StartResult::Rejected;
    }
    let Ok(value) = problem.value(t, &chain) else {
        return StartResult::Failed;
    };
    StartResult::Hit(
        GenfunHit {
            record: TranslatedPointRecord::new(problem.setting(), p, t, residual, Source::Genfun),
            t,
            value,
            grad_norm: fp.grad_norm,
            closure_defect: fp.closure_defect,
            bound_constant: fp.bound_constant,
        },
        out.history,
    )
}
