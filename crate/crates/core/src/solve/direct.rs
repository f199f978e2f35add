use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::newton::{damped_newton, NewtonSettings};
use super::record::{dedup_records, Source, TranslatedPointRecord};
use crate::dynamics::HomogeneousMap;
use crate::geometry::{diagonal_rotation_matrix, ComplexVector};
use crate::sampling::sphere_sample;

/// Grids and tolerances of the direct multistart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanSettings {
    pub sphere_points: usize,
    pub tau_samples: usize,
    /// Largest accepted `‖Φ(p) − e^{2iπτ}p‖`.
    pub residual_tol: f64,
    /// Deduplication tolerance, in `ℝ/ℤ` and in orbit distance.
    pub cluster_tol: f64,
    pub newton: NewtonSettings,
    pub seed: u64,
}

impl ScanSettings {
    /// `32n²` sphere points × 64 shifts.
    pub fn for_dimension(n: usize) -> Self {
        ScanSettings {
            sphere_points: 32 * n * n,
            tau_samples: 64,
            residual_tol: 1e-8,
            cluster_tol: 1e-5,
            newton: NewtonSettings::default(),
            seed: 0,
        }
    }
}

/// Bookkeeping of one multistart run.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanDiagnostics {
    pub starts: usize,
    pub converged: usize,
    /// Newton did not converge (budget, stalled line search, or a failed map evaluation).
    pub non_converged: usize,
    /// Converged, but the recomputed residual exceeded the tolerance.
    pub rejected: usize,
    pub duplicates: usize,
    pub max_residual: f64,
    /// System norm per iteration of the first converged start.
    pub residual_decay: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct ScanOutcome {
    pub records: Vec<TranslatedPointRecord>,
    pub diagnostics: ScanDiagnostics,
}

enum StartResult {
    Hit(TranslatedPointRecord, Vec<f64>),
    Rejected,
    Failed,
}

/// Multistart damped Newton on `{Φ(p) − e^{2iπτ}p = 0, ‖p‖² = 1}`.
pub fn direct_scan(map: &HomogeneousMap, settings: &ScanSettings) -> ScanOutcome {
    let n = map.n();
    let points = sphere_sample(n, settings.sphere_points.max(1), settings.seed);
    let taus: Vec<f64> = (0..settings.tau_samples.max(1))
        .map(|j| j as f64 / settings.tau_samples.max(1) as f64)
        .collect();
    let starts: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|i| (0..taus.len()).map(move |j| (i, j)))
        .collect();

    let results: Vec<StartResult> = starts
        .par_iter()
        .map(|&(i, j)| solve_from(map, &points[i], taus[j], settings))
        .collect();

    let mut diagnostics = ScanDiagnostics {
        starts: results.len(),
        ..ScanDiagnostics::default()
    };
    let mut records = Vec::new();
    for r in results {
        match r {
            StartResult::Hit(rec, history) => {
                diagnostics.converged += 1;
                diagnostics.max_residual = diagnostics.max_residual.max(rec.residual);
                if diagnostics.residual_decay.is_empty() {
                    diagnostics.residual_decay = history;
                }
                records.push(rec);
            }
            StartResult::Rejected => {
                diagnostics.converged += 1;
                diagnostics.rejected += 1;
            }
            StartResult::Failed => diagnostics.non_converged += 1,
        }
    }
    let (records, duplicates) = dedup_records(map.setting(), records, settings.cluster_tol);
    diagnostics.duplicates = duplicates;
    ScanOutcome { records, diagnostics }
}

fn solve_from(map: &HomogeneousMap, p0: &ComplexVector, tau0: f64, settings: &ScanSettings) -> StartResult {
    let n = map.n();
    let dim = 2 * n;
    let mut x0 = DVector::zeros(dim + 1);
    x0.rows_mut(0, dim).copy_from(p0.as_dvector());
    x0[dim] = tau0;

    let system = |x: &DVector<f64>, jac: bool| {
        let p = ComplexVector::from_dvector(x.rows(0, dim).into_owned());
        let tau = x[dim];
        let rot = p.rotate(2.0 * PI * tau);
        let (img, d) = if jac {
            let (img, d) = map.apply_with_differential(&p)?;
            (img, Some(d))
        } else {
            (map.apply(&p)?, None)
        };
        let mut f = DVector::zeros(dim + 1);
        f.rows_mut(0, dim).copy_from((&img - &rot).as_dvector());
        f[dim] = p.norm_squared() - 1.0;
        let j = d.map(|d| {
            let mut j = DMatrix::zeros(dim + 1, dim + 1);
            let r = diagonal_rotation_matrix(&vec![2.0 * PI * tau; n]);
            j.view_mut((0, 0), (dim, dim)).copy_from(&(d - r));
            j.view_mut((0, dim), (dim, 1))
                .copy_from(&(rot.mul_i().scale(-2.0 * PI)).into_dvector());
            j.view_mut((dim, 0), (1, dim))
                .copy_from(&(p.as_dvector().transpose() * 2.0));
            j
        });
        Ok((f, j))
    };

    let out = damped_newton(x0, &settings.newton, system, |x| x);
    if !out.converged {
        return StartResult::Failed;
    }
    let Ok(p) = ComplexVector::from_dvector(out.x.rows(0, dim).into_owned()).normalized() else {
        return StartResult::Failed;
    };
    let tau = out.x[dim];
    let Ok(img) = map.apply(&p) else {
        return StartResult::Failed;
    };
    let residual = (&img - &p.rotate(2.0 * PI * tau)).norm();
    if residual > settings.residual_tol {
        return StartResult::Rejected;
    }
    StartResult::Hit(
        TranslatedPointRecord::new(map.setting(), p, tau, residual, Source::Direct),
        out.history,
    )
}
