use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::record::TranslatedPointRecord;
use super::spectrum::ShiftSpectrum;
use crate::geometry::{lens_apply, ComplexVector, LensSetting};

/// Two records of one cluster farther apart than this (modulo the lens
/// action) are taken as distinct orbits.
pub const FAMILY_SEPARATION: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Attention,
}

/// Shape of one cluster's hits on the sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterShape {
    pub center: f64,
    pub records: usize,
    /// Records pairwise more than [`FAMILY_SEPARATION`] apart modulo the action.
    pub distinct_orbits: usize,
    /// Complex dimension of the span of the hits.
    pub span_dim: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub clusters: usize,
    /// The lower bound `2n`.
    pub required: usize,
    /// Some cluster carries more than one orbit.
    pub non_isolated: bool,
    /// Some cluster spans all of `ℂⁿ` (the whole sphere is translated).
    pub degenerate: bool,
    /// Number of clusters carrying more than one orbit.
    pub families: usize,
    pub shapes: Vec<ClusterShape>,
    pub message: String,
}

/// Compares the cluster count with `2n` and inspects each cluster for
/// non-isolated hits.
pub fn verdict(spectrum: &ShiftSpectrum, records: &[TranslatedPointRecord], setting: &LensSetting) -> Verdict {
    let n = setting.n();
    let required = 2 * n;
    let shapes: Vec<ClusterShape> = spectrum
        .clusters
        .iter()
        .map(|c| {
            let pts: Vec<&ComplexVector> = c.members.iter().map(|&i| &records[i].p).collect();
            ClusterShape {
                center: c.center,
                records: pts.len(),
                distinct_orbits: distinct_orbits(setting, &pts),
                span_dim: complex_span_dim(n, &pts),
            }
        })
        .collect();
    let families = shapes.iter().filter(|s| s.distinct_orbits > 1).count();
    let non_isolated = families > 0;
    let degenerate = shapes.iter().any(|s| s.span_dim == n && s.distinct_orbits > 1);
    let status = if spectrum.len() >= required {
        Status::Pass
    } else {
        Status::Attention
    };

    let mut message = format!("{} time-shift clusters, lower bound 2n = {required}", spectrum.len());
    if degenerate {
        message.push_str("; degenerate: the whole sphere is translated");
    } else if non_isolated {
        message.push_str(&format!(
            "; non-isolated translated points suspected ({families} famil{})",
            if families == 1 { "y" } else { "ies" }
        ));
    }
    if status == Status::Attention && !non_isolated {
        message.push_str("; fewer shifts than the bound without visible families: increase the grids");
    }
    Verdict {
        status,
        clusters: spectrum.len(),
        required,
        non_isolated,
        degenerate,
        families,
        shapes,
        message,
    }
}

pub(crate) fn distinct_orbits(setting: &LensSetting, pts: &[&ComplexVector]) -> usize {
    let k = setting.k() as i64;
    let mut reps: Vec<Vec<ComplexVector>> = Vec::new();
    for p in pts {
        let seen = reps
            .iter()
            .any(|imgs| imgs.iter().any(|g| (g - *p).norm() <= FAMILY_SEPARATION));
        if !seen {
            reps.push((0..k).map(|g| lens_apply(setting, p, g)).collect());
        }
    }
    reps.len()
}

/// Orthogonal projector onto the real span of `{p, ip}` over all hits.
pub(crate) fn span_projector(pts: &[&ComplexVector]) -> Option<DMatrix<f64>> {
    let dim = pts.first()?.as_slice().len();
    let mut gram = DMatrix::<f64>::zeros(dim, dim);
    for p in pts {
        let a = p.as_dvector();
        let b = p.mul_i().into_dvector();
        gram += a * a.transpose() + &b * b.transpose();
    }
    let eig = gram.symmetric_eigen();
    let top = eig.eigenvalues.max();
    let mut proj = DMatrix::zeros(dim, dim);
    // Gram eigenvalues are squared singular values.
    for (i, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > 1e-12 * top {
            let u = eig.eigenvectors.column(i);
            proj += u * u.transpose();
        }
    }
    Some(proj)
}

/// Complex dimension of the span of the hits.
fn complex_span_dim(n: usize, pts: &[&ComplexVector]) -> usize {
    span_projector(pts).map_or(0, |p| (p.trace().round() as usize / 2).min(n))
}
