use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{circle_distance, lens_apply, lex_cmp, orbit_representative, ComplexVector, LensSetting};

/// Which solver produced a record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Direct,
    Genfun,
}

/// A unit vector `p` with `Φ(p) = e^{2iπτ} p` up to `residual`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslatedPointRecord {
    pub p: ComplexVector,
    pub tau: f64,
    pub residual: f64,
    pub orbit_rep: ComplexVector,
    pub source: Source,
}

impl TranslatedPointRecord {
    pub(crate) fn new(setting: &LensSetting, p: ComplexVector, tau: f64, residual: f64, source: Source) -> Self {
        let orbit_rep = orbit_representative(setting, &p);
        TranslatedPointRecord {
            p,
            tau: reduce_tau(tau),
            residual,
            orbit_rep,
            source,
        }
    }
}

/// `τ mod 1` in `[0, 1)`.
pub fn reduce_tau(tau: f64) -> f64 {
    let r = tau.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `Φ(p) − e^{2iπτ} p` for any map `Φ`.
pub fn residual<F>(phi: F, p: &ComplexVector, tau: f64) -> Result<ComplexVector>
where
    F: Fn(&ComplexVector) -> Result<ComplexVector>,
{
    Ok(&phi(p)? - &p.rotate(2.0 * PI * tau))
}

/// Canonical order: by `τ`, then by orbit representative.
pub(crate) fn canonical_cmp(a: &TranslatedPointRecord, b: &TranslatedPointRecord) -> Ordering {
    a.tau
        .total_cmp(&b.tau)
        .then_with(|| lex_cmp(a.orbit_rep.as_slice(), b.orbit_rep.as_slice()))
        .then_with(|| a.residual.total_cmp(&b.residual))
}

/// Sorts canonically and keeps one item per `(orbit, τ)` class at tolerance
/// `tol`; the first in canonical order wins. Returns the number of merged
/// duplicates.
pub(crate) fn dedup_by<T, F>(setting: &LensSetting, mut items: Vec<T>, tol: f64, record: F) -> (Vec<T>, usize)
where
    F: Fn(&T) -> &TranslatedPointRecord,
{
    items.sort_by(|a, b| canonical_cmp(record(a), record(b)));
    let k = setting.k() as i64;
    let mut kept: Vec<T> = Vec::new();
    let mut images: Vec<Vec<ComplexVector>> = Vec::new();
    let mut merged = 0;
    for item in items {
        let rec = record(&item);
        let dup = kept.iter().zip(&images).any(|(other, imgs)| {
            circle_distance(record(other).tau, rec.tau) <= tol && imgs.iter().any(|g| (g - &rec.p).norm() <= tol)
        });
        if dup {
            merged += 1;
        } else {
            images.push((0..k).map(|g| lens_apply(setting, &rec.p, g)).collect());
            kept.push(item);
        }
    }
    (kept, merged)
}

pub(crate) fn dedup_records(
    setting: &LensSetting,
    records: Vec<TranslatedPointRecord>,
    tol: f64,
) -> (Vec<TranslatedPointRecord>, usize) {
    dedup_by(setting, records, tol, |r| r)
}
