use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::record::TranslatedPointRecord;
use super::spectrum::cluster_shifts;
use super::verdict::{distinct_orbits, span_projector};
use crate::geometry::{circle_distance, lens_apply, ComplexVector, LensSetting};

/// A direct record paired with a generating-function record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Match {
    pub direct: usize,
    pub genfun: usize,
    /// Shift distance plus distance of the point to the other solver's hit set.
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub tolerance: f64,
    pub matched: Vec<Match>,
    pub unmatched_direct: Vec<usize>,
    pub unmatched_genfun: Vec<usize>,
    /// Largest discrepancy among matched pairs.
    pub max_discrepancy: f64,
}

impl CrossCheck {
    pub fn agrees(&self) -> bool {
        self.unmatched_direct.is_empty() && self.unmatched_genfun.is_empty()
    }
}

/// The hits of one solver at one shift: isolated orbits, or a family.
struct HitSet {
    center: f64,
    members: Vec<usize>,
    /// Projector onto the complex span of the members.
    span: DMatrix<f64>,
    non_isolated: bool,
}

fn hit_sets(setting: &LensSetting, records: &[TranslatedPointRecord], tol: f64) -> Vec<HitSet> {
    let taus: Vec<f64> = records.iter().map(|r| r.tau).collect();
    cluster_shifts(&taus, tol)
        .clusters
        .into_iter()
        .map(|c| {
            let pts: Vec<&ComplexVector> = c.members.iter().map(|&i| &records[i].p).collect();
            HitSet {
                center: c.center,
                non_isolated: distinct_orbits(setting, &pts) > 1,
                span: span_projector(&pts).expect("clusters are nonempty"),
                members: c.members,
            }
        })
        .collect()
}

/// Distance of `rec` to the nearest hit set, with the member it was paired to.
/// `own` are the hit sets of `rec`'s solver: a family seen by either solver
/// is compared as a family.
fn nearest(
    setting: &LensSetting,
    rec: &TranslatedPointRecord,
    own: &[HitSet],
    sets: &[HitSet],
    pool: &[TranslatedPointRecord],
    tol: f64,
) -> Option<(usize, f64)> {
    let orbit = |a: &ComplexVector, b: &ComplexVector| {
        (0..setting.k() as i64)
            .map(|g| (&lens_apply(setting, a, g) - b).norm())
            .fold(f64::INFINITY, f64::min)
    };
    sets.iter()
        .filter(|s| circle_distance(s.center, rec.tau) <= tol)
        .filter_map(|s| {
            let shift = s
                .members
                .iter()
                .map(|&i| circle_distance(pool[i].tau, rec.tau))
                .fold(f64::INFINITY, f64::min);
            let own_family = own
                .iter()
                .any(|o| o.non_isolated && circle_distance(o.center, s.center) <= tol);
            match (s.non_isolated || own_family).then_some(&s.span) {
                Some(proj) => {
                    // A family is the unit sphere of its span; measure the distance to it.
                    let v = rec.p.as_dvector();
                    let off = (v - proj * v).norm();
                    Some((s.members[0], shift.max(off)))
                }
                None => s
                    .members
                    .iter()
                    .map(|&i| (i, orbit(&rec.p, &pool[i].p).max(circle_distance(pool[i].tau, rec.tau))))
                    .min_by(|x, y| x.1.total_cmp(&y.1)),
            }
        })
        .min_by(|x, y| x.1.total_cmp(&y.1))
}

/// Checks that both solvers found the same `(orbit, shift)` set.
///
/// Isolated hits are compared orbit to orbit. When one solver reports a
/// non-isolated family at some shift, a hit of the other solver matches it
/// if it lies on the unit sphere of the family's complex span.
pub fn crosscheck(
    setting: &LensSetting,
    direct: &[TranslatedPointRecord],
    genfun: &[TranslatedPointRecord],
    tol: f64,
) -> CrossCheck {
    let direct_sets = hit_sets(setting, direct, tol);
    let genfun_sets = hit_sets(setting, genfun, tol);

    let mut matched = Vec::new();
    let mut unmatched_direct = Vec::new();
    for (i, d) in direct.iter().enumerate() {
        match nearest(setting, d, &direct_sets, &genfun_sets, genfun, tol) {
            Some((j, disc)) if disc <= tol => matched.push(Match {
                direct: i,
                genfun: j,
                discrepancy: disc,
            }),
            _ => unmatched_direct.push(i),
        }
    }
    let mut unmatched_genfun = Vec::new();
    let mut max_discrepancy = matched.iter().map(|m| m.discrepancy).fold(0.0, f64::max);
    for (j, g) in genfun.iter().enumerate() {
        match nearest(setting, g, &genfun_sets, &direct_sets, direct, tol) {
            Some((_, disc)) if disc <= tol => max_discrepancy = max_discrepancy.max(disc),
            _ => unmatched_genfun.push(j),
        }
    }
    CrossCheck {
        tolerance: tol,
        matched,
        unmatched_direct,
        unmatched_genfun,
        max_discrepancy,
    }
}
