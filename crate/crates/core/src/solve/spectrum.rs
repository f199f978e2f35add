use serde::{Deserialize, Serialize};

use super::record::{reduce_tau, TranslatedPointRecord};
use crate::geometry::circle_distance;

/// One time-shift cluster; `members` index the record list it was built from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftCluster {
    pub center: f64,
    pub members: Vec<usize>,
}

/// Time-shifts of a record list, clustered in `ℝ/ℤ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftSpectrum {
    pub clusters: Vec<ShiftCluster>,
    pub tolerance: f64,
    /// Set when the spectrum was built from no records.
    pub warning: Option<String>,
}

impl ShiftSpectrum {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.clusters.iter().map(|c| c.center).collect()
    }
}

/// Single-linkage clustering of the `τ` values in the `ℝ/ℤ` metric.
pub fn count_time_shifts(records: &[TranslatedPointRecord], tol: f64) -> ShiftSpectrum {
    let taus: Vec<f64> = records.iter().map(|r| r.tau).collect();
    cluster_shifts(&taus, tol)
}

/// [`count_time_shifts`] on bare shifts.
pub fn cluster_shifts(taus: &[f64], tol: f64) -> ShiftSpectrum {
    if taus.is_empty() {
        return ShiftSpectrum {
            clusters: Vec::new(),
            tolerance: tol,
            warning: Some("no records: the spectrum is empty".into()),
        };
    }
    let mut order: Vec<(f64, usize)> = taus.iter().map(|&t| reduce_tau(t)).zip(0..).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    // Linear pass, then glue the last group to the first across 1 ≡ 0.
    let mut groups: Vec<Vec<(f64, usize)>> = vec![vec![order[0]]];
    for w in order.windows(2) {
        if w[1].0 - w[0].0 <= tol {
            groups.last_mut().expect("nonempty").push(w[1]);
        } else {
            groups.push(vec![w[1]]);
        }
    }
    if groups.len() > 1 {
        let first = order[0].0;
        let last = order[order.len() - 1].0;
        if first + 1.0 - last <= tol {
            let tail = groups.pop().expect("nonempty");
            let mut merged: Vec<(f64, usize)> = tail.into_iter().map(|(t, i)| (t - 1.0, i)).collect();
            merged.append(&mut groups[0]);
            groups[0] = merged;
        }
    }

    let mut clusters: Vec<ShiftCluster> = groups
        .into_iter()
        .map(|g| {
            // Members are unwrapped relative to the first, so the mean is a circular center.
            let center = reduce_tau(g.iter().map(|m| m.0).sum::<f64>() / g.len() as f64);
            let mut members: Vec<usize> = g.into_iter().map(|m| m.1).collect();
            members.sort_unstable();
            ShiftCluster { center, members }
        })
        .collect();
    clusters.sort_by(|a, b| a.center.total_cmp(&b.center));
    debug_assert!(clusters
        .windows(2)
        .all(|w| circle_distance(w[0].center, w[1].center) > 0.0));
    ShiftSpectrum {
        clusters,
        tolerance: tol,
        warning: None,
    }
}
