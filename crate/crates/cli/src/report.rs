//! Reports and their JSON / CSV renderings.

use std::io::Write;
use std::path::{Path, PathBuf};

use lenstrans::solve::{ShiftSpectrum, TranslatedPointRecord};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const TAU_HISTOGRAM_BINS: usize = 100;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub center: f64,
    pub size: usize,
    /// Indices into `records`.
    pub members: Vec<usize>,
}

impl ClusterSummary {
    pub fn from_spectrum(spectrum: &ShiftSpectrum) -> Vec<Self> {
        spectrum
            .clusters
            .iter()
            .map(|c| ClusterSummary {
                center: c.center,
                size: c.members.len(),
                members: c.members.clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub command: String,
    /// SHA-256 of the config bytes; `null` for commands without a config file.
    pub config_sha256: Option<String>,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(command: &str, raw_config: Option<&[u8]>, seed: u64) -> Self {
        Provenance {
            command: command.to_string(),
            config_sha256: raw_config.map(|b| hex::encode(Sha256::digest(b))),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

/// The stable report document. Thread counts and wall-clock times are kept
/// out of it so that reruns are byte-identical.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub setting: Value,
    pub records: Vec<TranslatedPointRecord>,
    pub shift_clusters: Vec<ClusterSummary>,
    pub verdict: Value,
    pub diagnostics: Value,
    pub provenance: Provenance,
    /// Residual history of the first converged start; goes to CSV only.
    #[serde(skip)]
    pub residual_decay: Vec<f64>,
}

impl Report {
    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("cannot serialize report: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn write_json(&self, out: Option<&Path>) -> Result<(), CliError> {
        let text = self.to_json()?;
        match out {
            Some(path) => std::fs::write(path, text).map_err(|source| CliError::Write {
                path: path.to_path_buf(),
                source,
            }),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(text.as_bytes()).map_err(|source| CliError::Write {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
            }
        }
    }

    /// Records to `path`, plus `<stem>.tau_hist.csv` and
    /// `<stem>.residual_decay.csv` next to it.
    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        let wrap = |p: &Path| {
            let p = p.to_path_buf();
            move |e: csv::Error| CliError::Write {
                path: p.clone(),
                source: e.into(),
            }
        };

        let mut w = csv::Writer::from_path(path).map_err(wrap(path))?;
        let n = self.records.first().map_or(0, |r| r.p.dim());
        let mut header = vec!["source".to_string(), "tau".into(), "residual".into()];
        for j in 0..n {
            header.push(format!("re_{j}"));
            header.push(format!("im_{j}"));
        }
        w.write_record(&header).map_err(wrap(path))?;
        for r in &self.records {
            let source = serde_json::to_value(r.source)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default();
            let mut row = vec![source, r.tau.to_string(), r.residual.to_string()];
            row.extend(r.p.as_slice().iter().map(f64::to_string));
            w.write_record(&row).map_err(wrap(path))?;
        }
        w.flush().map_err(|source| CliError::Write {
            path: path.to_path_buf(),
            source,
        })?;

        let hist_path = sibling(path, "tau_hist");
        let mut w = csv::Writer::from_path(&hist_path).map_err(wrap(&hist_path))?;
        w.write_record(["bin_lo", "bin_hi", "count"])
            .map_err(wrap(&hist_path))?;
        let taus: Vec<f64> = self.records.iter().map(|r| r.tau).collect();
        for (b, count) in tau_histogram(&taus).into_iter().enumerate() {
            let lo = b as f64 / TAU_HISTOGRAM_BINS as f64;
            let hi = (b + 1) as f64 / TAU_HISTOGRAM_BINS as f64;
            w.write_record([lo.to_string(), hi.to_string(), count.to_string()])
                .map_err(wrap(&hist_path))?;
        }
        w.flush().map_err(|source| CliError::Write {
            path: hist_path.clone(),
            source,
        })?;

        let decay_path = sibling(path, "residual_decay");
        let mut w = csv::Writer::from_path(&decay_path).map_err(wrap(&decay_path))?;
        w.write_record(["iteration", "residual"]).map_err(wrap(&decay_path))?;
        for (i, r) in self.residual_decay.iter().enumerate() {
            w.write_record([i.to_string(), r.to_string()])
                .map_err(wrap(&decay_path))?;
        }
        w.flush().map_err(|source| CliError::Write {
            path: decay_path.clone(),
            source,
        })
    }
}

/// Counts of `τ ∈ [0, 1)` in equal bins.
pub fn tau_histogram(taus: &[f64]) -> Vec<usize> {
    let mut bins = vec![0; TAU_HISTOGRAM_BINS];
    for &t in taus {
        let b = ((t.rem_euclid(1.0) * TAU_HISTOGRAM_BINS as f64) as usize).min(TAU_HISTOGRAM_BINS - 1);
        bins[b] += 1;
    }
    bins
}

/// `dir/stem.csv` → `dir/stem.<tag>.csv`.
pub fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "report".into());
    path.with_file_name(format!("{stem}.{tag}.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_bins_the_circle() {
        let h = tau_histogram(&[0.0, 0.005, 0.999, 0.5]);
        assert_eq!(h[0], 2);
        assert_eq!(h[50], 1);
        assert_eq!(h[99], 1);
        assert_eq!(h.iter().sum::<usize>(), 4);
    }

    #[test]
    fn sibling_names() {
        assert_eq!(
            sibling(Path::new("/tmp/out/run.csv"), "tau_hist"),
            PathBuf::from("/tmp/out/run.tau_hist.csv")
        );
    }
}
