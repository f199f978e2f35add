//! The JSON run configuration.
//!
//! Every optional field is filled in by [`RunConfig::resolve`], and the
//! resolved document is echoed into each report, so every tolerance a report
//! relies on is visible in it.

use std::path::{Path, PathBuf};

use lenstrans::dynamics::{
    build_lift_with, factorize_with, FactorList, HamiltonianTerm, HomogeneousMap, IntegratorSettings, IsotopyStep,
    DEFAULT_FACTOR_SAMPLE,
};
use lenstrans::genfun::GFProblem;
use lenstrans::geometry::LensSetting;
use lenstrans::solve::{GenfunScanSettings, NewtonSettings, ScanSettings};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingConfig {
    pub n: usize,
    pub k: u32,
    /// Defaults to all ones.
    #[serde(default)]
    pub weights: Option<Vec<i64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompositionConfig {
    pub theta: f64,
    pub sample_size: usize,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        DecompositionConfig {
            theta: 0.1,
            sample_size: DEFAULT_FACTOR_SAMPLE,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DirectGrid {
    /// Defaults to `32n²`.
    pub sphere_points: Option<usize>,
    /// Defaults to 64.
    pub tau_samples: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenfunGrid {
    /// Defaults to `8n²`.
    pub sphere_points: Option<usize>,
    /// Defaults to 8.
    pub t_samples: Option<usize>,
    /// Defaults to `[0, 1]`.
    pub window: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NewtonConfig {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        let d = NewtonSettings::default();
        NewtonConfig {
            max_iter: d.max_iter,
            tol: d.tol,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub direct: DirectGrid,
    pub genfun: GenfunGrid,
    pub newton: NewtonConfig,
    pub residual_tol: f64,
    pub cluster_tol: f64,
    pub critical_tol: f64,
    pub crosscheck_tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            direct: DirectGrid::default(),
            genfun: GenfunGrid::default(),
            newton: NewtonConfig::default(),
            residual_tol: 1e-8,
            cluster_tol: 1e-5,
            critical_tol: 1e-8,
            crosscheck_tol: 1e-6,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ValidationConfig {
    pub sample_size: usize,
    pub homogeneity_tol: f64,
    pub equivariance_tol: f64,
    pub symplecticity_tol: f64,
    pub composition_tol: f64,
    pub symmetry_tol: f64,
    pub gradient_tol: f64,
    pub euler_tol: f64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig {
            sample_size: 16,
            homogeneity_tol: 1e-9,
            equivariance_tol: 1e-9,
            symplecticity_tol: 1e-8,
            composition_tol: 1e-8,
            symmetry_tol: 1e-6,
            gradient_tol: 1e-6,
            euler_tol: 1e-9,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndexJumpConfig {
    pub t0: f64,
    pub t1: f64,
}

/// Replaces factor `factor` (0-based) by `dilation × σ`, which is not symplectic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    pub factor: usize,
    pub dilation: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub setting: SettingConfig,
    #[serde(default)]
    pub isotopy: Vec<IsotopyStep>,
    #[serde(default)]
    pub decomposition: DecompositionConfig,
    #[serde(default)]
    pub integrator: IntegratorSettings,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub validation: ValidationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index_jump: Option<IndexJumpConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultConfig>,
    #[serde(default, skip_serializing)]
    pub output: OutputConfig,
}

/// A parsed config together with the bytes it came from.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: Vec<u8>,
}

impl RunConfig {
    /// Parses a JSON document; errors name the offending key path and position.
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            CliError::Config(format!(
                "at `{path}` (line {}, column {}): {inner}",
                inner.line(),
                inner.column()
            ))
        })?;
        config.validate()?;
        Ok(config.resolve())
    }

    pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
        let raw = std::fs::read(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        let text =
            String::from_utf8(raw.clone()).map_err(|_| CliError::Config(format!("{} is not UTF-8", path.display())))?;
        Ok(LoadedConfig {
            config: RunConfig::from_json(&text)?,
            raw,
        })
    }

    /// Lens setting and invariance congruences, before any computation.
    pub fn validate(&self) -> Result<(), CliError> {
        let setting = self.lens_setting()?;
        for (i, step) in self.isotopy.iter().enumerate() {
            if step.hamiltonian.dim() != setting.n() {
                return Err(CliError::Config(format!(
                    "isotopy step {}: Hamiltonian on ℂ^{} in a setting with n = {}",
                    i + 1,
                    step.hamiltonian.dim(),
                    setting.n()
                )));
            }
            step.hamiltonian
                .validate(&setting)
                .map_err(|e| CliError::Config(format!("isotopy step {}: {}", i + 1, strip(e))))?;
            if !step.duration.is_finite() {
                return Err(CliError::Config(format!(
                    "isotopy step {}: duration must be finite",
                    i + 1
                )));
            }
        }
        let theta = self.decomposition.theta;
        if !(theta > 0.0 && theta < 1.0) {
            return Err(CliError::Config(format!(
                "decomposition.theta = {theta} must lie in (0, 1)"
            )));
        }
        if let Some(w) = self.solver.genfun.window {
            if !(w[0] > -1.0 && w[1] < 3.0 && w[0] < w[1]) {
                return Err(CliError::Config(format!(
                    "solver.genfun.window {w:?} must be an interval inside (−1, 3)"
                )));
            }
        }
        Ok(())
    }

    /// Fills every defaulted grid size from `n`.
    pub fn resolve(mut self) -> Self {
        let n = self.setting.n;
        if self.setting.weights.is_none() {
            self.setting.weights = Some(vec![1; n]);
        }
        let d = &mut self.solver.direct;
        d.sphere_points.get_or_insert(32 * n * n);
        d.tau_samples.get_or_insert(64);
        let g = &mut self.solver.genfun;
        g.sphere_points.get_or_insert(8 * n * n);
        g.t_samples.get_or_insert(8);
        g.window.get_or_insert([0.0, 1.0]);
        self
    }

    pub fn lens_setting(&self) -> Result<LensSetting, CliError> {
        let weights = self.setting.weights.clone().unwrap_or_else(|| vec![1; self.setting.n]);
        LensSetting::new(self.setting.n, self.setting.k, weights).map_err(|e| CliError::Config(strip(e)))
    }

    pub fn lift(&self) -> Result<HomogeneousMap, CliError> {
        Ok(build_lift_with(&self.lens_setting()?, &self.isotopy, self.integrator)?)
    }

    /// The factorization, with the configured fault injected.
    pub fn factors(&self, map: &HomogeneousMap) -> Result<FactorList, CliError> {
        let mut fl = factorize_with(
            map,
            self.decomposition.theta,
            self.decomposition.sample_size,
            self.solver.seed,
        )?;
        if let Some(f) = self.fault {
            fl.inject_dilation(f.factor, f.dilation)
                .map_err(|e| CliError::Config(format!("fault: {}", strip(e))))?;
        }
        Ok(fl)
    }

    pub fn problem(&self, map: &HomogeneousMap) -> Result<GFProblem, CliError> {
        Ok(GFProblem::new(self.factors(map)?)?)
    }

    pub fn newton(&self) -> NewtonSettings {
        NewtonSettings {
            max_iter: self.solver.newton.max_iter,
            tol: self.solver.newton.tol,
            ..NewtonSettings::default()
        }
    }

    pub fn scan_settings(&self) -> ScanSettings {
        let n = self.setting.n;
        let mut s = ScanSettings::for_dimension(n);
        s.sphere_points = self.solver.direct.sphere_points.unwrap_or(s.sphere_points);
        s.tau_samples = self.solver.direct.tau_samples.unwrap_or(s.tau_samples);
        s.residual_tol = self.solver.residual_tol;
        s.cluster_tol = self.solver.cluster_tol;
        s.newton = self.newton();
        s.seed = self.solver.seed;
        s
    }

    pub fn genfun_settings(&self) -> GenfunScanSettings {
        let n = self.setting.n;
        let mut s = GenfunScanSettings::for_dimension(n);
        s.sphere_points = self.solver.genfun.sphere_points.unwrap_or(s.sphere_points);
        s.t_samples = self.solver.genfun.t_samples.unwrap_or(s.t_samples);
        if let Some(w) = self.solver.genfun.window {
            s.window = (w[0], w[1]);
        }
        s.critical_tol = self.solver.critical_tol;
        s.residual_tol = self.solver.residual_tol;
        s.cluster_tol = self.solver.cluster_tol;
        s.newton = self.newton();
        s.seed = self.solver.seed;
        s
    }

    /// The Morse–Bott example `π Σ spacing·j·|z_j|²` on `L_p^{2n−1}`, optionally
    /// perturbed by `ε·Re(c_j z_j^p)‖z‖^{2−p}` for every coordinate.
    pub fn sharpness(p: u32, n: usize, perturbed: bool) -> Self {
        const SPACING: f64 = 0.1;
        const EPSILON: f64 = 0.02;
        let coefficients = (1..=n).map(|j| SPACING * j as f64).collect();
        let mut isotopy = vec![IsotopyStep::new(HamiltonianTerm::diagonal(coefficients), 1.0)];
        if perturbed {
            for j in 0..n {
                let mut a = vec![0; n];
                a[j] = p;
                // Distinct phases keep the perturbations from sharing symmetries.
                let phase = Complex64::from_polar(1.0, 0.7 * (j + 1) as f64);
                isotopy.push(IsotopyStep::new(
                    HamiltonianTerm::resonant(EPSILON, phase, a, vec![0; n]),
                    1.0,
                ));
            }
        }
        let mut config = RunConfig {
            setting: SettingConfig { n, k: p, weights: None },
            isotopy,
            decomposition: DecompositionConfig::default(),
            integrator: IntegratorSettings::default(),
            solver: SolverConfig::default(),
            validation: ValidationConfig::default(),
            index_jump: None,
            fault: None,
            output: OutputConfig::default(),
        };
        // Each perturbation step costs a full RK4 integration per evaluation,
        // so the demo scans a coarser grid than the default.
        config.solver.direct.sphere_points = Some(16 * n * n);
        config.solver.direct.tau_samples = Some(32);
        config.resolve()
    }
}

fn strip(e: lenstrans::Error) -> String {
    match e {
        lenstrans::Error::Config(m)
        | lenstrans::Error::Domain(m)
        | lenstrans::Error::Contract(m)
        | lenstrans::Error::Unsupported(m) => m,
        other => other.to_string(),
    }
}
