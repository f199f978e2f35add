use std::f64::consts::PI;

use nalgebra::DMatrix;

use super::flow::IntegratorSettings;
use super::hamiltonian::HamiltonianTerm;
use super::lift::{Factor, HomogeneousMap};
use crate::error::{Error, Result};
use crate::geometry::{ComplexVector, LensSetting};
use crate::sampling::sphere_sample;

/// Default number of sphere points on which C¹-smallness is certified.
pub const DEFAULT_FACTOR_SAMPLE: usize = 256;

/// Largest number of equal substeps tried per isotopy step.
pub const MAX_SUBDIVISION: usize = 1 << 16;

/// `Φ = σₘ ∘ ⋯ ∘ σ₁` with `m` even and every `σⱼ` C¹-close to the identity.
#[derive(Clone, Debug)]
pub struct FactorList {
    setting: LensSetting,
    sigmas: Vec<Factor>,
    theta: f64,
    achieved: f64,
    sample_size: usize,
}

impl FactorList {
    /// Wraps an explicit list, padding to an even count of at least two.
    pub fn from_factors(setting: LensSetting, mut sigmas: Vec<Factor>, theta: f64) -> Self {
        pad_even(&mut sigmas);
        FactorList {
            setting,
            sigmas,
            theta,
            achieved: f64::NAN,
            sample_size: 0,
        }
    }

    pub fn setting(&self) -> &LensSetting {
        &self.setting
    }

    pub fn sigmas(&self) -> &[Factor] {
        &self.sigmas
    }

    pub fn len(&self) -> usize {
        self.sigmas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigmas.is_empty()
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Largest sampled `‖Dσⱼ − I‖_op` (NaN if never measured).
    pub fn achieved(&self) -> f64 {
        self.achieved
    }

    pub fn sample_size(&self) -> usize {
        self.sample_size
    }

    pub fn is_linear(&self) -> bool {
        self.sigmas.iter().all(Factor::is_linear)
    }

    /// Replaces `σ_index` by `scale · σ_index`, breaking symplecticity on purpose.
    pub fn inject_dilation(&mut self, index: usize, scale: f64) -> Result<()> {
        let slot = self
            .sigmas
            .get_mut(index)
            .ok_or_else(|| Error::config(format!("no factor with index {index}")))?;
        let inner = std::mem::replace(slot, Factor::Identity);
        *slot = Factor::Scaled {
            inner: Box::new(inner),
            scale,
        };
        Ok(())
    }

    pub fn apply(&self, z: &ComplexVector) -> Result<ComplexVector> {
        self.sigmas.iter().try_fold(z.clone(), |acc, f| f.apply(&acc))
    }
}

fn pad_even(sigmas: &mut Vec<Factor>) {
    if sigmas.is_empty() {
        sigmas.push(Factor::Identity);
        sigmas.push(Factor::Identity);
    } else if sigmas.len() % 2 == 1 {
        sigmas.push(Factor::Identity);
    }
}

/// Spectral norm of `D − I`.
pub fn deviation_from_identity(d: &DMatrix<f64>) -> f64 {
    let dim = d.nrows();
    let diff = d - DMatrix::<f64>::identity(dim, dim);
    diff.singular_values().max()
}

fn sampled_deviation(factor: &Factor, sample: &[ComplexVector]) -> Result<f64> {
    if factor.is_linear() {
        let n = sample.first().map(|p| p.dim()).unwrap_or(1);
        if let Some(m) = factor.linear_matrix(n) {
            return Ok(deviation_from_identity(&m));
        }
    }
    let mut worst: f64 = 0.0;
    for p in sample {
        let (_, d) = factor.apply_with_differential(p)?;
        worst = worst.max(deviation_from_identity(&d));
    }
    Ok(worst)
}

/// Worst deviation along the path `s ↦ flow_s`, `s ∈ [0, duration]`.
///
/// Diagonal flows use the unreduced rotation angles, so a piece that winds
/// a full turn is never mistaken for the identity. Resonant flows are
/// checked at half and full duration.
fn path_deviation(
    term: &HamiltonianTerm,
    duration: f64,
    integrator: IntegratorSettings,
    sample: &[ComplexVector],
) -> Result<f64> {
    match term {
        HamiltonianTerm::Diagonal { coefficients } => Ok(coefficients
            .iter()
            .map(|c| {
                let angle = (2.0 * PI * c * duration).abs();
                if angle >= PI {
                    2.0
                } else {
                    2.0 * (angle / 2.0).sin()
                }
            })
            .fold(0.0, f64::max)),
        HamiltonianTerm::Resonant { .. } => {
            let mut worst: f64 = 0.0;
            for frac in [0.5, 1.0] {
                let piece = Factor::Flow {
                    term: term.clone(),
                    duration: duration * frac,
                    integrator,
                };
                worst = worst.max(sampled_deviation(&piece, sample)?);
            }
            Ok(worst)
        }
    }
}

/// Splits each step of `map` into `2^j` equal substeps until every substep
/// satisfies `‖Dσ − I‖_op ≤ θ` along its whole path, on the default sphere sample.
pub fn factorize(map: &HomogeneousMap, theta: f64) -> Result<FactorList> {
    factorize_with(map, theta, DEFAULT_FACTOR_SAMPLE, 0)
}

pub fn factorize_with(map: &HomogeneousMap, theta: f64, sample_size: usize, seed: u64) -> Result<FactorList> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::domain(format!("θ = {theta} must lie in (0, 1)")));
    }
    let sample = sphere_sample(map.n(), sample_size.max(1), seed);
    let mut sigmas = Vec::new();
    let mut achieved: f64 = 0.0;

    for (idx, factor) in map.factors().iter().enumerate() {
        let (term, duration, integrator) = match factor {
            Factor::Flow {
                term,
                duration,
                integrator,
            } => (term, *duration, *integrator),
            other => {
                let dev = sampled_deviation(other, &sample)?;
                if dev > theta {
                    return Err(Error::numeric(
                        format!("factor {} cannot be subdivided and exceeds θ = {theta}", idx + 1),
                        dev,
                    ));
                }
                achieved = achieved.max(dev);
                sigmas.push(other.clone());
                continue;
            }
        };

        let mut pieces = 1usize;
        loop {
            let piece = Factor::Flow {
                term: term.clone(),
                duration: duration / pieces as f64,
                integrator,
            };
            let dev = path_deviation(term, duration / pieces as f64, integrator, &sample)?;
            if dev <= theta {
                achieved = achieved.max(dev);
                sigmas.extend(std::iter::repeat_n(piece, pieces));
                break;
            }
            pieces *= 2;
            if pieces > MAX_SUBDIVISION {
                return Err(Error::numeric(
                    format!(
                        "step {} still exceeds θ = {theta} after {MAX_SUBDIVISION} substeps; \
                         use smaller durations or amplitudes",
                        idx + 1
                    ),
                    dev,
                ));
            }
        }
    }

    pad_even(&mut sigmas);
    Ok(FactorList {
        setting: map.setting().clone(),
        sigmas,
        theta,
        achieved,
        sample_size,
    })
}
