use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::flow::{flow_point, flow_step, IntegratorSettings};
use super::hamiltonian::HamiltonianTerm;
use crate::error::{Error, Result};
use crate::geometry::{complex_structure, lens_apply, ComplexVector, LensSetting, UNIT_NORM_TOL};

/// One leg of an isotopy: flow `hamiltonian` for `duration` (negative runs backwards).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsotopyStep {
    pub hamiltonian: HamiltonianTerm,
    pub duration: f64,
}

impl IsotopyStep {
    pub fn new(hamiltonian: HamiltonianTerm, duration: f64) -> Self {
        IsotopyStep { hamiltonian, duration }
    }
}

/// An `(ℝ₊ × ℤ/kℤ)`-equivariant map of `ℂⁿ \ 0` that can be evaluated with its differential.
#[derive(Clone, Debug)]
pub enum Factor {
    Identity,
    Flow {
        term: HamiltonianTerm,
        duration: f64,
        integrator: IntegratorSettings,
    },
    /// A fixed real-linear map; must commute with the lens action.
    Linear {
        matrix: DMatrix<f64>,
    },
    /// `z ↦ scale · inner(z)`. Only symplectic for `scale = 1`; used to inject faults.
    Scaled {
        inner: Box<Factor>,
        scale: f64,
    },
}

impl Factor {
    pub fn apply(&self, z: &ComplexVector) -> Result<ComplexVector> {
        match self {
            Factor::Identity => Ok(z.clone()),
            Factor::Flow {
                term,
                duration,
                integrator,
            } => flow_point(term, *duration, z, integrator),
            Factor::Linear { matrix } => Ok(ComplexVector::from_dvector(matrix * z.as_dvector())),
            Factor::Scaled { inner, scale } => Ok(inner.apply(z)?.scale(*scale)),
        }
    }

    pub fn apply_with_differential(&self, z: &ComplexVector) -> Result<(ComplexVector, DMatrix<f64>)> {
        match self {
            Factor::Identity => Ok((z.clone(), DMatrix::identity(2 * z.dim(), 2 * z.dim()))),
            Factor::Flow {
                term,
                duration,
                integrator,
            } => flow_step(term, *duration, z, integrator),
            Factor::Linear { matrix } => Ok((ComplexVector::from_dvector(matrix * z.as_dvector()), matrix.clone())),
            Factor::Scaled { inner, scale } => {
                let (img, d) = inner.apply_with_differential(z)?;
                Ok((img.scale(*scale), d * *scale))
            }
        }
    }

    /// Real matrix of the factor when it is linear.
    pub fn linear_matrix(&self, n: usize) -> Option<DMatrix<f64>> {
        match self {
            Factor::Identity => Some(DMatrix::identity(2 * n, 2 * n)),
            Factor::Flow { term, duration, .. } if term.is_linear() => {
                let probe = ComplexVector::basis(n, 0);
                flow_step(term, *duration, &probe, &IntegratorSettings::default())
                    .ok()
                    .map(|(_, d)| d)
            }
            Factor::Flow { .. } => None,
            Factor::Linear { matrix } => Some(matrix.clone()),
            Factor::Scaled { inner, scale } => inner.linear_matrix(n).map(|m| m * *scale),
        }
    }

    pub fn is_linear(&self) -> bool {
        match self {
            Factor::Identity | Factor::Linear { .. } => true,
            Factor::Flow { term, .. } => term.is_linear(),
            Factor::Scaled { inner, .. } => inner.is_linear(),
        }
    }

    /// Short human-readable description for diagnostics.
    pub fn describe(&self) -> String {
        match self {
            Factor::Identity => "identity".into(),
            Factor::Flow { term, duration, .. } => match term {
                HamiltonianTerm::Diagonal { coefficients } => {
                    format!("diagonal flow {coefficients:?} for {duration}")
                }
                HamiltonianTerm::Resonant { a, b, .. } => {
                    format!("resonant flow a={a:?} b={b:?} for {duration}")
                }
            },
            Factor::Linear { .. } => "linear map".into(),
            Factor::Scaled { inner, scale } => format!("{scale} × ({})", inner.describe()),
        }
    }
}

/// The homogeneous lift `Φ` of an equivariant contact isotopy, realized as a
/// composition of Hamiltonian flows applied in order.
#[derive(Clone, Debug)]
pub struct HomogeneousMap {
    setting: LensSetting,
    steps: Vec<IsotopyStep>,
    factors: Vec<Factor>,
    integrator: IntegratorSettings,
}

/// Worst-case deviations from the three structural identities of a lift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct MapInvariants {
    /// `max ‖Φ(sz) − sΦ(z)‖ / ‖sΦ(z)‖`
    pub homogeneity: f64,
    /// `max ‖Φ(gz) − gΦ(z)‖` for the generator `g`
    pub equivariance: f64,
    /// `max ‖DΦᵀ J DΦ − J‖`
    pub symplecticity: f64,
}

impl HomogeneousMap {
    pub fn identity(setting: LensSetting) -> Self {
        HomogeneousMap {
            setting,
            steps: Vec::new(),
            factors: Vec::new(),
            integrator: IntegratorSettings::default(),
        }
    }

    pub fn setting(&self) -> &LensSetting {
        &self.setting
    }

    pub fn n(&self) -> usize {
        self.setting.n()
    }

    pub fn steps(&self) -> &[IsotopyStep] {
        &self.steps
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn integrator(&self) -> &IntegratorSettings {
        &self.integrator
    }

    pub fn is_linear(&self) -> bool {
        self.factors.iter().all(Factor::is_linear)
    }

    pub fn apply(&self, z: &ComplexVector) -> Result<ComplexVector> {
        self.factors.iter().try_fold(z.clone(), |acc, f| f.apply(&acc))
    }

    pub fn apply_with_differential(&self, z: &ComplexVector) -> Result<(ComplexVector, DMatrix<f64>)> {
        let dim = 2 * z.dim();
        let mut point = z.clone();
        let mut diff = DMatrix::identity(dim, dim);
        for f in &self.factors {
            let (img, d) = f.apply_with_differential(&point)?;
            diff = d * diff;
            point = img;
        }
        Ok((point, diff))
    }

    /// Measures the lift identities on `sample`.
    pub fn invariants(&self, sample: &[ComplexVector]) -> Result<MapInvariants> {
        let j = complex_structure(self.n());
        let mut out = MapInvariants::default();
        for p in sample {
            let (img, d) = self.apply_with_differential(p)?;
            for s in [0.5, 3.0] {
                let scaled = self.apply(&p.scale(s))?;
                let expected = img.scale(s);
                let err = (&scaled - &expected).norm() / expected.norm();
                out.homogeneity = out.homogeneity.max(err);
            }
            let moved = self.apply(&lens_apply(&self.setting, p, 1))?;
            let err = (&moved - &lens_apply(&self.setting, &img, 1)).norm();
            out.equivariance = out.equivariance.max(err);
            let symp = (d.transpose() * &j * &d - &j).norm();
            out.symplecticity = out.symplecticity.max(symp);
        }
        Ok(out)
    }
}

/// Composes the flows of `steps` in order, after validating every term.
pub fn build_lift(setting: &LensSetting, steps: &[IsotopyStep]) -> Result<HomogeneousMap> {
    build_lift_with(setting, steps, IntegratorSettings::default())
}

pub fn build_lift_with(
    setting: &LensSetting,
    steps: &[IsotopyStep],
    integrator: IntegratorSettings,
) -> Result<HomogeneousMap> {
    for (idx, step) in steps.iter().enumerate() {
        step.hamiltonian.validate(setting).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("isotopy step {}: {m}", idx + 1)),
            other => other,
        })?;
        if !step.duration.is_finite() {
            return Err(Error::config(format!(
                "isotopy step {}: duration must be finite",
                idx + 1
            )));
        }
    }
    let factors = steps
        .iter()
        .map(|s| Factor::Flow {
            term: s.hamiltonian.clone(),
            duration: s.duration,
            integrator,
        })
        .collect();
    Ok(HomogeneousMap {
        setting: setting.clone(),
        steps: steps.to_vec(),
        factors,
        integrator,
    })
}

/// `g(p) = −2 ln ‖Φ(p)‖`, so that the sphere map `φ = Φ/‖Φ‖` satisfies `φ*α = e^g α`.
pub fn conformal_factor(map: &HomogeneousMap, p: &ComplexVector) -> Result<f64> {
    let r = p.norm();
    if (r - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::domain(format!(
            "conformal factor needs a unit vector, got norm {r}"
        )));
    }
    Ok(-2.0 * map.apply(p)?.norm().ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{contact_form, reeb_flow};
    use crate::sampling::sphere_sample;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn setting() -> LensSetting {
        LensSetting::uniform(2, 3).unwrap()
    }

    fn perturbed_steps() -> Vec<IsotopyStep> {
        vec![
            IsotopyStep::new(HamiltonianTerm::diagonal(vec![0.15, 0.35]), 1.0),
            IsotopyStep::new(
                HamiltonianTerm::resonant(0.05, Complex64::new(1.0, 0.0), vec![3, 0], vec![0, 0]),
                1.0,
            ),
        ]
    }

    #[test]
    fn empty_isotopy_is_identity() {
        let map = build_lift(&setting(), &[]).unwrap();
        let z = ComplexVector::from_reals(vec![0.1, 0.2, 0.3, 0.4]);
        assert_eq!(map.apply(&z).unwrap(), z);
    }

    #[test]
    fn single_diagonal_step_closed_form() {
        let steps = [IsotopyStep::new(HamiltonianTerm::diagonal(vec![0.15, 0.35]), 1.0)];
        let map = build_lift(&setting(), &steps).unwrap();
        let z = ComplexVector::from_reals(vec![0.1, 0.2, 0.3, 0.4]);
        let img = map.apply(&z).unwrap();
        let e1 = Complex64::from_polar(1.0, 2.0 * PI * 0.15);
        let e2 = Complex64::from_polar(1.0, 2.0 * PI * 0.35);
        assert!((img.entry(0) - e1 * z.entry(0)).norm() < 1e-15);
        assert!((img.entry(1) - e2 * z.entry(1)).norm() < 1e-15);
    }

    #[test]
    fn perturbed_lift_satisfies_invariants() {
        let map = build_lift(&setting(), &perturbed_steps()).unwrap();
        let inv = map.invariants(&sphere_sample(2, 16, 3)).unwrap();
        assert!(inv.homogeneity < 1e-9, "{inv:?}");
        assert!(inv.equivariance < 1e-9, "{inv:?}");
        assert!(inv.symplecticity < 1e-9, "{inv:?}");
    }

    #[test]
    fn non_invariant_term_is_named() {
        let steps = [IsotopyStep::new(
            HamiltonianTerm::resonant(0.1, Complex64::new(1.0, 0.0), vec![1, 0], vec![0, 0]),
            1.0,
        )];
        let err = build_lift(&setting(), &steps).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("step 1")), "{err}");
    }

    #[test]
    fn conformal_factor_vanishes_for_unitaries() {
        let reeb = build_lift(&setting(), &[IsotopyStep::new(HamiltonianTerm::reeb(2), 0.3)]).unwrap();
        let diag = build_lift(
            &setting(),
            &[IsotopyStep::new(HamiltonianTerm::diagonal(vec![0.15, 0.35]), 1.0)],
        )
        .unwrap();
        for p in sphere_sample(2, 8, 1) {
            assert!(conformal_factor(&reeb, &p).unwrap().abs() < 1e-14);
            assert!(conformal_factor(&diag, &p).unwrap().abs() < 1e-14);
            assert!((&reeb.apply(&p).unwrap() - &reeb_flow(&p, 0.3)).norm() < 1e-14);
        }
        assert!(conformal_factor(&reeb, &ComplexVector::basis(2, 0).scale(2.0)).is_err());
    }

    /// Pull back α through `φ = Φ/‖Φ‖` by finite differences and compare with `e^g α`.
    #[test]
    fn conformal_factor_matches_pullback() {
        let steps = [IsotopyStep::new(
            HamiltonianTerm::resonant(0.3, Complex64::new(0.6, 0.8), vec![3, 0], vec![0, 0]),
            1.0,
        )];
        let map = build_lift(&setting(), &steps).unwrap();
        let sphere_map = |q: &ComplexVector| map.apply(q).unwrap().normalized().unwrap();
        let mut seen_nonzero = false;
        for p in sphere_sample(2, 6, 11) {
            let g = conformal_factor(&map, &p).unwrap();
            seen_nonzero |= g.abs() > 1e-3;
            let img = sphere_map(&p);
            // Two tangent directions: Reeb and a horizontal one.
            let reeb_dir = p.mul_i();
            let other = ComplexVector::from_reals(vec![0.3, -0.1, 0.2, 0.5]);
            let horiz = &other - &p.scale(other.dot(&p));
            for v in [reeb_dir, horiz] {
                let h = 1e-6;
                let fwd = sphere_map(&(&p + &v.scale(h)).normalized().unwrap());
                let bwd = sphere_map(&(&p - &v.scale(h)).normalized().unwrap());
                let dv = (&fwd - &bwd).scale(1.0 / (2.0 * h));
                let tangent = &dv - &img.scale(dv.dot(&img));
                let pulled = contact_form(&img, &tangent).unwrap();
                let expected = g.exp() * contact_form(&p, &v).unwrap();
                assert!((pulled - expected).abs() < 1e-6, "{pulled} vs {expected}");
            }
        }
        assert!(seen_nonzero, "test map should not preserve α");
    }
}
