use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{ComplexVector, LensSetting};

/// A 2-homogeneous Hamiltonian on `ℂⁿ \ 0` from the built-in catalog.
///
/// * `Diagonal`: `H(z) = π Σ cⱼ |zⱼ|²`, whose flow is the diagonal unitary
///   `zⱼ ↦ e^{2iπ cⱼ t} zⱼ`.
/// * `Resonant`: `H(z) = ε · Re(c · Π zⱼ^{aⱼ} z̄ⱼ^{bⱼ}) · ‖z‖^{2−d}` with
///   `d = Σ (aⱼ + bⱼ)`. It is invariant under the lens action exactly when
///   `Σ (aⱼ − bⱼ) wⱼ ≡ 0 (mod k)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianTerm {
    Diagonal {
        coefficients: Vec<f64>,
    },
    Resonant {
        amplitude: f64,
        phase: Complex64,
        a: Vec<u32>,
        b: Vec<u32>,
    },
}

impl HamiltonianTerm {
    pub fn diagonal(coefficients: Vec<f64>) -> Self {
        HamiltonianTerm::Diagonal { coefficients }
    }

    pub fn resonant(amplitude: f64, phase: Complex64, a: Vec<u32>, b: Vec<u32>) -> Self {
        HamiltonianTerm::Resonant { amplitude, phase, a, b }
    }

    /// `H = π‖z‖²`, the generator of the Reeb lift `z ↦ e^{2iπt} z`.
    pub fn reeb(n: usize) -> Self {
        Self::diagonal(vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        match self {
            HamiltonianTerm::Diagonal { coefficients } => coefficients.len(),
            HamiltonianTerm::Resonant { a, .. } => a.len(),
        }
    }

    /// The flow of a diagonal term is a linear map.
    pub fn is_linear(&self) -> bool {
        matches!(self, HamiltonianTerm::Diagonal { .. })
    }

    /// Total degree `d` of the monomial of a resonant term.
    pub fn monomial_degree(&self) -> Option<u32> {
        match self {
            HamiltonianTerm::Diagonal { .. } => None,
            HamiltonianTerm::Resonant { a, b, .. } => Some(a.iter().chain(b).sum()),
        }
    }

    /// The congruence `Σ (aⱼ − bⱼ) wⱼ mod k` (0 for diagonal terms).
    pub fn invariance_residue(&self, setting: &LensSetting) -> i64 {
        match self {
            HamiltonianTerm::Diagonal { .. } => 0,
            HamiltonianTerm::Resonant { a, b, .. } => {
                let k = setting.k() as i64;
                a.iter()
                    .zip(b)
                    .zip(setting.weights())
                    .map(|((&aj, &bj), &w)| (aj as i64 - bj as i64) * w)
                    .sum::<i64>()
                    .rem_euclid(k)
            }
        }
    }

    /// Checks dimensions, finiteness and lens invariance against `setting`.
    pub fn validate(&self, setting: &LensSetting) -> Result<()> {
        let n = setting.n();
        match self {
            HamiltonianTerm::Diagonal { coefficients } => {
                if coefficients.len() != n {
                    return Err(Error::config(format!(
                        "diagonal term has {} coefficients, expected {n}",
                        coefficients.len()
                    )));
                }
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return Err(Error::config("diagonal coefficients must be finite"));
                }
            }
            HamiltonianTerm::Resonant { amplitude, phase, a, b } => {
                if a.len() != n || b.len() != n {
                    return Err(Error::config(format!(
                        "resonant term exponents a={a:?}, b={b:?} must both have length {n}"
                    )));
                }
                if !amplitude.is_finite() || !phase.re.is_finite() || !phase.im.is_finite() {
                    return Err(Error::config("resonant amplitude and phase must be finite"));
                }
                let residue = self.invariance_residue(setting);
                if residue != 0 {
                    let sum: i64 = a
                        .iter()
                        .zip(b)
                        .zip(setting.weights())
                        .map(|((&aj, &bj), &w)| (aj as i64 - bj as i64) * w)
                        .sum();
                    return Err(Error::config(format!(
                        "resonant term a={a:?}, b={b:?} is not invariant: Σ(aⱼ−bⱼ)wⱼ = {sum} ≢ 0 (mod {})",
                        setting.k()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, z: &ComplexVector) -> f64 {
        match self {
            HamiltonianTerm::Diagonal { coefficients } => {
                PI * coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, c)| c * z.entry(j).norm_sqr())
                    .sum::<f64>()
            }
            HamiltonianTerm::Resonant { amplitude, phase, a, b } => {
                let d: u32 = a.iter().chain(b).sum();
                let m: Complex64 = (0..z.dim()).map(|j| monomial(z.entry(j), a[j], b[j])).product();
                let r2 = z.norm_squared();
                amplitude * (phase * m).re * r2.powf((2.0 - d as f64) / 2.0)
            }
        }
    }
}

fn falling(a: u32, s: u32) -> f64 {
    (0..s).map(|i| (a as f64) - i as f64).product()
}

fn cpow(z: Complex64, e: i64) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    for _ in 0..e {
        out *= z;
    }
    out
}

fn monomial(z: Complex64, a: u32, b: u32) -> Complex64 {
    cpow(z, a as i64) * cpow(z.conj(), b as i64)
}

/// `∂_z^s ∂_z̄^r (z^a z̄^b)`.
fn wirtinger(z: Complex64, a: u32, b: u32, s: u32, r: u32) -> Complex64 {
    if s > a || r > b {
        return Complex64::new(0.0, 0.0);
    }
    falling(a, s) * falling(b, r) * cpow(z, (a - s) as i64) * cpow(z.conj(), (b - r) as i64)
}

/// Value and real first/second derivatives of `z^a z̄^b` in `(x, y)`:
/// `[u, u_x, u_y, u_xx, u_xy, u_yy]`.
fn monomial_jet(z: Complex64, a: u32, b: u32) -> [Complex64; 6] {
    let i = Complex64::new(0.0, 1.0);
    let d10 = wirtinger(z, a, b, 1, 0);
    let d01 = wirtinger(z, a, b, 0, 1);
    let d20 = wirtinger(z, a, b, 2, 0);
    let d11 = wirtinger(z, a, b, 1, 1);
    let d02 = wirtinger(z, a, b, 0, 2);
    [
        monomial(z, a, b),
        d10 + d01,
        i * (d10 - d01),
        d20 + 2.0 * d11 + d02,
        i * (d20 - d02),
        -(d20 - 2.0 * d11 + d02),
    ]
}

/// Derivative evaluator for resonant terms with reusable scratch space.
pub(crate) struct ResonantJet {
    amplitude: f64,
    phase: Complex64,
    a: Vec<u32>,
    b: Vec<u32>,
    exponent: f64,
    jets: Vec<[Complex64; 6]>,
    grad_p: Vec<f64>,
    hess_p: Vec<f64>,
}

impl ResonantJet {
    pub(crate) fn new(term: &HamiltonianTerm) -> Option<Self> {
        match term {
            HamiltonianTerm::Resonant { amplitude, phase, a, b } => {
                let n = a.len();
                let d: u32 = a.iter().chain(b).sum();
                Some(ResonantJet {
                    amplitude: *amplitude,
                    phase: *phase,
                    a: a.clone(),
                    b: b.clone(),
                    exponent: (2.0 - d as f64) / 2.0,
                    jets: vec![[Complex64::new(0.0, 0.0); 6]; n],
                    grad_p: vec![0.0; 2 * n],
                    hess_p: vec![0.0; 4 * n * n],
                })
            }
            HamiltonianTerm::Diagonal { .. } => None,
        }
    }

    fn fill_jets(&mut self, x: &[f64]) {
        for j in 0..self.a.len() {
            let z = Complex64::new(x[2 * j], x[2 * j + 1]);
            self.jets[j] = monomial_jet(z, self.a[j], self.b[j]);
        }
    }

    fn product_except(&self, skip1: usize, skip2: usize) -> Complex64 {
        let mut p = self.phase;
        for (j, jet) in self.jets.iter().enumerate() {
            if j != skip1 && j != skip2 {
                p *= jet[0];
            }
        }
        p
    }

    /// Writes `∇H` into `grad`.
    pub(crate) fn gradient(&mut self, x: &[f64], grad: &mut [f64]) {
        let dim = x.len();
        let n = dim / 2;
        self.fill_jets(x);
        let p_val = self.product_except(usize::MAX, usize::MAX).re;
        for j in 0..n {
            let rest = self.product_except(j, usize::MAX);
            self.grad_p[2 * j] = (rest * self.jets[j][1]).re;
            self.grad_p[2 * j + 1] = (rest * self.jets[j][2]).re;
        }
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let s = self.exponent;
        let r_val = r2.powf(s);
        let r_d1 = 2.0 * s * r2.powf(s - 1.0);
        for i in 0..dim {
            grad[i] = self.amplitude * (r_val * self.grad_p[i] + p_val * r_d1 * x[i]);
        }
    }

    /// Writes `∇H` into `grad` and the row-major Hessian into `hess`.
    pub(crate) fn gradient_hessian(&mut self, x: &[f64], grad: &mut [f64], hess: &mut [f64]) {
        let dim = x.len();
        let n = dim / 2;
        self.fill_jets(x);
        let p_val = self.product_except(usize::MAX, usize::MAX).re;
        for j in 0..n {
            let rest = self.product_except(j, usize::MAX);
            self.grad_p[2 * j] = (rest * self.jets[j][1]).re;
            self.grad_p[2 * j + 1] = (rest * self.jets[j][2]).re;
            // Diagonal coordinate block.
            let hxx = (rest * self.jets[j][3]).re;
            let hxy = (rest * self.jets[j][4]).re;
            let hyy = (rest * self.jets[j][5]).re;
            self.hess_p[(2 * j) * dim + 2 * j] = hxx;
            self.hess_p[(2 * j) * dim + 2 * j + 1] = hxy;
            self.hess_p[(2 * j + 1) * dim + 2 * j] = hxy;
            self.hess_p[(2 * j + 1) * dim + 2 * j + 1] = hyy;
            for k in (j + 1)..n {
                let rest2 = self.product_except(j, k);
                for (aj, da) in [(0usize, 1usize), (1, 2)] {
                    for (bk, db) in [(0usize, 1usize), (1, 2)] {
                        let v = (rest2 * self.jets[j][da] * self.jets[k][db]).re;
                        self.hess_p[(2 * j + aj) * dim + 2 * k + bk] = v;
                        self.hess_p[(2 * k + bk) * dim + 2 * j + aj] = v;
                    }
                }
            }
        }

        let r2: f64 = x.iter().map(|v| v * v).sum();
        let s = self.exponent;
        let r_val = r2.powf(s);
        let r_d1 = 2.0 * s * r2.powf(s - 1.0);
        let r_d2 = 4.0 * s * (s - 1.0) * r2.powf(s - 2.0);
        let eps = self.amplitude;
        for i in 0..dim {
            grad[i] = eps * (r_val * self.grad_p[i] + p_val * r_d1 * x[i]);
            for l in 0..dim {
                let grad_r_i = r_d1 * x[i];
                let grad_r_l = r_d1 * x[l];
                let hess_r = if i == l { r_d1 } else { 0.0 } + r_d2 * x[i] * x[l];
                hess[i * dim + l] = eps
                    * (r_val * self.hess_p[i * dim + l]
                        + self.grad_p[i] * grad_r_l
                        + grad_r_i * self.grad_p[l]
                        + p_val * hess_r);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_point() -> ComplexVector {
        ComplexVector::from_reals(vec![0.41, -0.27, 0.33, 0.58, -0.2, 0.11])
    }

    fn catalog_term() -> HamiltonianTerm {
        HamiltonianTerm::resonant(0.3, Complex64::new(0.6, -0.8), vec![2, 0, 1], vec![0, 1, 1])
    }

    #[test]
    fn two_homogeneity() {
        let z = sample_point();
        for term in [HamiltonianTerm::diagonal(vec![0.2, -0.5, 1.3]), catalog_term()] {
            let h1 = term.value(&z);
            for s in [0.3, 2.0, 7.5] {
                let hs = term.value(&z.scale(s));
                assert!((hs - s * s * h1).abs() <= 1e-10 * (s * s * h1).abs().max(1e-300));
            }
        }
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences() {
        let term = catalog_term();
        let mut jet = ResonantJet::new(&term).unwrap();
        let z = sample_point();
        let x = z.as_slice();
        let dim = x.len();
        let mut g = vec![0.0; dim];
        let mut h = vec![0.0; dim * dim];
        jet.gradient_hessian(x, &mut g, &mut h);

        let step = 1e-6;
        for i in 0..dim {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += step;
            xm[i] -= step;
            let fd = (term.value(&ComplexVector::from_reals(xp.clone()))
                - term.value(&ComplexVector::from_reals(xm.clone())))
                / (2.0 * step);
            assert!((fd - g[i]).abs() < 1e-8, "grad {i}: {fd} vs {}", g[i]);

            let mut gp = vec![0.0; dim];
            let mut gm = vec![0.0; dim];
            jet.gradient(&xp, &mut gp);
            jet.gradient(&xm, &mut gm);
            for l in 0..dim {
                let fd2 = (gp[l] - gm[l]) / (2.0 * step);
                assert!((fd2 - h[l * dim + i]).abs() < 1e-7, "hess ({l},{i})");
            }
        }
    }

    #[test]
    fn invariance_congruence() {
        let s = LensSetting::new(2, 3, vec![1, 2]).unwrap();
        let bad = HamiltonianTerm::resonant(0.1, Complex64::new(1.0, 0.0), vec![1, 0], vec![0, 1]);
        let err = bad.validate(&s).unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("-1")), "{err}");

        let s11 = LensSetting::uniform(2, 3).unwrap();
        let ok = HamiltonianTerm::resonant(0.02, Complex64::new(1.0, 0.0), vec![3, 0], vec![0, 3]);
        assert!(ok.validate(&s11).is_ok());
        assert!(HamiltonianTerm::diagonal(vec![1.0]).validate(&s11).is_err());
    }
}
