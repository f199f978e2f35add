//! Geometry of `ℂⁿ ≅ ℝ²ⁿ`: the standard contact form on the unit sphere,
//! its 1-periodic Reeb flow, and the weighted `ℤ/kℤ` lens action.
//!
//! Complex vectors are stored as interleaved real pairs `(x₁, y₁, x₂, y₂, …)`.
//! Every inner product in this crate is the real Euclidean one on `ℝ²ⁿ`.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `‖p‖ = 1` for operations whose inputs are sphere points.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Tolerance used by [`contact_form`] for its base point.
pub const CONTACT_FORM_UNIT_TOL: f64 = 1e-12;

/// A vector of `ℂⁿ`, stored as `2n` interleaved reals.
#[derive(Clone, PartialEq)]
pub struct ComplexVector(DVector<f64>);

impl ComplexVector {
    pub fn zeros(n: usize) -> Self {
        ComplexVector(DVector::zeros(2 * n))
    }

    /// The `j`-th standard basis vector (0-based) of `ℂⁿ`.
    pub fn basis(n: usize, j: usize) -> Self {
        let mut v = Self::zeros(n);
        v.0[2 * j] = 1.0;
        v
    }

    pub fn from_complex(entries: &[Complex64]) -> Self {
        let mut data = Vec::with_capacity(2 * entries.len());
        for c in entries {
            data.push(c.re);
            data.push(c.im);
        }
        ComplexVector(DVector::from_vec(data))
    }

    /// Builds a vector from interleaved reals. Panics on odd length.
    pub fn from_reals(reals: Vec<f64>) -> Self {
        assert!(
            reals.len().is_multiple_of(2),
            "interleaved storage needs an even length"
        );
        ComplexVector(DVector::from_vec(reals))
    }

    pub fn from_dvector(v: DVector<f64>) -> Self {
        assert!(v.len().is_multiple_of(2), "interleaved storage needs an even length");
        ComplexVector(v)
    }

    /// Complex dimension `n`.
    pub fn dim(&self) -> usize {
        self.0.len() / 2
    }

    pub fn entry(&self, j: usize) -> Complex64 {
        Complex64::new(self.0[2 * j], self.0[2 * j + 1])
    }

    pub fn set_entry(&mut self, j: usize, c: Complex64) {
        self.0[2 * j] = c.re;
        self.0[2 * j + 1] = c.im;
    }

    pub fn entries(&self) -> Vec<Complex64> {
        (0..self.dim()).map(|j| self.entry(j)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn into_dvector(self) -> DVector<f64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    /// Real Euclidean inner product on `ℝ²ⁿ`.
    pub fn dot(&self, other: &ComplexVector) -> f64 {
        self.0.dot(&other.0)
    }

    /// Hermitian product `Σ conj(aⱼ)·bⱼ`.
    pub fn hermitian(&self, other: &ComplexVector) -> Complex64 {
        (0..self.dim()).map(|j| self.entry(j).conj() * other.entry(j)).sum()
    }

    /// Multiplication by `i`, i.e. `(x, y) ↦ (−y, x)` on every pair.
    pub fn mul_i(&self) -> ComplexVector {
        let mut out = self.0.clone();
        for j in 0..self.dim() {
            out[2 * j] = -self.0[2 * j + 1];
            out[2 * j + 1] = self.0[2 * j];
        }
        ComplexVector(out)
    }

    pub fn scale(&self, s: f64) -> ComplexVector {
        ComplexVector(&self.0 * s)
    }

    /// Multiplies every entry by the unit complex number `e^{i·angle}`.
    pub fn rotate(&self, angle: f64) -> ComplexVector {
        self.mul_complex(Complex64::from_polar(1.0, angle))
    }

    pub fn mul_complex(&self, c: Complex64) -> ComplexVector {
        let entries: Vec<Complex64> = self.entries().into_iter().map(|e| c * e).collect();
        ComplexVector::from_complex(&entries)
    }

    /// Returns `self / ‖self‖`, or a domain error for the zero vector.
    pub fn normalized(&self) -> Result<ComplexVector> {
        let r = self.norm();
        if r == 0.0 || !r.is_finite() {
            return Err(Error::domain("cannot normalize a zero or non-finite vector"));
        }
        Ok(self.scale(1.0 / r))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }
}

impl fmt::Debug for ComplexVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.entries()).finish()
    }
}

/// Serialized as the flat list of interleaved real coordinates.
impl Serialize for ComplexVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.0.iter())
    }
}

impl<'de> Deserialize<'de> for ComplexVector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let reals = Vec::<f64>::deserialize(d)?;
        if reals.len() % 2 != 0 {
            return Err(serde::de::Error::custom(
                "a complex vector needs an even number of reals",
            ));
        }
        Ok(ComplexVector::from_reals(reals))
    }
}

impl Add for &ComplexVector {
    type Output = ComplexVector;
    fn add(self, rhs: &ComplexVector) -> ComplexVector {
        ComplexVector(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexVector {
    type Output = ComplexVector;
    fn sub(self, rhs: &ComplexVector) -> ComplexVector {
        ComplexVector(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexVector {
    type Output = ComplexVector;
    fn neg(self) -> ComplexVector {
        ComplexVector(-&self.0)
    }
}

impl Mul<&ComplexVector> for f64 {
    type Output = ComplexVector;
    fn mul(self, rhs: &ComplexVector) -> ComplexVector {
        rhs.scale(self)
    }
}

/// The real `2n × 2n` matrix of multiplication by `i`.
pub fn complex_structure(n: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// Real matrix of the diagonal unitary `zⱼ ↦ e^{i·anglesⱼ} zⱼ`.
pub fn diagonal_rotation_matrix(angles: &[f64]) -> DMatrix<f64> {
    let n = angles.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (k, &a) in angles.iter().enumerate() {
        let (s, c) = a.sin_cos();
        m[(2 * k, 2 * k)] = c;
        m[(2 * k, 2 * k + 1)] = -s;
        m[(2 * k + 1, 2 * k)] = s;
        m[(2 * k + 1, 2 * k + 1)] = c;
    }
    m
}

/// Free weighted `ℤ/kℤ` action `zⱼ ↦ e^{2iπ wⱼ/k} zⱼ` on `ℂⁿ`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LensSetting {
    n: usize,
    k: u32,
    weights: Vec<i64>,
}

impl LensSetting {
    /// Validates `k ≥ 2`, `n ≥ 1`, one weight per coordinate, and `gcd(wⱼ, k) = 1`.
    pub fn new(n: usize, k: u32, weights: Vec<i64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("complex dimension n must be at least 1"));
        }
        if k < 2 {
            return Err(Error::config(format!("group order k = {k} must be at least 2")));
        }
        if weights.len() != n {
            return Err(Error::config(format!("expected {n} weights, got {}", weights.len())));
        }
        for (j, &w) in weights.iter().enumerate() {
            if gcd(w.unsigned_abs(), k as u64) != 1 {
                return Err(Error::config(format!(
                    "weight w_{} = {w} is not coprime to k = {k}; the action would not be free",
                    j + 1
                )));
            }
        }
        Ok(LensSetting { n, k, weights })
    }

    /// Weights all equal to one.
    pub fn uniform(n: usize, k: u32) -> Result<Self> {
        Self::new(n, k, vec![1; n])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    /// Rotation angles of the `power`-th group element. Residues are reduced
    /// exactly before the conversion to radians, so full cycles give angle 0.
    pub fn angles(&self, power: i64) -> Vec<f64> {
        let k = self.k as i64;
        self.weights
            .iter()
            .map(|&w| {
                let r = (power.rem_euclid(k) * w.rem_euclid(k)).rem_euclid(k);
                2.0 * PI * r as f64 / k as f64
            })
            .collect()
    }

    /// Real matrix of the `power`-th group element.
    pub fn matrix(&self, power: i64) -> DMatrix<f64> {
        diagonal_rotation_matrix(&self.angles(power))
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// A direction tangent to the unit sphere at `base`.
#[derive(Clone, Debug)]
pub struct TangentVector {
    base: ComplexVector,
    direction: ComplexVector,
}

impl TangentVector {
    pub fn new(base: ComplexVector, direction: ComplexVector) -> Result<Self> {
        if base.dim() != direction.dim() {
            return Err(Error::domain("base and direction dimensions differ"));
        }
        if (base.norm() - 1.0).abs() > CONTACT_FORM_UNIT_TOL {
            return Err(Error::domain(format!(
                "base point has norm {} but must lie on the unit sphere",
                base.norm()
            )));
        }
        let radial = direction.dot(&base).abs();
        if radial > 1e-12 * direction.norm() {
            return Err(Error::domain(format!(
                "direction is not tangent: radial component {radial:e}"
            )));
        }
        Ok(TangentVector { base, direction })
    }

    pub fn base(&self) -> &ComplexVector {
        &self.base
    }

    pub fn direction(&self) -> &ComplexVector {
        &self.direction
    }
}

/// Evaluates `α = (1/2π) Σ (xⱼ dyⱼ − yⱼ dxⱼ)` at `at` on the tangent direction `v`.
pub fn contact_form(at: &ComplexVector, v: &ComplexVector) -> Result<f64> {
    let tangent = TangentVector::new(at.clone(), v.clone())?;
    Ok(contact_form_on(&tangent))
}

pub fn contact_form_on(v: &TangentVector) -> f64 {
    v.base.mul_i().dot(&v.direction) / (2.0 * PI)
}

/// Time-`t` Reeb flow `z ↦ e^{2iπt} z`.
pub fn reeb_flow(z: &ComplexVector, t: f64) -> ComplexVector {
    z.rotate(2.0 * PI * t)
}

/// Applies the `power`-th element of the lens action.
pub fn lens_apply(setting: &LensSetting, z: &ComplexVector, power: i64) -> ComplexVector {
    let angles = setting.angles(power);
    let entries: Vec<Complex64> = z
        .entries()
        .into_iter()
        .zip(angles)
        .map(|(e, a)| if a == 0.0 { e } else { e * Complex64::from_polar(1.0, a) })
        .collect();
    ComplexVector::from_complex(&entries)
}

fn check_unit(p: &ComplexVector, name: &str) -> Result<()> {
    let r = p.norm();
    if (r - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::domain(format!("{name} has norm {r}, expected a unit vector")));
    }
    Ok(())
}

/// `min_g ‖gp − q‖` over the `k` group elements.
pub fn orbit_distance(setting: &LensSetting, p: &ComplexVector, q: &ComplexVector) -> Result<f64> {
    check_unit(p, "p")?;
    check_unit(q, "q")?;
    Ok((0..setting.k() as i64)
        .map(|g| (&lens_apply(setting, p, g) - q).norm())
        .fold(f64::INFINITY, f64::min))
}

/// Lexicographically smallest image of `p` under the lens action, compared on
/// the interleaved real coordinates.
pub fn orbit_representative(setting: &LensSetting, p: &ComplexVector) -> ComplexVector {
    (0..setting.k() as i64)
        .map(|g| lens_apply(setting, p, g))
        .min_by(|a, b| lex_cmp(a.as_slice(), b.as_slice()))
        .expect("k >= 2")
}

pub(crate) fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    a.len().cmp(&b.len())
}

/// Distance in `ℝ/ℤ`.
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}
