use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) fn is_prime(p: u32) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

/// Checks that `F_p[α, β]/(α², β^N)` is a ring this module handles.
pub fn check_ring(p: u32, big_n: usize) -> Result<()> {
    if p == 2 {
        return Err(Error::Unsupported(
            "p = 2 is not supported: the mod-2 lens ring has α² = β".into(),
        ));
    }
    if !is_prime(p) {
        return Err(Error::domain(format!("p = {p} is not a prime")));
    }
    if big_n == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    Ok(())
}

/// A monomial `c·α^ε·β^e` of `H*(L_p^{2N−1}; F_p) = F_p[α, β]/(α², β^N)`,
/// `deg α = 1`, `deg β = 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingClass {
    p: u32,
    big_n: usize,
    coeff: u32,
    epsilon: u8,
    e: usize,
}

impl RingClass {
    /// `c·α^ε·β^e`; reduces to zero when the ring relations kill it.
    pub fn monomial(p: u32, big_n: usize, coeff: i64, epsilon: u8, e: usize) -> Result<Self> {
        check_ring(p, big_n)?;
        let coeff = coeff.rem_euclid(p as i64) as u32;
        let mut c = RingClass {
            p,
            big_n,
            coeff,
            epsilon: epsilon.min(2),
            e,
        };
        if epsilon > 1 || e >= big_n {
            c.coeff = 0;
        }
        Ok(c.normalize())
    }

    pub fn one(p: u32, big_n: usize) -> Result<Self> {
        Self::monomial(p, big_n, 1, 0, 0)
    }

    pub fn alpha(p: u32, big_n: usize) -> Result<Self> {
        Self::monomial(p, big_n, 1, 1, 0)
    }

    pub fn beta(p: u32, big_n: usize) -> Result<Self> {
        Self::monomial(p, big_n, 1, 0, 1)
    }

    pub fn zero(p: u32, big_n: usize) -> Result<Self> {
        Self::monomial(p, big_n, 0, 0, 0)
    }

    /// All nonzero monomials with coefficient 1, by increasing degree.
    pub fn basis(p: u32, big_n: usize) -> Result<Vec<Self>> {
        check_ring(p, big_n)?;
        Ok((0..2 * big_n)
            .map(|d| RingClass {
                p,
                big_n,
                coeff: 1,
                epsilon: (d % 2) as u8,
                e: d / 2,
            })
            .collect())
    }

    fn normalize(mut self) -> Self {
        if self.coeff == 0 {
            self.epsilon = 0;
            self.e = 0;
        }
        self
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn big_n(&self) -> usize {
        self.big_n
    }

    pub fn coeff(&self) -> u32 {
        self.coeff
    }

    pub fn epsilon(&self) -> u8 {
        self.epsilon
    }

    pub fn e(&self) -> usize {
        self.e
    }

    pub fn is_zero(&self) -> bool {
        self.coeff == 0
    }

    /// `ε + 2e`; zero for the zero class.
    pub fn degree(&self) -> usize {
        self.epsilon as usize + 2 * self.e
    }

    fn same_ring(&self, other: &RingClass) -> Result<()> {
        if self.p != other.p || self.big_n != other.big_n {
            return Err(Error::domain(format!(
                "classes of different rings: (p, N) = ({}, {}) vs ({}, {})",
                self.p, self.big_n, other.p, other.big_n
            )));
        }
        Ok(())
    }
}

impl fmt::Display for RingClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut parts = Vec::new();
        if self.coeff != 1 || (self.epsilon == 0 && self.e == 0) {
            parts.push(self.coeff.to_string());
        }
        if self.epsilon == 1 {
            parts.push("α".into());
        }
        match self.e {
            0 => {}
            1 => parts.push("β".into()),
            e => parts.push(format!("β^{e}")),
        }
        write!(f, "{}", parts.join("·"))
    }
}

/// Cup product. Graded commutativity costs no sign here: a nonzero product
/// has at most one α.
pub fn class_mul(u: &RingClass, v: &RingClass) -> Result<RingClass> {
    u.same_ring(v)?;
    if u.is_zero() || v.is_zero() {
        return RingClass::zero(u.p, u.big_n);
    }
    let coeff = (u.coeff as u64 * v.coeff as u64 % u.p as u64) as i64;
    RingClass::monomial(u.p, u.big_n, coeff, u.epsilon + v.epsilon, u.e + v.e)
}

/// `𝓑(c·αβ^e) = c·β^{e+1}`, `𝓑(c·β^e) = 0`.
pub fn bockstein(u: &RingClass) -> RingClass {
    if u.is_zero() || u.epsilon == 0 {
        return RingClass::zero(u.p, u.big_n).expect("ring already checked");
    }
    RingClass::monomial(u.p, u.big_n, u.coeff as i64, 0, u.e + 1).expect("ring already checked")
}

/// Certified lower bound `ε + 2e` on the category weight: each α weighs at
/// least 1 and each `β = 𝓑α` at least 2.
pub fn cwgt_lower(u: &RingClass) -> Result<usize> {
    if u.is_zero() {
        return Err(Error::domain("the zero class has no category weight"));
    }
    Ok(u.epsilon as usize + 2 * u.e)
}

/// A general element: one coefficient per degree `0..2N` (the ring has rank
/// one in each degree).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RingElement {
    p: u32,
    big_n: usize,
    coeffs: Vec<u32>,
}

impl RingElement {
    pub fn zero(p: u32, big_n: usize) -> Result<Self> {
        check_ring(p, big_n)?;
        Ok(RingElement {
            p,
            big_n,
            coeffs: vec![0; 2 * big_n],
        })
    }

    pub fn coeffs(&self) -> &[u32] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    /// Monomial terms with nonzero coefficient.
    pub fn terms(&self) -> Vec<RingClass> {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0)
            .map(|(d, &c)| {
                RingClass::monomial(self.p, self.big_n, c as i64, (d % 2) as u8, d / 2).expect("ring already checked")
            })
            .collect()
    }

    pub fn add(&self, other: &RingElement) -> Result<RingElement> {
        self.same_ring(other)?;
        Ok(RingElement {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| (a + b) % self.p)
                .collect(),
            ..self.clone()
        })
    }

    pub fn scale(&self, c: i64) -> RingElement {
        let c = c.rem_euclid(self.p as i64) as u64;
        RingElement {
            coeffs: self
                .coeffs
                .iter()
                .map(|&a| (a as u64 * c % self.p as u64) as u32)
                .collect(),
            ..self.clone()
        }
    }

    pub fn mul(&self, other: &RingElement) -> Result<RingElement> {
        self.same_ring(other)?;
        let mut out = RingElement::zero(self.p, self.big_n)?;
        for u in self.terms() {
            for v in other.terms() {
                out = out.add(&class_mul(&u, &v)?.into())?;
            }
        }
        Ok(out)
    }

    pub fn bockstein(&self) -> RingElement {
        self.terms().iter().map(|u| RingElement::from(bockstein(u))).fold(
            RingElement::zero(self.p, self.big_n).expect("ring already checked"),
            |acc, x| acc.add(&x).expect("same ring"),
        )
    }

    fn same_ring(&self, other: &RingElement) -> Result<()> {
        if self.p != other.p || self.big_n != other.big_n {
            return Err(Error::domain("elements of different rings"));
        }
        Ok(())
    }
}

impl From<RingClass> for RingElement {
    fn from(u: RingClass) -> Self {
        let mut coeffs = vec![0; 2 * u.big_n];
        if !u.is_zero() {
            coeffs[u.degree()] = u.coeff;
        }
        RingElement {
            p: u.p,
            big_n: u.big_n,
            coeffs,
        }
    }
}
