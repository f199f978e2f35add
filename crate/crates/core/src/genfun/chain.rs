use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::geometry::{lens_apply, ComplexVector, LensSetting};

/// A point `(v_1, …, v_L)` of `(ℂⁿ)^L`, indexed cyclically (`v_{L+1} = v_1`).
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratingChain {
    blocks: Vec<ComplexVector>,
}

impl GeneratingChain {
    pub fn new(blocks: Vec<ComplexVector>) -> Result<Self> {
        let n = blocks
            .first()
            .map(ComplexVector::dim)
            .ok_or_else(|| Error::domain("a chain needs at least one block"))?;
        if let Some(bad) = blocks.iter().position(|b| b.dim() != n) {
            return Err(Error::domain(format!(
                "chain block {bad} has dimension {} instead of {n}",
                blocks[bad].dim()
            )));
        }
        Ok(GeneratingChain { blocks })
    }

    pub fn constant(z: &ComplexVector, len: usize) -> Self {
        GeneratingChain {
            blocks: vec![z.clone(); len],
        }
    }

    /// Inverse of [`GeneratingChain::flatten`].
    pub fn from_flat(n: usize, flat: &DVector<f64>) -> Result<Self> {
        if n == 0 || !flat.len().is_multiple_of(2 * n) || flat.is_empty() {
            return Err(Error::domain(format!(
                "a flat vector of length {} does not split into ℂ^{n} blocks",
                flat.len()
            )));
        }
        let blocks = flat
            .as_slice()
            .chunks(2 * n)
            .map(|c| ComplexVector::from_reals(c.to_vec()))
            .collect();
        Ok(GeneratingChain { blocks })
    }

    pub fn flatten(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.blocks.len() * 2 * self.n(),
            self.blocks.iter().flat_map(|b| b.as_slice().iter().copied()),
        )
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// Complex dimension of one block.
    pub fn n(&self) -> usize {
        self.blocks[0].dim()
    }

    pub fn blocks(&self) -> &[ComplexVector] {
        &self.blocks
    }

    /// Cyclic block access.
    pub fn block(&self, j: usize) -> &ComplexVector {
        &self.blocks[j % self.blocks.len()]
    }

    /// `(v_j + v_{j+1}) / 2`.
    pub fn midpoint(&self, j: usize) -> ComplexVector {
        (self.block(j) + self.block(j + 1)).scale(0.5)
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(ComplexVector::norm_squared).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        GeneratingChain {
            blocks: self.blocks.iter().map(|b| b.scale(s)).collect(),
        }
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::domain("cannot normalize a zero chain"));
        }
        Ok(self.scale(1.0 / norm))
    }

    /// The diagonal lens action on every block.
    pub fn lens_apply(&self, setting: &LensSetting, power: i64) -> Self {
        GeneratingChain {
            blocks: self.blocks.iter().map(|b| lens_apply(setting, b, power)).collect(),
        }
    }
}
