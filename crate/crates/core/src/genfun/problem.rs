use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::chain::GeneratingChain;
use super::elementary::{q_eval, rotation_gradient_factor, ElementaryGF};
use crate::dynamics::FactorList;
use crate::error::{Error, Result};
use crate::geometry::{complex_structure, ComplexVector, LensSetting};

/// Number of rotation blocks closing the chain.
pub const ROTATION_BLOCKS: usize = 7;

/// Open interval of admissible parameters `t`.
pub const T_DOMAIN: (f64, f64) = (-1.0, 3.0);

/// What [`GFProblem::evaluate`] should compute beyond value and gradient.
#[derive(Clone, Copy, Debug, Default)]
pub struct EvalRequest {
    pub hessian: bool,
    pub dgrad_dt: bool,
}

#[derive(Clone, Debug)]
pub struct GFEval {
    pub value: f64,
    /// Flattened gradient, same layout as [`GeneratingChain::flatten`].
    pub gradient: DVector<f64>,
    pub hessian: Option<DMatrix<f64>>,
    /// `∂_t ∇F_t`.
    pub dgrad_dt: Option<DVector<f64>>,
}

/// A critical chain projected back to `ℂⁿ`.
#[derive(Clone, Debug)]
pub struct ChainFixedPoint {
    pub point: ComplexVector,
    pub grad_norm: f64,
    /// `c` with `‖e^{−2iπt}Φ(v_1) − v_1‖ ≤ c‖∇F_t(v)‖`.
    pub bound_constant: f64,
    /// The measured `‖e^{−2iπt}Φ(v_1) − v_1‖`.
    pub closure_defect: f64,
}

/// `F_t` on `(ℂⁿ)^{m+7}` for a factorization `Φ = σ_m ∘ ⋯ ∘ σ_1`.
///
/// Blocks `0..m` carry the factors, blocks `m..m+7` the rotation
/// `δ_{t/7}: z ↦ e^{−2iπt/7} z`.
#[derive(Clone, Debug)]
pub struct GFProblem {
    factors: FactorList,
    gfs: Vec<ElementaryGF>,
}

struct BlockEval {
    gradient: ComplexVector,
    jacobian: Option<DMatrix<f64>>,
}

impl GFProblem {
    pub fn new(factors: FactorList) -> Result<Self> {
        if factors.is_empty() || !factors.len().is_multiple_of(2) {
            return Err(Error::domain(format!(
                "the factor count must be even and positive, got {}",
                factors.len()
            )));
        }
        let gfs = factors.sigmas().iter().cloned().map(ElementaryGF::new).collect();
        Ok(GFProblem { factors, gfs })
    }

    pub fn with_newton(mut self, tol: f64, max_iter: usize) -> Self {
        self.gfs = self.gfs.into_iter().map(|g| g.with_newton(tol, max_iter)).collect();
        self
    }

    pub fn factors(&self) -> &FactorList {
        &self.factors
    }

    pub fn setting(&self) -> &LensSetting {
        self.factors.setting()
    }

    pub fn n(&self) -> usize {
        self.setting().n()
    }

    /// Number of factor blocks `m`.
    pub fn m(&self) -> usize {
        self.gfs.len()
    }

    pub fn chain_len(&self) -> usize {
        self.m() + ROTATION_BLOCKS
    }

    /// Real dimension `2n(m+7)` of the chain space.
    pub fn dim(&self) -> usize {
        2 * self.n() * self.chain_len()
    }

    pub fn is_linear(&self) -> bool {
        self.factors.is_linear()
    }

    pub fn check_t(&self, t: f64) -> Result<()> {
        if t > T_DOMAIN.0 && t < T_DOMAIN.1 {
            Ok(())
        } else {
            Err(Error::domain(format!("t = {t} lies outside (−1, 3)")))
        }
    }

    fn check_chain(&self, chain: &GeneratingChain) -> Result<()> {
        if chain.len() != self.chain_len() || chain.n() != self.n() {
            return Err(Error::domain(format!(
                "expected a chain of {} blocks in ℂ^{}, got {} blocks in ℂ^{}",
                self.chain_len(),
                self.n(),
                chain.len(),
                chain.n()
            )));
        }
        Ok(())
    }

    fn block_evals(&self, t: f64, chain: &GeneratingChain, jac: bool) -> Result<Vec<BlockEval>> {
        let c = rotation_gradient_factor(t / ROTATION_BLOCKS as f64);
        let dim = 2 * self.n();
        (0..self.chain_len())
            .into_par_iter()
            .map(|j| {
                let w = chain.midpoint(j);
                if j < self.m() {
                    let e = self.gfs[j].evaluate(&w, jac)?;
                    Ok(BlockEval {
                        gradient: e.gradient,
                        jacobian: e.jacobian,
                    })
                } else {
                    Ok(BlockEval {
                        gradient: w.scale(c),
                        jacobian: jac.then(|| DMatrix::identity(dim, dim) * c),
                    })
                }
            })
            .collect()
    }

    /// `F_t(v)`, gradient, and optionally the Hessian and `∂_t∇F_t`.
    pub fn evaluate(&self, t: f64, chain: &GeneratingChain, req: EvalRequest) -> Result<GFEval> {
        self.check_t(t)?;
        self.check_chain(chain)?;
        let len = self.chain_len();
        let n = self.n();
        let bd = 2 * n;
        let blocks = self.block_evals(t, chain, req.hessian)?;

        let mut value = 0.0;
        let mut gradient = DVector::zeros(self.dim());
        for j in 0..len {
            let v = chain.block(j);
            let next = chain.block(j + 1);
            let prev = chain.block(j + len - 1);
            // Euler: f_j(w) = ½⟨G_j(w), w⟩.
            value += 0.5 * blocks[j].gradient.dot(&chain.midpoint(j));
            value += 0.5 * v.dot(&next.mul_i());
            let g = (&blocks[j].gradient + &blocks[(j + len - 1) % len].gradient).scale(0.5);
            let g = &g + &(next - prev).mul_i().scale(0.5);
            gradient.rows_mut(j * bd, bd).copy_from(g.as_dvector());
        }

        let hessian = req.hessian.then(|| {
            let jm = complex_structure(n) * 0.5;
            let mut h = DMatrix::zeros(self.dim(), self.dim());
            for (j, block) in blocks.iter().enumerate() {
                let dg = block.jacobian.as_ref().expect("requested") * 0.25;
                let k = (j + 1) % len;
                // Block j of F touches v_j and v_{j+1}, each with weight ½ in the midpoint.
                add_block(&mut h, j, j, bd, &dg);
                add_block(&mut h, k, k, bd, &dg);
                add_block(&mut h, j, k, bd, &(&dg + &jm));
                add_block(&mut h, k, j, bd, &(&dg - &jm));
            }
            h
        });

        let dgrad_dt = req.dgrad_dt.then(|| {
            let s = t / ROTATION_BLOCKS as f64;
            let dc = -2.0 * (PI / ROTATION_BLOCKS as f64) / (PI * s).cos().powi(2);
            let mut d = DVector::zeros(self.dim());
            for j in self.m()..len {
                let w = chain.midpoint(j).scale(0.5 * dc);
                let k = (j + 1) % len;
                for r in [j, k] {
                    let mut rows = d.rows_mut(r * bd, bd);
                    rows += w.as_dvector();
                }
            }
            d
        });

        Ok(GFEval {
            value,
            gradient,
            hessian,
            dgrad_dt,
        })
    }

    pub fn value(&self, t: f64, chain: &GeneratingChain) -> Result<f64> {
        Ok(self.evaluate(t, chain, EvalRequest::default())?.value)
    }

    pub fn gradient(&self, t: f64, chain: &GeneratingChain) -> Result<GeneratingChain> {
        let g = self.evaluate(t, chain, EvalRequest::default())?.gradient;
        GeneratingChain::from_flat(self.n(), &g)
    }

    pub fn hessian(&self, t: f64, chain: &GeneratingChain) -> Result<DMatrix<f64>> {
        let req = EvalRequest {
            hessian: true,
            dgrad_dt: false,
        };
        Ok(self.evaluate(t, chain, req)?.hessian.expect("requested"))
    }

    /// The broken trajectory through `z`: `v_{j+1} = σ_j(v_j)`, then six
    /// rotation steps. Also returns the closure defect `‖δ_{t/7}v_{m+7} − v_1‖`.
    pub fn chain_from_fixed_point(&self, t: f64, z: &ComplexVector) -> Result<(GeneratingChain, f64)> {
        self.check_t(t)?;
        if z.dim() != self.n() {
            return Err(Error::domain(format!("expected a point of ℂ^{}", self.n())));
        }
        if z.norm() == 0.0 {
            return Err(Error::domain("chains are built from nonzero points"));
        }
        let angle = -2.0 * PI * t / ROTATION_BLOCKS as f64;
        let mut blocks = Vec::with_capacity(self.chain_len());
        blocks.push(z.clone());
        for sigma in self.factors.sigmas() {
            let next = sigma.apply(blocks.last().expect("nonempty"))?;
            blocks.push(next);
        }
        for _ in 1..ROTATION_BLOCKS {
            let next = blocks.last().expect("nonempty").rotate(angle);
            blocks.push(next);
        }
        let defect = (&blocks.last().expect("nonempty").rotate(angle) - z).norm();
        Ok((GeneratingChain::new(blocks)?, defect))
    }

    /// Projects a near-critical chain to `v_1`.
    ///
    /// Writing `∇_jF = i(a_{j−1} + a_j)` with `a_j` the offset between `v_j`
    /// and the midpoint witness, the odd cycle length gives
    /// `‖a_j‖ ≤ ½√L‖∇F‖`; propagating through the factors gives `c`.
    pub fn fixed_point_from_chain(&self, t: f64, chain: &GeneratingChain, tol: f64) -> Result<ChainFixedPoint> {
        let grad = self.evaluate(t, chain, EvalRequest::default())?.gradient;
        let grad_norm = grad.norm();
        let scale = chain.norm();
        if grad_norm.is_nan() || grad_norm > tol * scale {
            return Err(Error::Contract(format!(
                "chain is not critical: ‖∇F_t‖ = {grad_norm:.3e} exceeds {tol:.1e}·‖v‖"
            )));
        }
        let point = chain.block(0).clone();
        let image = self.factors.apply(&point)?.rotate(-2.0 * PI * t);
        let closure_defect = (&image - &point).norm();
        Ok(ChainFixedPoint {
            point,
            grad_norm,
            bound_constant: self.bound_constant(),
            closure_defect,
        })
    }

    fn bound_constant(&self) -> f64 {
        let dev = if self.factors.achieved().is_nan() {
            self.factors.theta()
        } else {
            self.factors.achieved().max(self.factors.theta())
        };
        let len = self.chain_len();
        let lips: Vec<f64> = (0..len).map(|j| if j < self.m() { 1.0 + dev } else { 1.0 }).collect();
        let mut sum = 0.0;
        let mut tail = 1.0;
        for j in (0..len).rev() {
            sum += (1.0 + lips[j]) * tail;
            tail *= lips[j];
        }
        0.5 * (len as f64).sqrt() * sum
    }

    /// Relative `dG`-asymmetry of each factor, worst over `sample`.
    pub fn symmetry_residuals(&self, sample: &[ComplexVector]) -> Result<Vec<f64>> {
        self.gfs
            .par_iter()
            .map(|gf| {
                sample
                    .iter()
                    .try_fold(0.0f64, |worst, w| Ok(worst.max(gf.symmetry_residual(w)?)))
            })
            .collect()
    }
}

fn add_block(h: &mut DMatrix<f64>, r: usize, c: usize, bd: usize, m: &DMatrix<f64>) {
    let mut view = h.view_mut((r * bd, c * bd), (bd, bd));
    view += m;
}

/// `F_t(v)`.
pub fn assemble_f(problem: &GFProblem, t: f64, chain: &GeneratingChain) -> Result<f64> {
    problem.value(t, chain)
}

/// `∇F_t(v)` as a chain-shaped covector.
pub fn grad_f(problem: &GFProblem, t: f64, chain: &GeneratingChain) -> Result<GeneratingChain> {
    problem.gradient(t, chain)
}

/// `Hess F_t(v)`, a symmetric `2N × 2N` matrix.
pub fn hessian_f(problem: &GFProblem, t: f64, chain: &GeneratingChain) -> Result<DMatrix<f64>> {
    problem.hessian(t, chain)
}

/// `q_{t/7}` evaluated on all rotation midpoints; zero iff those midpoints vanish.
pub fn rotation_part(problem: &GFProblem, t: f64, chain: &GeneratingChain) -> Result<f64> {
    problem.check_t(t)?;
    (problem.m()..problem.chain_len()).try_fold(0.0, |acc, j| {
        Ok(acc + q_eval(t / ROTATION_BLOCKS as f64, &chain.midpoint(j))?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{build_lift, factorize, factorize_with, Factor, HamiltonianTerm, IsotopyStep};
    use crate::geometry::lens_apply;
    use crate::sampling::sphere_sample;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setting() -> LensSetting {
        LensSetting::uniform(2, 3).unwrap()
    }

    fn diagonal_problem() -> GFProblem {
        let map = build_lift(
            &setting(),
            &[IsotopyStep::new(HamiltonianTerm::diagonal(vec![0.15, 0.35]), 1.0)],
        )
        .unwrap();
        GFProblem::new(factorize(&map, 0.1).unwrap()).unwrap()
    }

    fn perturbed_problem() -> GFProblem {
        let map = build_lift(
            &setting(),
            &[
                IsotopyStep::new(HamiltonianTerm::diagonal(vec![0.15, 0.35]), 0.25),
                IsotopyStep::new(
                    HamiltonianTerm::resonant(0.05, Complex64::new(0.6, 0.8), vec![3, 0], vec![0, 0]),
                    0.1,
                ),
            ],
        )
        .unwrap();
        GFProblem::new(factorize_with(&map, 0.3, 16, 1).unwrap()).unwrap()
    }

    fn random_chain(p: &GFProblem, rng: &mut ChaCha8Rng) -> GeneratingChain {
        let flat = DVector::from_fn(p.dim(), |_, _| rng.gen_range(-1.0..1.0));
        GeneratingChain::from_flat(p.n(), &flat).unwrap()
    }

    fn fd_gradient(p: &GFProblem, t: f64, chain: &GeneratingChain, h: f64) -> DVector<f64> {
        let flat = chain.flatten();
        DVector::from_fn(flat.len(), |i, _| {
            let mut plus = flat.clone();
            let mut minus = flat.clone();
            plus[i] += h;
            minus[i] -= h;
            let fp = p.value(t, &GeneratingChain::from_flat(p.n(), &plus).unwrap()).unwrap();
            let fm = p.value(t, &GeneratingChain::from_flat(p.n(), &minus).unwrap()).unwrap();
            (fp - fm) / (2.0 * h)
        })
    }

    #[test]
    fn identity_factors_give_pure_coupling() {
        let p = GFProblem::new(FactorList::from_factors(setting(), vec![], 0.1)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_chain(&p, &mut rng);
        let coupling: f64 = (0..p.chain_len())
            .map(|j| 0.5 * c.block(j).dot(&c.block(j + 1).mul_i()))
            .sum();
        assert!((p.value(0.0, &c).unwrap() - coupling).abs() < 1e-14);
    }

    #[test]
    fn t_outside_domain_is_rejected() {
        let p = diagonal_problem();
        let c = GeneratingChain::constant(&ComplexVector::basis(2, 0), p.chain_len());
        assert!(p.value(3.0, &c).is_err());
        assert!(p.value(-1.0, &c).is_err());
        assert!(p.value(2.99, &c).is_ok());
    }

    #[test]
    fn homogeneous_and_lens_invariant() {
        let p = perturbed_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..3 {
            let c = random_chain(&p, &mut rng);
            let f = p.value(0.4, &c).unwrap();
            let f3 = p.value(0.4, &c.scale(3.0)).unwrap();
            assert!((f3 - 9.0 * f).abs() < 1e-9 * (1.0 + f.abs()) * 9.0);
            let fl = p.value(0.4, &c.lens_apply(p.setting(), 1)).unwrap();
            assert!((fl - f).abs() < 1e-10 * (1.0 + f.abs()));
        }
    }

    #[test]
    fn gradient_matches_finite_differences_and_euler() {
        for p in [diagonal_problem(), perturbed_problem()] {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let c = random_chain(&p, &mut rng);
            let e = p.evaluate(0.7, &c, EvalRequest::default()).unwrap();
            let fd = fd_gradient(&p, 0.7, &c, 1e-6);
            assert!((&fd - &e.gradient).norm() <= 1e-6 * e.gradient.norm());
            let euler = e.gradient.dot(&c.flatten());
            assert!((euler - 2.0 * e.value).abs() <= 1e-9 * (1.0 + e.value.abs()));
        }
    }

    #[test]
    fn hessian_is_symmetric_and_matches_gradient_differences() {
        let p = perturbed_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = random_chain(&p, &mut rng);
        let h = p.hessian(1.3, &c).unwrap();
        assert!((&h - h.transpose()).norm() <= 1e-6 * h.norm());
        let flat = c.flatten();
        let step = 1e-6;
        for col in [0, 5, p.dim() - 1] {
            let mut plus = flat.clone();
            let mut minus = flat.clone();
            plus[col] += step;
            minus[col] -= step;
            let gp = p.gradient(1.3, &GeneratingChain::from_flat(2, &plus).unwrap()).unwrap();
            let gm = p
                .gradient(1.3, &GeneratingChain::from_flat(2, &minus).unwrap())
                .unwrap();
            let fd = (gp.flatten() - gm.flatten()) / (2.0 * step);
            assert!((fd - h.column(col)).norm() < 1e-6 * h.norm());
        }
    }

    #[test]
    fn linear_hessian_is_constant() {
        let p = diagonal_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let h1 = p.hessian(0.3, &random_chain(&p, &mut rng)).unwrap();
        let h2 = p.hessian(0.3, &random_chain(&p, &mut rng)).unwrap();
        assert!((&h1 - &h2).norm() < 1e-10 * h1.norm());
        let c = random_chain(&p, &mut rng);
        let flat = c.flatten();
        let quad = 0.5 * flat.dot(&(&h1 * &flat));
        assert!((quad - p.value(0.3, &c).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn t_derivative_matches_finite_differences() {
        let p = perturbed_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let c = random_chain(&p, &mut rng);
        let req = EvalRequest {
            hessian: false,
            dgrad_dt: true,
        };
        let d = p.evaluate(0.9, &c, req).unwrap().dgrad_dt.unwrap();
        let h = 1e-6;
        let fd = (p.gradient(0.9 + h, &c).unwrap().flatten() - p.gradient(0.9 - h, &c).unwrap().flatten()) / (2.0 * h);
        assert!((fd - &d).norm() < 1e-6 * d.norm());
    }

    #[test]
    fn decreasing_in_t() {
        let p = perturbed_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let c = random_chain(&p, &mut rng);
        let mut last = f64::INFINITY;
        for t in [-0.9, -0.2, 0.0, 0.5, 1.7, 2.9] {
            let f = p.value(t, &c).unwrap();
            assert!(f < last);
            last = f;
        }
        // Vanishing rotation midpoints make F_t independent of t: alternate
        // signs along the seven rotation edges, which end at v_1.
        let mut blocks = c.blocks().to_vec();
        let m = p.m();
        let x = c.block(m).clone();
        for j in 0..ROTATION_BLOCKS {
            blocks[m + j] = if j % 2 == 0 { x.clone() } else { -&x };
        }
        blocks[0] = -&x;
        let alt = GeneratingChain::new(blocks).unwrap();
        assert!((m..p.chain_len()).all(|j| alt.midpoint(j).norm() == 0.0));
        assert!((p.value(0.1, &alt).unwrap() - p.value(2.0, &alt).unwrap()).abs() < 1e-12);
        assert_eq!(rotation_part(&p, 1.0, &alt).unwrap(), 0.0);
    }

    #[test]
    fn chain_of_an_eigenvector_is_critical() {
        let p = diagonal_problem();
        let e1 = ComplexVector::basis(2, 0);
        let (chain, defect) = p.chain_from_fixed_point(0.15, &e1).unwrap();
        assert!(defect <= 1e-12);
        assert!(p.gradient(0.15, &chain).unwrap().norm() <= 1e-10);
        let fp = p.fixed_point_from_chain(0.15, &chain, 1e-8).unwrap();
        assert_eq!(fp.point, e1);
        assert!(fp.closure_defect <= fp.bound_constant * fp.grad_norm + 1e-12);
        assert!(p.value(0.15, &chain).unwrap().abs() <= 1e-9 * chain.norm().powi(2));

        let (chain, defect) = p.chain_from_fixed_point(0.2, &e1).unwrap();
        let expected = (Complex64::from_polar(1.0, -2.0 * PI * 0.05) - 1.0).norm();
        assert!((defect - expected).abs() < 1e-12);
        let err = p.fixed_point_from_chain(0.2, &chain, 1e-8).unwrap_err();
        assert!(matches!(err, Error::Contract(_)));
    }

    #[test]
    fn identity_chain_is_constant() {
        let p = GFProblem::new(FactorList::from_factors(setting(), vec![Factor::Identity; 4], 0.1)).unwrap();
        let z = sphere_sample(2, 1, 0).remove(0);
        let (chain, defect) = p.chain_from_fixed_point(0.0, &z).unwrap();
        assert_eq!(defect, 0.0);
        assert!(chain.blocks().iter().all(|b| b == &z));
    }

    #[test]
    fn bound_constant_controls_the_closure_defect() {
        // Slightly perturb a critical chain of the nonlinear problem and check
        // the reported inequality.
        let p = perturbed_problem();
        let z = lens_apply(p.setting(), &sphere_sample(2, 1, 9).remove(0), 0);
        let (chain, _) = p.chain_from_fixed_point(0.0, &z).unwrap();
        let g = p.gradient(0.0, &chain).unwrap();
        let fp = p.fixed_point_from_chain(0.0, &chain, 10.0).unwrap();
        assert!((fp.grad_norm - g.norm()).abs() < 1e-12);
        assert!(fp.closure_defect <= fp.bound_constant * fp.grad_norm);
    }
}
