use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fft::UniformGrid;
use crate::trig::{RealTerm, TrigPoly};

/// Fiber rotation `τ: T^d → R^ℓ`, one real trigonometric polynomial per component.
#[derive(Clone, Debug)]
pub struct FiberRotation {
    base_dim: usize,
    components: Vec<TrigPoly>,
    dtau_sup: f64,
    dtau_grid_max: f64,
    dtau_coeff_bound: f64,
}

impl FiberRotation {
    pub fn new(base_dim: usize, components: Vec<TrigPoly>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("fiber dimension must be positive".into()));
        }
        for (i, c) in components.iter().enumerate() {
            if c.dim() != base_dim {
                return Err(Error::InvalidInput(format!(
                    "component {i} lives on T^{}, expected T^{base_dim}",
                    c.dim()
                )));
            }
            if !c.is_hermitian(1e-12) {
                return Err(Error::InvalidInput(format!(
                    "component {i} is not real-valued (coefficients not Hermitian)"
                )));
            }
        }
        let mut rot = FiberRotation {
            base_dim,
            components,
            dtau_sup: 0.0,
            dtau_grid_max: 0.0,
            dtau_coeff_bound: 0.0,
        };
        rot.audit_derivative();
        Ok(rot)
    }

    pub fn scalar(p: TrigPoly) -> Result<Self> {
        Self::new(p.dim(), vec![p])
    }

    pub fn from_real_terms(base_dim: usize, components: &[Vec<RealTerm>]) -> Result<Self> {
        Self::new(
            base_dim,
            components
                .iter()
                .map(|terms| TrigPoly::from_real_terms(base_dim, terms))
                .collect(),
        )
    }

    fn audit_derivative(&mut self) {
        let d = self.base_dim;
        let n = match d {
            1 => 4096,
            2 => 128,
            3 => 24,
            _ => 8,
        };
        let grid = UniformGrid::new(d, n);
        let mut grid_max = 0.0f64;
        for i in 0..grid.len() {
            let x = grid.point(i);
            grid_max = grid_max.max(operator_norm(&self.jacobian(&x)));
        }
        let coeff_bound = self
            .components
            .iter()
            .map(|c| c.gradient_bound().powi(2))
            .sum::<f64>()
            .sqrt();
        let hess = self
            .components
            .iter()
            .map(|c| c.hessian_bound().powi(2))
            .sum::<f64>()
            .sqrt();
        let half_diag = 0.5 * (d as f64).sqrt() / n as f64;
        self.dtau_grid_max = grid_max;
        self.dtau_coeff_bound = coeff_bound;
        self.dtau_sup = (grid_max + hess * half_diag).min(coeff_bound).max(grid_max);
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[TrigPoly] {
        &self.components
    }

    /// Upper bound on `sup_x ‖D_xτ‖`.
    pub fn dtau_sup(&self) -> f64 {
        self.dtau_sup
    }

    pub fn dtau_grid_max(&self) -> f64 {
        self.dtau_grid_max
    }

    pub fn dtau_coeff_bound(&self) -> f64 {
        self.dtau_coeff_bound
    }

    pub fn max_freq(&self) -> i64 {
        self.components.iter().map(TrigPoly::max_freq).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.components.iter().map(|c| c.eval_re(x)).collect()
    }

    /// `ℓ × d` matrix `D_xτ`.
    pub fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.fiber_dim(), self.base_dim);
        for (i, c) in self.components.iter().enumerate() {
            for (j, g) in c.gradient(x).into_iter().enumerate() {
                m[(i, j)] = g;
            }
        }
        m
    }

    /// `(D_xτ)^t n`, a covector on the base.
    pub fn pullback(&self, dir: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.base_dim];
        for (c, &w) in self.components.iter().zip(dir) {
            if w == 0.0 {
                continue;
            }
            for (o, g) in out.iter_mut().zip(c.gradient(x)) {
                *o += w * g;
            }
        }
        out
    }

    pub fn dot(&self, v: &[f64], x: &[f64]) -> f64 {
        self.components
            .iter()
            .zip(v)
            .map(|(c, &w)| w * c.eval_re(x))
            .sum()
    }

    /// `v·τ` as one trigonometric polynomial.
    pub fn project(&self, v: &[f64]) -> TrigPoly {
        self.components
            .iter()
            .zip(v)
            .fold(TrigPoly::zero(self.base_dim), |acc, (c, &w)| acc.add(&c.scale(w)))
    }
}

pub(crate) fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 1 || m.ncols() == 1 {
        m.norm()
    } else {
        m.clone().singular_values().max()
    }
}
