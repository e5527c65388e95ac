//! Expanding endomorphisms of `T^d` with exact inverse-branch enumeration.
//!
//! Two families are supported: linear toral endomorphisms `x ↦ Ax mod 1`
//! for integer matrices with all eigenvalues outside the unit circle, and
//! perturbed multiplication maps `x ↦ N₀x + p(x) mod 1` on the circle.
//! Inverse branches are labelled `0..N`; for linear maps the label order is
//! the lexicographic order of the branch offsets `A^{-1}k mod 1`.

mod orbits;
mod rotation;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, Error, Result};
use crate::trig::TrigPoly;

pub use orbits::PeriodicOrbit;
pub use rotation::FiberRotation;

/// Default cap on the number of leaves of a preimage tree.
pub const DEFAULT_BUDGET: u128 = 1 << 20;

const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 100;
const PERTURBED_AUDIT_GRID: usize = 8192;

#[derive(Clone, Debug, PartialEq)]
pub enum MapKind {
    LinearToral { matrix: Vec<Vec<i64>> },
    PerturbedDoubling1D { base: u32, perturbation: TrigPoly },
}

/// Finite word `(i_1, …, i_n)` selecting `T_{i_n}^{-1} ∘ … ∘ T_{i_1}^{-1}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct PreimageWord(pub Vec<usize>);

impl PreimageWord {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn extended(&self, j: usize) -> PreimageWord {
        let mut w = self.0.clone();
        w.push(j);
        PreimageWord(w)
    }
}

#[derive(Clone, Debug)]
pub struct ExpandingMap {
    dim: usize,
    kind: MapKind,
    degree: usize,
    gamma: f64,
    dt_sup: f64,
    budget: u128,
    linear: Option<LinearData>,
}

#[derive(Clone, Debug)]
struct LinearData {
    matrix_f: DMatrix<f64>,
    inverse: DMatrix<f64>,
    // Branch offsets A^{-1}k mod 1, sorted lexicographically.
    offsets: Vec<Vec<f64>>,
}

impl ExpandingMap {
    /// `x ↦ Ax mod 1`. Rejects matrices with an eigenvalue in the closed unit
    /// disc or whose smallest singular value is not above one.
    pub fn linear(matrix: Vec<Vec<i64>>) -> Result<Self> {
        let d = matrix.len();
        if d == 0 || matrix.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidInput("matrix must be square and non-empty".into()));
        }
        let det = int_det(&matrix);
        if det == 0 {
            return Err(Error::InvalidInput("matrix is singular".into()));
        }
        let a = DMatrix::from_fn(d, d, |i, j| matrix[i][j] as f64);
        let eig = a.complex_eigenvalues();
        if let Some(bad) = eig.iter().find(|z| z.norm() <= 1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "matrix is not expanding: eigenvalue {bad} has modulus {:.6} <= 1",
                bad.norm()
            )));
        }
        let sv = a.clone().singular_values();
        let gamma = sv.min();
        let dt_sup = sv.max();
        if gamma <= 1.0 {
            return Err(Error::InvalidInput(format!(
                "matrix is not expanding in the Euclidean metric: smallest singular value {gamma:.6}"
            )));
        }
        let degree = det.unsigned_abs() as usize;
        check_budget(
            (degree as u128).saturating_pow(d as u32),
            DEFAULT_BUDGET,
        )?;
        let inverse = a
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("matrix is not invertible".into()))?;
        let offsets = linear_offsets(&inverse, degree, d);
        debug_assert_eq!(offsets.len(), degree);
        Ok(ExpandingMap {
            dim: d,
            kind: MapKind::LinearToral { matrix },
            degree,
            gamma,
            dt_sup,
            budget: DEFAULT_BUDGET,
            linear: Some(LinearData {
                matrix_f: a,
                inverse,
                offsets,
            }),
        })
    }

    pub fn doubling() -> Self {
        Self::linear(vec![vec![2]]).expect("doubling map is expanding")
    }

    /// `x ↦ N₀x + p(x) mod 1` with `‖p′‖_∞ < (N₀ − 1)/2`.
    pub fn perturbed(base: u32, perturbation: TrigPoly) -> Result<Self> {
        if base < 2 {
            return Err(Error::InvalidInput("base multiplier must be at least 2".into()));
        }
        if perturbation.dim() != 1 {
            return Err(Error::InvalidInput("perturbation must live on the circle".into()));
        }
        if !perturbation.is_hermitian(1e-12) {
            return Err(Error::InvalidInput("perturbation must be real-valued".into()));
        }
        let n0 = base as f64;
        let h = 1.0 / PERTURBED_AUDIT_GRID as f64;
        let lip = perturbation.hessian_bound() * h / 2.0;
        let (mut dp_max, mut slope_min) = (0.0f64, f64::INFINITY);
        for i in 0..PERTURBED_AUDIT_GRID {
            let dp = perturbation.gradient(&[i as f64 * h])[0];
            dp_max = dp_max.max(dp.abs());
            slope_min = slope_min.min((n0 + dp).abs());
        }
        let dp_sup = (dp_max + lip).min(perturbation.gradient_bound());
        if dp_sup >= (n0 - 1.0) / 2.0 {
            return Err(Error::InvalidInput(format!(
                "perturbation too large: sup|p'| <= {dp_sup:.6} must stay below {}",
                (n0 - 1.0) / 2.0
            )));
        }
        let gamma = (n0 - dp_sup).max(slope_min - lip);
        Ok(ExpandingMap {
            dim: 1,
            kind: MapKind::PerturbedDoubling1D { base, perturbation },
            degree: base as usize,
            gamma,
            dt_sup: n0 + dp_sup,
            budget: DEFAULT_BUDGET,
            linear: None,
        })
    }

    pub fn with_budget(mut self, budget: u128) -> Self {
        self.budget = budget;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Lower bound on `|D_xT v|` over unit vectors.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Upper bound on the operator norm of `D_xT`.
    pub fn dt_sup(&self) -> f64 {
        self.dt_sup
    }

    pub fn budget(&self) -> u128 {
        self.budget
    }

    pub fn is_linear(&self) -> bool {
        self.linear.is_some()
    }

    /// Integer matrix of a linear map.
    pub fn matrix(&self) -> Option<&[Vec<i64>]> {
        match &self.kind {
            MapKind::LinearToral { matrix } => Some(matrix),
            _ => None,
        }
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.eval_lift(x);
        y.iter_mut().for_each(|v| *v = wrap(*v));
        y
    }

    /// Lift of `T` to `R^d` (no reduction mod 1).
    pub fn eval_lift(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            MapKind::LinearToral { matrix } => matrix
                .iter()
                .map(|row| row.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum())
                .collect(),
            MapKind::PerturbedDoubling1D { base, perturbation } => {
                vec![*base as f64 * x[0] + perturbation.eval_re(&x[..1])]
            }
        }
    }

    pub fn iterate(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut y = x.to_vec();
        for _ in 0..n {
            y = self.eval(&y);
        }
        y
    }

    pub fn derivative(&self, x: &[f64]) -> DMatrix<f64> {
        match (&self.kind, &self.linear) {
            (_, Some(lin)) => lin.matrix_f.clone(),
            (MapKind::PerturbedDoubling1D { base, perturbation }, None) => {
                DMatrix::from_element(1, 1, *base as f64 + perturbation.gradient(&x[..1])[0])
            }
            _ => unreachable!("linear maps carry their matrix"),
        }
    }

    /// `|det D_xT|`.
    pub fn jacobian(&self, x: &[f64]) -> f64 {
        match &self.kind {
            MapKind::LinearToral { .. } => self.degree as f64,
            MapKind::PerturbedDoubling1D { base, perturbation } => {
                (*base as f64 + perturbation.gradient(&x[..1])[0]).abs()
            }
        }
    }

    /// Lift of inverse branch `j`: a point `y ∈ R^d` with `T̃(y) ≡ x` whose
    /// lifted image differs from `x` by an integer vector.
    pub fn inverse_branch_lift(&self, x: &[f64], j: usize) -> Result<Vec<f64>> {
        assert!(j < self.degree, "branch label out of range");
        match (&self.kind, &self.linear) {
            (_, Some(lin)) => {
                let d = self.dim;
                Ok((0..d)
                    .map(|r| {
                        (0..d).map(|c| lin.inverse[(r, c)] * x[c]).sum::<f64>() + lin.offsets[j][r]
                    })
                    .collect())
            }
            (MapKind::PerturbedDoubling1D { base, perturbation }, None) => {
                Ok(vec![newton_branch(*base as f64, perturbation, x[0] + j as f64)?])
            }
            _ => unreachable!(),
        }
    }

    pub fn inverse_branch(&self, x: &[f64], j: usize) -> Result<Vec<f64>> {
        let mut y = self.inverse_branch_lift(x, j)?;
        y.iter_mut().for_each(|v| *v = wrap(*v));
        Ok(y)
    }

    /// All `N` preimages of `x`, ordered by branch label.
    pub fn inverse_branches(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        (0..self.degree).map(|j| self.inverse_branch(x, j)).collect()
    }

    pub fn tree_size(&self, n: usize) -> u128 {
        (self.degree as u128).saturating_pow(n as u32)
    }

    /// All `N^n` preimages of `x` under `T^n`, indexed by words in
    /// lexicographic order.
    pub fn preimage_tree(&self, x: &[f64], n: usize) -> Result<Vec<(PreimageWord, Vec<f64>)>> {
        check_budget(self.tree_size(n), self.budget)?;
        let mut level = vec![(PreimageWord::default(), x.to_vec())];
        for _ in 0..n {
            let mut next = Vec::with_capacity(level.len() * self.degree);
            for (w, p) in &level {
                for j in 0..self.degree {
                    next.push((w.extended(j), self.inverse_branch(p, j)?));
                }
            }
            level = next;
        }
        Ok(level)
    }

    /// Point selected by a word: `T_{i_n}^{-1} ∘ … ∘ T_{i_1}^{-1} x`.
    pub fn follow_word(&self, x: &[f64], word: &PreimageWord) -> Result<Vec<f64>> {
        let mut p = x.to_vec();
        for &j in &word.0 {
            p = self.inverse_branch(&p, j)?;
        }
        Ok(p)
    }

    /// `u ∘ T` as a trigonometric polynomial; only available for linear maps.
    pub fn compose(&self, u: &TrigPoly) -> Option<TrigPoly> {
        self.matrix().map(|m| u.compose_linear(m))
    }
}

/// `x - floor(x)`, folded into `[0, 1)`.
pub fn wrap(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Euclidean distance on the flat torus.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let t = wrap(p - q);
            let t = t.min(1.0 - t);
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

fn newton_branch(n0: f64, p: &TrigPoly, target: f64) -> Result<f64> {
    let residual = |y: f64| n0 * y + p.eval_re(&[y]) - target;
    let mut y = target / n0;
    let mut r = residual(y);
    let mut iterations = 0;
    while r.abs() > NEWTON_TOL {
        if iterations == NEWTON_MAX_ITER {
            return Err(Error::NewtonDivergence {
                target,
                residual: r.abs(),
                iterations,
            });
        }
        let slope = n0 + p.gradient(&[y])[0];
        let mut step = r / slope;
        let mut trial = y - step;
        let mut r_trial = residual(trial);
        let mut halvings = 0;
        while r_trial.abs() > r.abs() && halvings < 30 {
            step *= 0.5;
            trial = y - step;
            r_trial = residual(trial);
            halvings += 1;
        }
        y = trial;
        r = r_trial;
        iterations += 1;
    }
    // one more step to land at machine precision
    let slope = n0 + p.gradient(&[y])[0];
    let polished = y - r / slope;
    if residual(polished).abs() <= r.abs() {
        y = polished;
    }
    Ok(y)
}

fn linear_offsets(inverse: &DMatrix<f64>, degree: usize, d: usize) -> Vec<Vec<f64>> {
    // A^{-1}Z^d / Z^d ⊂ (1/N)Z^d / Z^d; each class is labelled by its integer key.
    let mut keys: Vec<Vec<i64>> = Vec::with_capacity(degree);
    let total = degree.pow(d as u32);
    for flat in 0..total {
        let mut k = vec![0i64; d];
        let mut rem = flat;
        for slot in k.iter_mut().rev() {
            *slot = (rem % degree) as i64;
            rem /= degree;
        }
        let key: Vec<i64> = (0..d)
            .map(|r| {
                let v: f64 = (0..d).map(|c| inverse[(r, c)] * k[c] as f64).sum();
                ((v * degree as f64).round() as i64).rem_euclid(degree as i64)
            })
            .collect();
        if !keys.contains(&key) {
            keys.push(key);
            if keys.len() == degree {
                break;
            }
        }
    }
    keys.sort();
    keys.into_iter()
        .map(|key| key.into_iter().map(|v| v as f64 / degree as f64).collect())
        .collect()
}

fn int_det(m: &[Vec<i64>]) -> i64 {
    // Bareiss fraction-free elimination.
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n.saturating_sub(1) {
        if a[k][k] == 0 {
            match (k + 1..n).find(|&i| a[i][k] != 0) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    (sign * a[n - 1][n - 1]) as i64
}
