//! The smooth invariant density `h` of an expanding map and the preimage
//! weights `A_n(y) = h(y) / (|Jac T^n(y)| h(T^n y))`.
//!
//! For linear toral maps Lebesgue measure is invariant and `h ≡ 1`. For the
//! perturbed circle maps `h` is found by power iteration of the transfer
//! operator on a uniform grid, with off-grid values obtained from the
//! trigonometric interpolant of the previous iterate.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fft::{interpolant_real, next_pow2, UniformGrid};
use crate::maps::ExpandingMap;
use crate::trig::TrigPoly;

pub const DEFAULT_K_H: usize = 64;
pub const DEFAULT_TOL: f64 = 1e-13;
const MAX_ITER: usize = 10_000;
const AUDIT_GRID: usize = 2048;
/// Beyond this depth Jacobians are multiplied in log space.
const LOG_SPACE_DEPTH: usize = 20;

/// Samples of a real function on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridFn {
    pub grid: UniformGrid,
    pub values: Vec<f64>,
}

impl GridFn {
    pub fn new(grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "grid has {} points but {} values were given",
                grid.len(),
                values.len()
            )));
        }
        Ok(GridFn { grid, values })
    }

    pub fn sample(grid: UniformGrid, f: impl Fn(&[f64]) -> f64 + Sync) -> Self {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|i| f(&grid.point(i)))
            .collect();
        GridFn { grid, values }
    }

    pub fn constant(grid: UniformGrid, c: f64) -> Self {
        GridFn { grid, values: vec![c; grid.len()] }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_distance(&self, other: &GridFn) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `(F̂′₀ f)(x) = Σ_{Ty=x} f(y)/|Jac T(y)|` at every grid point.
pub fn transfer_apply(map: &ExpandingMap, f: &GridFn) -> Result<GridFn> {
    let grid = f.grid;
    if grid.dim != map.dim() {
        return Err(Error::InvalidInput("grid dimension does not match the map".into()));
    }
    if !grid.n.is_power_of_two() || grid.n < 4 * map.degree() {
        return Err(Error::InvalidInput(format!(
            "transfer grid must be a power of two with at least {} points per axis, got {}",
            4 * map.degree(),
            grid.n
        )));
    }
    let interp = interpolant_real(grid, &f.values);
    let values = (0..grid.len())
        .into_par_iter()
        .map(|i| transfer_at(map, |y| interp.eval_re(y), &grid.point(i)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(GridFn { grid, values })
}

fn transfer_at(map: &ExpandingMap, f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for y in map.inverse_branches(x)? {
        acc += f(&y) / map.jacobian(&y);
    }
    Ok(acc)
}

/// Fourier model of the invariant density.
#[derive(Clone, Debug, Serialize)]
pub struct DensityModel {
    pub coefficients: TrigPoly,
    pub k_h: usize,
    pub mean: f64,
    /// Minimum of `h` on the audit grid.
    pub positivity_margin: f64,
    /// `sup |F̂′₀h − h|` on the audit grid.
    pub residual: f64,
    pub iterations: usize,
}

impl DensityModel {
    /// Lebesgue density on `T^d`.
    pub fn lebesgue(dim: usize) -> Self {
        DensityModel {
            coefficients: TrigPoly::constant(dim, 1.0),
            k_h: 0,
            mean: 1.0,
            positivity_margin: 1.0,
            residual: 0.0,
            iterations: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coefficients.dim()
    }

    pub fn is_lebesgue(&self) -> bool {
        self.k_h == 0
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        if self.is_lebesgue() {
            1.0
        } else {
            self.coefficients.eval_re(x)
        }
    }
}

/// Invariant density, truncated to frequencies `|k| ≤ k_h`.
pub fn invariant_density(map: &ExpandingMap, k_h: usize, tol: f64) -> Result<DensityModel> {
    if tol.is_nan() || tol < 1e-13 {
        return Err(Error::InvalidInput(format!("tolerance {tol} is below 1e-13")));
    }
    if map.is_linear() {
        return Ok(DensityModel::lebesgue(map.dim()));
    }
    let n = next_pow2((2 * k_h + 2).max(4 * map.degree()).max(64));
    let grid = UniformGrid::new(map.dim(), n);
    let mut f = GridFn::constant(grid, 1.0);
    let mut iterations = 0;
    loop {
        let mut g = transfer_apply(map, &f)?;
        let m = g.mean();
        g.values.iter_mut().for_each(|v| *v /= m);
        iterations += 1;
        let change = g.sup_distance(&f);
        f = g;
        if change < tol {
            break;
        }
        if iterations >= MAX_ITER {
            return Err(Error::NonConvergence { iterations, last_change: change });
        }
    }

    let full = interpolant_real(grid, &f.values);
    let k_h = k_h.max(1);
    let kept = full
        .terms()
        .iter()
        .filter(|(k, _)| k.iter().all(|v| v.unsigned_abs() as usize <= k_h))
        .cloned();
    let mut coefficients = TrigPoly::new(map.dim(), kept);
    let mean = coefficients.coeff(&vec![0; map.dim()]).re;
    coefficients = coefficients.scale(1.0 / mean);

    let audit = UniformGrid::new(map.dim(), AUDIT_GRID);
    let per_point = (0..audit.len())
        .into_par_iter()
        .map(|i| {
            let x = audit.point(i);
            let h = coefficients.eval_re(&x);
            let th = transfer_at(map, |y| coefficients.eval_re(y), &x)?;
            Ok((h, (th - h).abs()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let positivity_margin = per_point.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let residual = per_point.iter().map(|p| p.1).fold(0.0, f64::max);
    if positivity_margin <= 0.0 {
        return Err(Error::NonConvergence { iterations, last_change: positivity_margin });
    }
    Ok(DensityModel {
        coefficients,
        k_h,
        mean: 1.0,
        positivity_margin,
        residual,
        iterations,
    })
}

/// `A_n(y) = h(y) / (|Jac T^n(y)| h(T^n y))`, Jacobian by the chain rule
/// along the forward orbit.
#[allow(non_snake_case)]
pub fn weight_A(map: &ExpandingMap, h: &DensityModel, y: &[f64], n: usize) -> f64 {
    let mut z = y.to_vec();
    let ratio_start = h.eval(y);
    if n > LOG_SPACE_DEPTH {
        let mut log_jac = 0.0;
        for _ in 0..n {
            log_jac += map.jacobian(&z).ln();
            z = map.eval(&z);
        }
        (ratio_start.ln() - log_jac - h.eval(&z).ln()).exp()
    } else {
        let mut jac = 1.0;
        for _ in 0..n {
            jac *= map.jacobian(&z);
            z = map.eval(&z);
        }
        ratio_start / (jac * h.eval(&z))
    }
}

/// One-step weight `A(y) = h(y) / (|Jac T(y)| h(Ty))`.
#[allow(non_snake_case)]
pub fn weight_A1(map: &ExpandingMap, h: &DensityModel, y: &[f64]) -> f64 {
    weight_A(map, h, y, 1)
}
