use std::f64::consts::TAU;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{self, UniformGrid};
use crate::maps::{ExpandingMap, FiberRotation};
use crate::trig::TrigPoly;

/// Stream of branch labels selecting `T^{-j}_i x`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Itinerary {
    Constant(usize),
    Cycle(Vec<usize>),
    Random { seed: u64 },
}

impl Itinerary {
    fn stream(&self, degree: usize) -> Box<dyn Iterator<Item = usize> + '_> {
        match self {
            Itinerary::Constant(j) => Box::new(std::iter::repeat(*j % degree)),
            Itinerary::Cycle(js) => {
                assert!(!js.is_empty(), "empty itinerary cycle");
                Box::new(js.iter().map(move |j| j % degree).cycle())
            }
            Itinerary::Random { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Box::new(std::iter::from_fn(move || Some(rng.random_range(0..degree))))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VField {
    pub v: Vec<f64>,
    /// Number of series terms summed.
    pub terms: usize,
    pub tail_bound: f64,
}

/// `V_k(x) = Σ_{j=1}^k D_x[n·τ(T^{-j}_i x)]`, summed until the tail bound
/// `‖Dτ‖ γ^{-k} / (1 − γ^{-1})` drops below `tol`.
///
/// If `n·τ = c − w + w∘T` the series telescopes to `∇w`.
pub fn vfield(
    map: &ExpandingMap,
    tau: &FiberRotation,
    n_dir: &[f64],
    x: &[f64],
    itinerary: &Itinerary,
    tol: f64,
) -> Result<VField> {
    assert!(tol > 0.0, "series tolerance must be positive");
    let d = map.dim();
    let inv_gamma = 1.0 / map.gamma();
    let dn: f64 = n_dir.iter().map(|a| a * a).sum::<f64>().sqrt();
    let scale = tau.dtau_sup() * dn / (1.0 - inv_gamma);
    // (D_x T^{-j})^t, accumulated as M_j = M_{j-1} (D_{y_j} T)^{-t}
    let mut m = DMatrix::<f64>::identity(d, d);
    let mut v = vec![0.0; d];
    let mut y = x.to_vec();
    let mut terms = 0;
    let mut tail = scale;
    let mut labels = itinerary.stream(map.degree());
    while tail >= tol && terms < 10_000 {
        let j = labels.next().expect("itineraries are infinite");
        y = map.inverse_branch(&y, j)?;
        let dt_inv_t = map
            .derivative(&y)
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("singular derivative".into()))?
            .transpose();
        m = &m * dt_inv_t;
        let pull = tau.pullback(n_dir, &y);
        for (r, vr) in v.iter_mut().enumerate() {
            *vr += (0..d).map(|c| m[(r, c)] * pull[c]).sum::<f64>();
        }
        terms += 1;
        tail = scale * inv_gamma.powi(terms as i32);
    }
    Ok(VField { v, terms, tail_bound: tail })
}

/// A covector field sampled on a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VGrid {
    pub grid: UniformGrid,
    /// `values[i][k]` is component `k` at grid point `i`.
    pub values: Vec<Vec<f64>>,
}

impl VGrid {
    pub fn sample(grid: UniformGrid, f: impl Fn(&[f64]) -> Vec<f64> + Sync) -> Self {
        let values = (0..grid.len()).into_par_iter().map(|i| f(&grid.point(i))).collect();
        VGrid { grid, values }
    }

    fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }
}

pub fn sample_vfield(
    map: &ExpandingMap,
    tau: &FiberRotation,
    n_dir: &[f64],
    grid: UniformGrid,
    itinerary: &Itinerary,
    tol: f64,
) -> Result<(VGrid, usize)> {
    let rows = (0..grid.len())
        .into_par_iter()
        .map(|i| vfield(map, tau, n_dir, &grid.point(i), itinerary, tol))
        .collect::<Result<Vec<_>>>()?;
    let terms = rows.iter().map(|r| r.terms).max().unwrap_or(0);
    Ok((VGrid { grid, values: rows.into_iter().map(|r| r.v).collect() }, terms))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExactnessReport {
    /// `loops[k]`: integrals of `V^k` along coordinate circles in direction `k`
    /// through several base points.
    pub loops: Vec<Vec<f64>>,
    pub residual: f64,
}

const LOOP_BASES: usize = 8;

/// Period integrals `∫₀¹ V^k(…, t, …) dt` (rectangle rule, exact for
/// trigonometric polynomials resolved by the grid).
pub fn check_exactness(field: &VGrid) -> ExactnessReport {
    let grid = field.grid;
    let n = grid.n;
    let d = grid.dim;
    let mut loops = Vec::with_capacity(d);
    let mut residual = 0.0f64;
    for k in 0..d {
        let stride = n.pow((d - 1 - k) as u32);
        let others = grid.len() / n;
        let picks: Vec<usize> = if others <= LOOP_BASES {
            (0..others).collect()
        } else {
            (0..LOOP_BASES).map(|i| i * others / LOOP_BASES).collect()
        };
        let mut ints = Vec::with_capacity(picks.len());
        for b in picks {
            // b enumerates the other coordinates; rebuild the flat base index
            let (hi, lo) = (b / stride, b % stride);
            let base = hi * n * stride + lo;
            let s: f64 = (0..n).map(|t| field.values[base + t * stride][k]).sum::<f64>() / n as f64;
            residual = residual.max(s.abs());
            ints.push(s);
        }
        loops.push(ints);
    }
    ExactnessReport { loops, residual }
}

/// Potential `u` with `∇u = V` and `u(0) = 0`, from the Fourier solution
/// `û_k = Σ_j k_j V̂^j_k / (2πi|k|²)`.
pub fn reconstruct_u(field: &VGrid, tol: f64) -> Result<TrigPoly> {
    let report = check_exactness(field);
    if report.residual > tol {
        return Err(Error::NotExact { residual: report.residual, tolerance: tol });
    }
    let grid = field.grid;
    let d = grid.dim;
    let specs: Vec<Vec<Complex64>> = (0..d).map(|k| fft::forward_real(grid, &field.component(k))).collect();
    let nyquist = grid.n.is_multiple_of(2);
    let mut terms = Vec::with_capacity(grid.len());
    let mut sum = Complex64::new(0.0, 0.0);
    for idx in 0..grid.len() {
        let freq: Vec<i64> = grid.multi_index(idx).into_iter().map(|b| grid.freq_of_bin(b)).collect();
        if freq.iter().all(|&f| f == 0) {
            continue;
        }
        if nyquist && freq.iter().any(|&f| 2 * f == -(grid.n as i64)) {
            continue;
        }
        let k2: f64 = freq.iter().map(|&f| (f * f) as f64).sum();
        let num: Complex64 = specs.iter().zip(&freq).map(|(sp, &f)| sp[idx] * f as f64).sum();
        let c = num / Complex64::new(0.0, TAU * k2);
        sum += c;
        terms.push((freq, c));
    }
    terms.push((vec![0; d], -sum));
    let u = TrigPoly::new(d, terms).pruned(1e-15);
    // Hermitian symmetrization removes rounding asymmetry.
    let sym = u.terms().iter().map(|(k, c)| {
        let neg: Vec<i64> = k.iter().map(|v| -v).collect();
        (k.clone(), 0.5 * (c + u.coeff(&neg).conj()))
    });
    Ok(TrigPoly::new(d, sym.collect::<Vec<_>>()))
}
