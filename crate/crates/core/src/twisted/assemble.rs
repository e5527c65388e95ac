use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{FrequencyBox, OperatorKind, SobolevWeight, TwistedGalerkinOperator, DEFAULT_S};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::fft::{self, next_pow2, UniformGrid};
use crate::maps::{ExpandingMap, FiberRotation};
use crate::trig::TrigPoly;

/// Largest dense basis accepted (about 0.5 GB per complex matrix at the cap).
pub const MAX_BASIS: usize = 6000;
const ALIASING_THRESHOLD: f64 = 1e-6;
/// Largest coefficient allowed in the top half-band of the multiplier grid;
/// well above FFT rounding, which a summed tail would eventually exceed.
const MULTIPLIER_TAIL: f64 = 1e-15;

/// Fraction of the multiplier's spectral mass lying outside the basis box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AliasingWarning {
    pub nu: Vec<i64>,
    pub k: usize,
    pub outside_fraction: f64,
}

struct Multiplier {
    poly: TrigPoly,
    bandwidth: i64,
    warning: Option<AliasingWarning>,
}

fn phase(nu: &[i64], tau: &FiberRotation) -> TrigPoly {
    let v: Vec<f64> = nu.iter().map(|&a| a as f64).collect();
    tau.project(&v)
}

fn cis(t: f64) -> Complex64 {
    Complex64::new(t.cos(), t.sin())
}

/// Fourier table of `e^{2πiν·τ}`, resolved by grid doubling until the top
/// half-band is empty to rounding.
fn multiplier(tau: &FiberRotation, nu: &[i64], basis: FrequencyBox) -> Multiplier {
    let d = tau.base_dim();
    let nt = phase(nu, tau);
    let cap = match d {
        1 => 1 << 16,
        2 => 1 << 9,
        _ => 1 << 5,
    };
    let mut n = next_pow2(4 * (nt.max_freq() as usize + 1)).max(16).min(cap);
    loop {
        let grid = UniformGrid::new(d, n);
        let vals: Vec<Complex64> = grid.points().iter().map(|x| cis(TAU * nt.eval_re(x))).collect();
        let spec = fft::forward(grid, &vals);
        let (mut tail, mut total) = (0.0f64, 0.0);
        for (i, c) in spec.iter().enumerate() {
            total += c.norm_sqr();
            let far = grid
                .multi_index(i)
                .into_iter()
                .any(|b| grid.freq_of_bin(b).unsigned_abs() as usize > n / 4);
            if far {
                tail = tail.max(c.norm());
            }
        }
        if tail <= MULTIPLIER_TAIL || n >= cap {
            let poly = fft::spectrum_to_poly(grid, &spec).pruned(MULTIPLIER_TAIL);
            let outside: f64 = poly
                .terms()
                .iter()
                .filter(|(k, _)| basis.index(k).is_none())
                .map(|(_, c)| c.norm_sqr())
                .sum();
            let frac = outside / total;
            let warning = (frac > ALIASING_THRESHOLD).then(|| AliasingWarning {
                nu: nu.to_vec(),
                k: basis.k,
                outside_fraction: frac,
            });
            return Multiplier { bandwidth: poly.max_freq(), poly, warning };
        }
        n *= 2;
    }
}

fn check_basis(map: &ExpandingMap, tau: &FiberRotation, nu: &[i64], k: usize) -> Result<FrequencyBox> {
    if tau.base_dim() != map.dim() {
        return Err(Error::InvalidInput("rotation and map live on different tori".into()));
    }
    if nu.len() != tau.fiber_dim() {
        return Err(Error::InvalidInput(format!(
            "frequency {nu:?} has {} entries, fiber dimension is {}",
            nu.len(),
            tau.fiber_dim()
        )));
    }
    if k == 0 {
        return Err(Error::InvalidInput("truncation K must be positive".into()));
    }
    let basis = FrequencyBox::new(map.dim(), k);
    if basis.len() > MAX_BASIS {
        return Err(Error::InvalidInput(format!(
            "basis of {} frequencies exceeds the dense limit {MAX_BASIS}",
            basis.len()
        )));
    }
    Ok(basis)
}

fn finish(
    nu: &[i64],
    kind: OperatorKind,
    basis: FrequencyBox,
    matrix: DMatrix<Complex64>,
    warning: Option<AliasingWarning>,
) -> TwistedGalerkinOperator {
    TwistedGalerkinOperator {
        nu: nu.to_vec(),
        kind,
        basis,
        matrix,
        weight: SobolevWeight::standard(DEFAULT_S, nu, basis),
        warnings: warning.into_iter().collect(),
    }
}

/// Galerkin matrix of `F̂_ν φ = (φ∘T) e^{2πiν·τ}`.
///
/// Linear maps use the exact index shift `M[ξ, ξ′] = m̂(ξ − A^tξ′)`;
/// perturbed maps transform each column on a grid resolving `K·sup|T′|`.
pub fn assemble_koopman(
    map: &ExpandingMap,
    tau: &FiberRotation,
    nu: &[i64],
    k: usize,
) -> Result<TwistedGalerkinOperator> {
    let basis = check_basis(map, tau, nu, k)?;
    let m = multiplier(tau, nu, basis);
    let len = basis.len();
    let mut matrix = DMatrix::zeros(len, len);
    if let Some(a) = map.matrix() {
        let d = map.dim();
        for j in 0..len {
            let xp = basis.freq(j);
            let shifted: Vec<i64> = (0..d).map(|c| (0..d).map(|r| a[r][c] * xp[r]).sum()).collect();
            for (kk, c) in m.poly.terms() {
                let xi: Vec<i64> = shifted.iter().zip(kk).map(|(s, t)| s + t).collect();
                if let Some(i) = basis.index(&xi) {
                    matrix[(i, j)] = *c;
                }
            }
        }
    } else {
        let reach = (map.dt_sup().ceil() as usize) * k + m.bandwidth as usize;
        let grid = UniformGrid::new(1, next_pow2((8 * k).max(4 * reach)));
        let pts = grid.points();
        let mult: Vec<Complex64> = pts.iter().map(|x| m.poly.eval(x)).collect();
        let lift: Vec<f64> = pts.iter().map(|x| map.eval_lift(x)[0]).collect();
        let columns: Vec<Vec<Complex64>> = (0..len)
            .into_par_iter()
            .map(|j| {
                let xp = basis.freq(j)[0] as f64;
                let vals: Vec<Complex64> = mult
                    .iter()
                    .zip(&lift)
                    .map(|(mv, t)| mv * cis(TAU * xp * t))
                    .collect();
                let spec = fft::forward(grid, &vals);
                (0..len)
                    .map(|i| spec[grid.spectrum_index(&basis.freq(i)).expect("grid covers box")])
                    .collect()
            })
            .collect();
        for (j, col) in columns.into_iter().enumerate() {
            for (i, v) in col.into_iter().enumerate() {
                matrix[(i, j)] = v;
            }
        }
    }
    Ok(finish(nu, OperatorKind::Koopman, basis, matrix, m.warning))
}

/// Galerkin matrix of `F̂′_ν ψ(x) = Σ_{Ty=x} e^{2πiν·τ(y)} ψ(y)/|Jac T(y)|`.
///
/// On the circle each column is sampled by branch sums and transformed; on
/// higher-dimensional tori the entries come from `F̂′_ν[ξ, ξ′] = F̂_ν[−ξ′, −ξ]`.
pub fn assemble_transfer(
    map: &ExpandingMap,
    tau: &FiberRotation,
    nu: &[i64],
    k: usize,
) -> Result<TwistedGalerkinOperator> {
    let basis = check_basis(map, tau, nu, k)?;
    let len = basis.len();
    if map.dim() > 1 {
        let koop = assemble_koopman(map, tau, nu, k)?;
        let matrix = DMatrix::from_fn(len, len, |i, j| koop.matrix[(len - 1 - j, len - 1 - i)]);
        return Ok(TwistedGalerkinOperator {
            kind: OperatorKind::Transfer,
            matrix,
            ..koop
        });
    }
    let m = multiplier(tau, nu, basis);
    let reach = k + m.bandwidth as usize + 16;
    let grid = UniformGrid::new(1, next_pow2((8 * k).max(4 * map.degree()).max(4 * reach)));
    // Per grid point: branch lifts and their weights e^{2πiν·τ(y)}/|Jac T(y)|.
    let branches: Vec<Vec<(f64, Complex64)>> = grid
        .points()
        .par_iter()
        .map(|x| {
            (0..map.degree())
                .map(|j| {
                    let y = map.inverse_branch_lift(x, j)?;
                    Ok((y[0], m.poly.eval(&y) / map.jacobian(&y)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let columns: Vec<Vec<Complex64>> = (0..len)
        .into_par_iter()
        .map(|j| {
            let xp = basis.freq(j)[0] as f64;
            let vals: Vec<Complex64> = branches
                .iter()
                .map(|bs| bs.iter().map(|(y, w)| w * cis(TAU * xp * y)).sum())
                .collect();
            let spec = fft::forward(grid, &vals);
            (0..len)
                .map(|i| spec[grid.spectrum_index(&basis.freq(i)).expect("grid covers box")])
                .collect()
        })
        .collect();
    let mut matrix = DMatrix::zeros(len, len);
    for (j, col) in columns.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            matrix[(i, j)] = v;
        }
    }
    Ok(finish(nu, OperatorKind::Transfer, basis, matrix, m.warning))
}

/// `max |F̂′[ξ, ξ′] − F̂[−ξ′, −ξ]|`.
pub fn duality_residual(koopman: &TwistedGalerkinOperator, transfer: &TwistedGalerkinOperator) -> f64 {
    assert_eq!(koopman.basis, transfer.basis);
    let len = koopman.basis.len();
    let mut worst = 0.0f64;
    for i in 0..len {
        for j in 0..len {
            let d = transfer.matrix[(i, j)] - koopman.matrix[(len - 1 - j, len - 1 - i)];
            worst = worst.max(d.norm());
        }
    }
    worst
}

/// Largest coefficient error of `M φ̂` against sampling the operator applied
/// to `trials` random trigonometric polynomials of degree `≤ K/2` and
/// projecting onto the basis.
pub fn assembly_residual(
    op: &TwistedGalerkinOperator,
    map: &ExpandingMap,
    tau: &FiberRotation,
    trials: usize,
    seed: u64,
) -> Result<f64> {
    let basis = op.basis;
    let half = FrequencyBox::new(basis.dim, (basis.k / 2).max(1));
    let m = multiplier(tau, &op.nu, basis);
    let spread = match map.matrix() {
        Some(a) => a.iter().map(|row| row.iter().map(|v| v.unsigned_abs()).sum::<u64>()).max().unwrap_or(1) as f64,
        None => map.dt_sup(),
    };
    let reach = (spread * half.k as f64).ceil() as usize + m.bandwidth as usize + basis.k + 1;
    let grid = UniformGrid::new(basis.dim, next_pow2(reach + 1).max(8));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let terms: Vec<(Vec<i64>, Complex64)> = (0..half.len())
            .map(|i| {
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (half.freq(i), c)
            })
            .collect();
        let phi = TrigPoly::new(basis.dim, terms);
        let sampled: Vec<Complex64> = grid
            .points()
            .par_iter()
            .map(|x| match op.kind {
                OperatorKind::Koopman => Ok(phi.eval(&map.eval(x)) * m.poly.eval(x)),
                OperatorKind::Transfer => {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for y in map.inverse_branches(x)? {
                        acc += m.poly.eval(&y) * phi.eval(&y) / map.jacobian(&y);
                    }
                    Ok(acc)
                }
            })
            .collect::<Result<_>>()?;
        let spec = fft::forward(grid, &sampled);
        let coeffs: Vec<Complex64> = (0..basis.len()).map(|i| phi.coeff(&basis.freq(i))).collect();
        let applied = op.apply(&coeffs);
        for (i, v) in applied.iter().enumerate() {
            let want = spec[grid.spectrum_index(&basis.freq(i)).expect("grid covers box")];
            worst = worst.max((v - want).norm());
        }
    }
    Ok(worst)
}

/// `‖M ĥ − ĥ‖_∞` for the untwisted transfer matrix and the density `h`.
pub fn stationary_residual(op: &TwistedGalerkinOperator, h: &DensityModel) -> f64 {
    let coeffs: Vec<Complex64> = (0..op.basis.len())
        .map(|i| h.coefficients.coeff(&op.basis.freq(i)))
        .collect();
    let v = DVector::from_column_slice(&coeffs);
    (&op.matrix * &v - &v).iter().map(|c| c.norm()).fold(0.0, f64::max)
}
