use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use serde::Serialize;

use super::TwistedGalerkinOperator;
use crate::error::{Error, Result};

/// Powers `n ∈ [20, 40]` used for the Gelfand estimate; the fit uses the last third.
pub const GELFAND_WINDOW: (usize, usize) = (20, 40);
/// Disagreement floor below which the two radius estimates are never flagged.
const AGREEMENT_FLOOR: f64 = 1e-8;
const UNDERFLOW: f64 = 1e-280;

/// Eigenvalues sorted by decreasing modulus, ties broken by argument.
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or(Error::NonConvergence { iterations: 0, last_change: f64::NAN })?;
    let t = schur.unpack().1;
    let mut ev: Vec<Complex64> = (0..t.nrows()).map(|i| t[(i, i)]).collect();
    ev.sort_by(|a, b| b.norm().total_cmp(&a.norm()).then(a.arg().total_cmp(&b.arg())));
    Ok(ev)
}

/// Leading eigenvalue and a unit eigenvector by shifted inverse iteration.
pub fn leading_eigenpair(op: &TwistedGalerkinOperator) -> Result<(Complex64, DVector<Complex64>)> {
    let lambda = eigenvalues(&op.matrix)?[0];
    let n = op.matrix.nrows();
    let shift = lambda + Complex64::new(1e-10 * lambda.norm().max(1.0), 0.0);
    let lu = (&op.matrix - DMatrix::identity(n, n) * shift).lu();
    let mut v = DVector::from_element(n, Complex64::new(1.0, 0.0));
    for _ in 0..8 {
        v = lu
            .solve(&v)
            .ok_or(Error::NonConvergence { iterations: 0, last_change: f64::NAN })?;
        let norm = v.norm();
        v /= Complex64::new(norm, 0.0);
    }
    let pivot = v.iter().copied().max_by(|a, b| a.norm().total_cmp(&b.norm())).unwrap_or_default();
    if pivot.norm() > 0.0 {
        v *= pivot.conj() / pivot.norm();
    }
    Ok((lambda, v))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormGrowth {
    /// `‖W M^n W^{-1}‖₂` for `n = 1..=n_max`.
    pub norms: Vec<f64>,
    /// `norms[n] / norms[n-1]`.
    pub ratios: Vec<f64>,
}

fn spectral_norm(m: &DMatrix<Complex64>) -> f64 {
    m.clone().singular_values().max()
}

pub fn weighted_norm_growth(op: &TwistedGalerkinOperator, n_max: usize) -> NormGrowth {
    let w = op.weighted_matrix();
    let mut p = w.clone();
    let mut norms = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        norms.push(spectral_norm(&p));
        if n < n_max {
            p = &p * &w;
        }
    }
    let ratios = norms.windows(2).map(|r| r[1] / r[0]).collect();
    NormGrowth { norms, ratios }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralEstimate {
    pub nu: Vec<i64>,
    pub k: usize,
    /// Reported radius (the eigenvalue estimate).
    pub radius: f64,
    /// `|radius(K) − radius(K/2)|`.
    pub uncertainty: f64,
    pub eig: f64,
    pub gelfand: f64,
    pub gelfand_spread: f64,
    pub leading: Complex64,
}

/// Radius from the eigenvalues and from `‖M^n‖^{1/n}` over [`GELFAND_WINDOW`].
pub fn spectral_radius(op: &TwistedGalerkinOperator) -> Result<SpectralEstimate> {
    spectral_radius_with(op, GELFAND_WINDOW)
}

pub fn spectral_radius_with(
    op: &TwistedGalerkinOperator,
    window: (usize, usize),
) -> Result<SpectralEstimate> {
    let (lo, hi) = window;
    assert!(1 <= lo && lo + 2 < hi, "window needs at least three powers");
    let ev = eigenvalues(&op.matrix)?;
    let leading = ev[0];
    let eig = leading.norm();
    let half = op.k() / 2;
    let uncertainty = if half >= 1 {
        let coarse = eigenvalues(&op.truncate(half).matrix)?[0].norm();
        (eig - coarse).abs()
    } else {
        f64::NAN
    };

    let first = hi - (hi - lo) / 3;
    let w = op.weighted_matrix();
    let mut p = matrix_power(&w, first);
    let mut logs = Vec::new();
    for n in first..=hi {
        let norm = spectral_norm(&p);
        if norm.is_nan() || norm <= UNDERFLOW {
            break;
        }
        logs.push((n as f64, norm.ln()));
        if n < hi {
            p = &p * &w;
        }
    }
    let (gelfand, gelfand_spread) = if logs.len() >= 3 {
        let slope = ls_slope(&logs);
        let steps: Vec<f64> = logs.windows(2).map(|s| (s[1].1 - s[0].1).exp()).collect();
        let spread = steps.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - steps.iter().cloned().fold(f64::INFINITY, f64::min);
        (slope.exp(), spread)
    } else {
        // Powers underflow: the radius is far below anything we resolve.
        (eig, 0.0)
    };

    let allowed = 10.0 * uncertainty.max(gelfand_spread).max(AGREEMENT_FLOOR);
    if (gelfand - eig).abs() > allowed {
        return Err(Error::NotConverged { gelfand, eig, allowed });
    }
    Ok(SpectralEstimate {
        nu: op.nu.clone(),
        k: op.k(),
        radius: eig,
        uncertainty,
        eig,
        gelfand,
        gelfand_spread,
        leading,
    })
}

fn matrix_power(m: &DMatrix<Complex64>, mut n: usize) -> DMatrix<Complex64> {
    let mut result = DMatrix::identity(m.nrows(), m.ncols());
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &result * &base;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

pub(crate) fn ls_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::{ExpandingMap, FiberRotation};
    use crate::trig::RealTerm;
    use crate::twisted::assemble_transfer;

    #[test]
    fn untwisted_radius_is_one() {
        let tau = FiberRotation::from_real_terms(1, &[vec![RealTerm::cos(vec![1], 1.0)]]).unwrap();
        let op = assemble_transfer(&ExpandingMap::doubling(), &tau, &[0], 16).unwrap();
        let est = spectral_radius(&op).unwrap();
        assert!((est.radius - 1.0).abs() < 1e-6);
        let (lambda, v) = leading_eigenpair(&op).unwrap();
        assert!((lambda - 1.0).norm() < 1e-10);
        let z = op.basis.zero_index();
        assert!((v[z].norm() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn matrix_power_agrees_with_repeated_products() {
        let m = DMatrix::from_fn(3, 3, |i, j| Complex64::new((i + 2 * j) as f64 * 0.1, 0.05));
        let mut direct = DMatrix::identity(3, 3);
        for _ in 0..7 {
            direct = &direct * &m;
        }
        assert!((matrix_power(&m, 7) - direct).iter().all(|c| c.norm() < 1e-12));
    }
}
