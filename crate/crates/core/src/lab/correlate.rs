//! Correlations `C_n(φ, ψ) = ∫ φ∘F^n · ψ dA − ∫φ dA ∫ψ dA`, `dA = h dx dy`.
//!
//! Expanding `φ = Σ_ν φ_ν(x) e^{2πiν·y}`, only the pairs `(φ_ν, ψ_{−ν})`
//! survive the fiber integral, and by duality
//! `∫ φ_ν∘T^n e^{2πiν·S_nτ} ψ_{−ν} h dx = ∫ φ_ν · L_ν^n(ψ_{−ν} h) dx`
//! with `L_ν` the twisted transfer operator.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::fft::UniformGrid;
use crate::maps::{ExpandingMap, FiberRotation};
use crate::trig::{Coefficient, TrigPoly};
use crate::twisted::{assemble_transfer, ls_slope};

/// Values of `|C_n|` at or below this are treated as noise by the fit.
pub const NOISE_FLOOR: f64 = 1e-13;
const MIN_FIT_POINTS: usize = 5;

/// Trigonometric polynomial on `T^d × T^ℓ`, stored by fiber frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct Observable {
    base_dim: usize,
    fiber_dim: usize,
    modes: BTreeMap<Vec<i64>, TrigPoly>,
}

impl Observable {
    /// Frequencies list the `d` base axes first, then the `ℓ` fiber axes.
    pub fn from_coefficients(base_dim: usize, fiber_dim: usize, coeffs: &[Coefficient]) -> Result<Self> {
        let mut split: BTreeMap<Vec<i64>, Vec<(Vec<i64>, Complex64)>> = BTreeMap::new();
        for c in coeffs {
            if c.freq.len() != base_dim + fiber_dim {
                return Err(Error::InvalidInput(format!(
                    "observable frequency {:?} should have {} entries",
                    c.freq,
                    base_dim + fiber_dim
                )));
            }
            let (k, nu) = c.freq.split_at(base_dim);
            split.entry(nu.to_vec()).or_default().push((k.to_vec(), Complex64::new(c.re, c.im)));
        }
        let modes = split
            .into_iter()
            .map(|(nu, terms)| (nu, TrigPoly::new(base_dim, terms)))
            .filter(|(_, p)| !p.is_zero())
            .collect();
        Ok(Observable { base_dim, fiber_dim, modes })
    }

    /// `e^{2πiν·y}`.
    pub fn fiber_mode(base_dim: usize, nu: &[i64]) -> Self {
        let mut modes = BTreeMap::new();
        modes.insert(nu.to_vec(), TrigPoly::constant(base_dim, 1.0));
        Observable { base_dim, fiber_dim: nu.len(), modes }
    }

    pub fn conj(&self) -> Self {
        let modes = self
            .modes
            .iter()
            .map(|(nu, p)| {
                let neg: Vec<i64> = nu.iter().map(|v| -v).collect();
                let terms = p.terms().iter().map(|(k, c)| (k.iter().map(|v| -v).collect(), c.conj()));
                (neg, TrigPoly::new(self.base_dim, terms))
            })
            .collect();
        Observable { modes, ..self.clone() }
    }

    pub fn base_dim(&self) -> usize {
        self.base_dim
    }

    pub fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    pub fn mode(&self, nu: &[i64]) -> Option<&TrigPoly> {
        self.modes.get(nu)
    }

    pub fn modes(&self) -> impl Iterator<Item = (&Vec<i64>, &TrigPoly)> {
        self.modes.iter()
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Complex64 {
        self.modes
            .iter()
            .map(|(nu, p)| {
                let phase = TAU * nu.iter().zip(y).map(|(a, b)| *a as f64 * b).sum::<f64>();
                p.eval(x) * Complex64::from_polar(1.0, phase)
            })
            .sum()
    }

    /// `∫ φ dA`.
    pub fn mean(&self, h: &DensityModel) -> Complex64 {
        let zero = vec![0; self.fiber_dim];
        self.modes.get(&zero).map_or(Complex64::new(0.0, 0.0), |p| pair(p, &density_poly(h)))
    }
}

fn density_poly(h: &DensityModel) -> TrigPoly {
    if h.is_lebesgue() {
        TrigPoly::constant(h.dim(), 1.0)
    } else {
        h.coefficients.clone()
    }
}

/// `∫ f g dx = Σ_k f̂_k ĝ_{−k}`.
fn pair(f: &TrigPoly, g: &TrigPoly) -> Complex64 {
    f.terms()
        .iter()
        .map(|(k, c)| {
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            c * g.coeff(&neg)
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CorrelationSeries {
    /// Complex `C_n` for `n = 1..=n_max`.
    pub values: Vec<Complex64>,
    /// `|C_n|`.
    pub moduli: Vec<f64>,
}

impl CorrelationSeries {
    fn from_values(values: Vec<Complex64>) -> Self {
        let moduli = values.iter().map(|c| c.norm()).collect();
        CorrelationSeries { values, moduli }
    }
}

fn check_pair(phi: &Observable, psi: &Observable, map: &ExpandingMap, tau: &FiberRotation) -> Result<()> {
    if phi.base_dim != map.dim() || psi.base_dim != map.dim() {
        return Err(Error::InvalidInput("observable base dimension does not match the map".into()));
    }
    if phi.fiber_dim != tau.fiber_dim() || psi.fiber_dim != tau.fiber_dim() {
        return Err(Error::InvalidInput("observable fiber dimension does not match τ".into()));
    }
    Ok(())
}

/// Mode pairs `(ν, φ_ν, ψ_{−ν})` that survive the fiber integral.
fn mode_pairs<'a>(phi: &'a Observable, psi: &'a Observable) -> Vec<(Vec<i64>, &'a TrigPoly, &'a TrigPoly)> {
    phi.modes()
        .filter_map(|(nu, p)| {
            let neg: Vec<i64> = nu.iter().map(|v| -v).collect();
            psi.mode(&neg).map(|q| (nu.clone(), p, q))
        })
        .collect()
}

/// `C_1..C_{n_max}` from powers of the Galerkin transfer matrices at cut-off `k`.
#[allow(clippy::too_many_arguments)]
pub fn correlation_series(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    phi: &Observable,
    psi: &Observable,
    n_max: usize,
    k: usize,
) -> Result<CorrelationSeries> {
    check_pair(phi, psi, map, tau)?;
    let hp = density_poly(h);
    let parts = mode_pairs(phi, psi)
        .into_par_iter()
        .map(|(nu, p, q)| -> Result<Vec<Complex64>> {
            let op = assemble_transfer(map, tau, &nu, k)?;
            let g = q.mul(&hp);
            let mut c = vec![Complex64::new(0.0, 0.0); op.basis.len()];
            for (kk, v) in g.terms() {
                let i = op.basis.index(kk).ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "ψ·h has frequency {kk:?} outside the cut-off {k}; raise correlate.k"
                    ))
                })?;
                c[i] = *v;
            }
            let probe: Vec<(usize, Complex64)> = p
                .terms()
                .iter()
                .filter_map(|(kk, v)| {
                    let neg: Vec<i64> = kk.iter().map(|a| -a).collect();
                    op.basis.index(&neg).map(|i| (i, *v))
                })
                .collect();
            let mut out = Vec::with_capacity(n_max);
            for _ in 0..n_max {
                c = op.apply(&c);
                out.push(probe.iter().map(|(i, v)| v * c[*i]).sum());
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let offset = phi.mean(h) * psi.mean(h);
    let values = (0..n_max)
        .map(|n| parts.iter().map(|p| p[n]).sum::<Complex64>() - offset)
        .collect();
    Ok(CorrelationSeries::from_values(values))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectCorrelation {
    pub series: CorrelationSeries,
    pub grid_points: usize,
    /// Heuristic last `n` for which the quadrature resolves the integrand.
    pub resolved_n: usize,
}

/// `C_n` by iterating the base points and integrating over the base on a
/// uniform grid of about `points` nodes; the fiber integral is done exactly.
/// Only the first few `n` are meaningful: the integrand's frequency grows
/// like `‖DT‖^n`.
pub fn correlation_series_direct(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    phi: &Observable,
    psi: &Observable,
    n_max: usize,
    points: usize,
) -> Result<DirectCorrelation> {
    check_pair(phi, psi, map, tau)?;
    let d = map.dim();
    let per_axis = ((points as f64).powf(1.0 / d as f64).round() as usize).max(2);
    let grid = UniformGrid::new(d, per_axis);
    let pairs = mode_pairs(phi, psi);
    let total = grid.len();
    const CHUNK: usize = 1024;
    let partials: Vec<Vec<Complex64>> = (0..total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|chunk| {
            let mut acc = vec![Complex64::new(0.0, 0.0); n_max];
            for i in chunk * CHUNK..((chunk + 1) * CHUNK).min(total) {
                let x = grid.point(i);
                let w = h.eval(&x) / total as f64;
                let weights: Vec<Complex64> = pairs.iter().map(|(_, _, q)| q.eval(&x) * w).collect();
                let mut z = x.clone();
                let mut s = vec![0.0; tau.fiber_dim()];
                for slot in acc.iter_mut() {
                    for (a, t) in s.iter_mut().zip(tau.eval(&z)) {
                        *a += t;
                    }
                    z = map.eval(&z);
                    for ((nu, p, _), wq) in pairs.iter().zip(&weights) {
                        let phase = TAU * nu.iter().zip(&s).map(|(a, b)| *a as f64 * b).sum::<f64>();
                        *slot += wq * p.eval(&z) * Complex64::from_polar(1.0, phase);
                    }
                }
            }
            acc
        })
        .collect();
    let offset = phi.mean(h) * psi.mean(h);
    let values = (0..n_max)
        .map(|n| partials.iter().map(|p| p[n]).sum::<Complex64>() - offset)
        .collect();
    let band = 1 + phi.modes().chain(psi.modes()).map(|(_, p)| p.max_freq()).max().unwrap_or(0)
        + tau.max_freq();
    let ratio = per_axis as f64 / (4.0 * band as f64);
    let resolved_n = if ratio > 1.0 { (ratio.ln() / map.dt_sup().ln()).floor() as usize } else { 0 };
    Ok(DirectCorrelation {
        series: CorrelationSeries::from_values(values),
        grid_points: total,
        resolved_n,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    /// `ρ̂ = exp(slope of log|C_n|)`.
    pub rate: f64,
    pub r2: f64,
    pub window: [usize; 2],
    /// `n` values used in the fit.
    pub used: Vec<usize>,
    /// `n` values in the window dropped at the noise floor.
    pub excluded: Vec<usize>,
}

/// Least-squares fit of `log|C_n|` over `n ∈ [lo, hi]`; `moduli[n-1] = |C_n|`.
pub fn fit_decay_rate(moduli: &[f64], window: [usize; 2]) -> Result<DecayFit> {
    let [lo, hi] = window;
    if lo == 0 || lo > hi {
        return Err(Error::InvalidInput(format!("bad fit window [{lo}, {hi}]")));
    }
    let (mut used, mut excluded) = (Vec::new(), Vec::new());
    for n in lo..=hi.min(moduli.len()) {
        let c = moduli[n - 1];
        if c > NOISE_FLOOR && c.is_finite() {
            used.push(n);
        } else {
            excluded.push(n);
        }
    }
    if used.len() < MIN_FIT_POINTS {
        return Err(Error::WindowTooNoisy { usable: used.len() });
    }
    let pts: Vec<(f64, f64)> = used.iter().map(|&n| (n as f64, moduli[n - 1].ln())).collect();
    let slope = ls_slope(&pts);
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / pts.len() as f64;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / pts.len() as f64;
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    // A flat series explains nothing: report r² = 0 rather than 0/0.
    let r2 = if ss_tot > 1e-24 * pts.len() as f64 { 1.0 - ss_res / ss_tot } else { 0.0 };
    Ok(DecayFit { rate: slope.exp(), r2, window, used, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::RealTerm;

    fn cos_tau() -> FiberRotation {
        FiberRotation::from_real_terms(1, &[vec![RealTerm::cos(vec![1], 1.0)]]).unwrap()
    }

    fn cos_y() -> Observable {
        let c = |nu| Coefficient { freq: vec![0, nu], re: 0.5, im: 0.0 };
        Observable::from_coefficients(1, 1, &[c(1), c(-1)]).unwrap()
    }

    #[test]
    fn geometric_series_fit() {
        let c: Vec<f64> = (1..=40).map(|n| 0.5 * 0.7f64.powi(n)).collect();
        let fit = fit_decay_rate(&c, [5, 30]).unwrap();
        assert!((fit.rate - 0.7).abs() < 1e-12);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let flat = vec![0.3; 40];
        let f = fit_decay_rate(&flat, [10, 40]).unwrap();
        assert!(f.r2 < 0.5 && (f.rate - 1.0).abs() < 1e-12);
        let tiny = vec![1e-15; 40];
        assert!(matches!(fit_decay_rate(&tiny, [1, 40]), Err(Error::WindowTooNoisy { usable: 0 })));
    }

    #[test]
    fn constants_do_not_correlate() {
        let one = Observable::from_coefficients(1, 1, &[Coefficient { freq: vec![0, 0], re: 2.0, im: 0.0 }])
            .unwrap();
        let h = DensityModel::lebesgue(1);
        let s = correlation_series(&ExpandingMap::doubling(), &cos_tau(), &h, &one, &one, 5, 8).unwrap();
        assert!(s.moduli.iter().all(|&c| c < 1e-14));
    }

    #[test]
    fn transfer_and_direct_routes_agree_for_short_times() {
        let t = ExpandingMap::doubling();
        let h = DensityModel::lebesgue(1);
        let phi = cos_y();
        let a = correlation_series(&t, &cos_tau(), &h, &phi, &phi, 6, 64).unwrap();
        let b = correlation_series_direct(&t, &cos_tau(), &h, &phi, &phi, 6, 1 << 14).unwrap();
        for n in 0..6 {
            assert!((a.values[n] - b.series.values[n]).norm() < 1e-10, "n = {}", n + 1);
        }
        // C_1 = ½ ∫ cos(2π cos 2πx) dx = ½ J₀(2π)
        assert!((a.values[0].re - 0.5 * 0.220_276_908_539_934_5).abs() < 1e-12);
    }
}
