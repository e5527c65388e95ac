use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::vfield::{check_exactness, reconstruct_u, sample_vfield, vfield, Itinerary};
use super::{
    collect_obstructions, detect_dependence, Candidate, DependenceMode, DEFAULT_P_MAX,
    DEFAULT_V_MAX, EQUATION_TOL, ORBIT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::fft::UniformGrid;
use crate::maps::{torus_distance, ExpandingMap, FiberRotation};
use crate::trig::TrigPoly;

const SERIES_TOL: f64 = 1e-12;
const DISCREPANCY_POINTS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CertificateResiduals {
    pub orbit: f64,
    /// `sup |v·τ − c − u + u∘T|` over the check grid.
    pub equation: f64,
    pub exactness: f64,
}

/// A candidate `(v, c, u)` for `v·τ = c + u − u∘T` together with its residuals.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoboundaryCertificate {
    pub v: Vec<f64>,
    pub integral: bool,
    /// Refit as the grid mean of `v·τ − u + u∘T`.
    pub c: f64,
    pub c_mod1: f64,
    /// Constant from the orbit fit.
    pub c_orbit: f64,
    pub u: TrigPoly,
    pub k_u: i64,
    pub residuals: CertificateResiduals,
    pub tolerance: f64,
    pub valid: bool,
    /// Largest difference of `V` between two itineraries on sample points.
    pub itinerary_discrepancy: f64,
    pub series_terms: usize,
}

fn check_grid(dim: usize) -> UniformGrid {
    let n = (4096f64.powf(1.0 / dim as f64)).round() as usize;
    UniformGrid::new(dim, n.max(2))
}

fn sample_grid(dim: usize) -> UniformGrid {
    match dim {
        1 => UniformGrid::new(1, 256),
        2 => UniformGrid::new(2, 32),
        _ => UniformGrid::new(dim, 12),
    }
}

fn equation_values(map: &ExpandingMap, tau: &FiberRotation, v: &[f64], u: &TrigPoly, grid: UniformGrid) -> Vec<f64> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let x = grid.point(i);
            tau.dot(v, &x) - u.eval_re(&x) + u.eval_re(&map.eval(&x))
        })
        .collect()
}

/// Certify a candidate direction: sum the `V` series in the unit direction
/// `v/|v|`, integrate it to `u`, refit `c` and measure the equation.
pub fn build_certificate(
    map: &ExpandingMap,
    tau: &FiberRotation,
    cand: &Candidate,
    tolerance: f64,
) -> Result<CoboundaryCertificate> {
    let d = map.dim();
    if cand.v.len() != tau.fiber_dim() {
        return Err(Error::InvalidInput("candidate dimension mismatch".into()));
    }
    let scale = cand.v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if scale == 0.0 {
        return Err(Error::InvalidInput("zero candidate direction".into()));
    }
    let unit: Vec<f64> = cand.v.iter().map(|a| a / scale).collect();

    let (field, series_terms) =
        sample_vfield(map, tau, &unit, sample_grid(d), &Itinerary::Constant(0), SERIES_TOL)?;
    let exactness = check_exactness(&field).residual;
    // n̂·τ = c′ − w + w∘T gives V = ∇w, so u = −|v| w
    let u = match reconstruct_u(&field, tolerance) {
        Ok(w) => w.scale(-scale),
        Err(Error::NotExact { .. }) => TrigPoly::zero(d),
        Err(e) => return Err(e),
    };

    let probe = UniformGrid::new(d, 4);
    let itinerary_discrepancy = (0..probe.len().min(DISCREPANCY_POINTS))
        .map(|i| {
            let x = probe.point(i);
            let a = vfield(map, tau, &unit, &x, &Itinerary::Constant(0), SERIES_TOL)?;
            let b = vfield(map, tau, &unit, &x, &Itinerary::Random { seed: i as u64 }, SERIES_TOL)?;
            Ok(a.v.iter().zip(&b.v).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);

    let grid = check_grid(d);
    let vals = equation_values(map, tau, &cand.v, &u, grid);
    let c = vals.iter().sum::<f64>() / vals.len() as f64;
    let equation = vals.iter().map(|e| (e - c).abs()).fold(0.0, f64::max);
    let residuals = CertificateResiduals { orbit: cand.orbit_residual, equation, exactness };
    Ok(CoboundaryCertificate {
        v: cand.v.clone(),
        integral: cand.integral,
        c,
        c_mod1: c.rem_euclid(1.0),
        c_orbit: cand.c,
        k_u: u.max_freq(),
        u,
        residuals,
        tolerance,
        valid: equation.is_finite() && equation <= tolerance,
        itinerary_discrepancy,
        series_terms,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SemiconjugacyReport {
    /// `sup d(π∘F, π + c)` with `π(x, y) = v·y + u(x) mod 1`.
    pub residual: f64,
    pub points: usize,
}

/// Check that `π(x, y) = v·y + u(x) mod 1` intertwines `F` with `T × R_c`.
pub fn build_semiconjugacy(
    map: &ExpandingMap,
    tau: &FiberRotation,
    cert: &CoboundaryCertificate,
) -> Result<SemiconjugacyReport> {
    let integral = cert.integral && cert.v.iter().all(|a| a.fract() == 0.0);
    if !integral {
        return Err(Error::NotIntegral(cert.v.clone()));
    }
    let d = map.dim();
    let l = tau.fiber_dim();
    let xs = sample_grid(d);
    let ys = UniformGrid::new(l, 8);
    let pi = |x: &[f64], y: &[f64]| {
        cert.v.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() + cert.u.eval_re(x)
    };
    let residual = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let x = xs.point(i);
            let tx = map.eval(&x);
            let t = tau.eval(&x);
            (0..ys.len())
                .map(|k| {
                    let y = ys.point(k);
                    let fy: Vec<f64> = y.iter().zip(&t).map(|(a, b)| a + b).collect();
                    torus_distance(&[pi(&tx, &fy)], &[pi(&x, &y) + cert.c])
                })
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(SemiconjugacyReport { residual, points: xs.len() * ys.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LivsicOptions {
    pub p_max: usize,
    pub mode: DependenceMode,
    pub v_max: i64,
    pub orbit_threshold: f64,
    pub equation_tol: f64,
}

impl Default for LivsicOptions {
    fn default() -> Self {
        LivsicOptions {
            p_max: DEFAULT_P_MAX,
            mode: DependenceMode::Auto,
            v_max: DEFAULT_V_MAX,
            orbit_threshold: ORBIT_THRESHOLD,
            equation_tol: EQUATION_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LivsicReport {
    pub options: LivsicOptions,
    pub obstructions: usize,
    /// Best orbit residual over the searched space, whether or not accepted.
    pub best_orbit_residual: f64,
    pub candidate: Option<Candidate>,
    pub certificate: Option<CoboundaryCertificate>,
}

impl LivsicReport {
    pub fn valid_certificate(&self) -> Option<&CoboundaryCertificate> {
        self.certificate.as_ref().filter(|c| c.valid)
    }
}

/// Orbit obstructions, dependence search and (when a direction survives)
/// the certificate.
pub fn livsic(map: &ExpandingMap, tau: &FiberRotation, opts: &LivsicOptions) -> Result<LivsicReport> {
    let obs = collect_obstructions(map, tau, opts.p_max)?;
    let modes: &[DependenceMode] = match opts.mode {
        DependenceMode::Auto => &[DependenceMode::Integral, DependenceMode::Real],
        DependenceMode::Integral => &[DependenceMode::Integral],
        DependenceMode::Real => &[DependenceMode::Real],
    };
    let mut best_orbit_residual = f64::INFINITY;
    for &m in modes {
        if let Some(c) = detect_dependence(&obs, m, opts.v_max, f64::INFINITY)? {
            best_orbit_residual = best_orbit_residual.min(c.orbit_residual);
        }
    }
    let candidate = detect_dependence(&obs, opts.mode, opts.v_max, opts.orbit_threshold)?;
    let certificate = candidate
        .as_ref()
        .map(|c| build_certificate(map, tau, c, opts.equation_tol))
        .transpose()?;
    Ok(LivsicReport {
        options: *opts,
        obstructions: obs.len(),
        best_orbit_residual,
        candidate,
        certificate,
    })
}
