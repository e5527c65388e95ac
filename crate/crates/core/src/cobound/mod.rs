//! Essential-coboundary detection: `v·τ = c + u − u∘T`.
//!
//! Telescoping over a periodic orbit of period `p` forces `v·Σ τ = p c`, so
//! orbit sums give a finite-dimensional test for candidate `(v, c)`. A
//! candidate is then certified by building `u` from the derivative series
//! `V` and checking the equation on a grid.

mod certificate;
mod vfield;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::{ExpandingMap, FiberRotation};

pub use certificate::{
    build_certificate, build_semiconjugacy, livsic, CertificateResiduals, CoboundaryCertificate,
    LivsicOptions, LivsicReport, SemiconjugacyReport,
};
pub use vfield::{
    check_exactness, reconstruct_u, sample_vfield, vfield, ExactnessReport, Itinerary, VField,
    VGrid,
};

pub const DEFAULT_P_MAX: usize = 8;
pub const DEFAULT_V_MAX: i64 = 12;
pub const ORBIT_THRESHOLD: f64 = 1e-6;
pub const EQUATION_TOL: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitObstruction {
    pub id: usize,
    pub period: usize,
    pub points: Vec<Vec<f64>>,
    /// `Σ_{i<p} τ(x_i)`.
    pub sum: Vec<f64>,
}

pub fn orbit_sum(tau: &FiberRotation, points: &[Vec<f64>]) -> Vec<f64> {
    let mut acc = vec![0.0; tau.fiber_dim()];
    for x in points {
        for (a, v) in acc.iter_mut().zip(tau.eval(x)) {
            *a += v;
        }
    }
    acc
}

/// One obstruction per periodic orbit of period `≤ p_max`.
pub fn collect_obstructions(
    map: &ExpandingMap,
    tau: &FiberRotation,
    p_max: usize,
) -> Result<Vec<OrbitObstruction>> {
    Ok(map
        .periodic_orbits(p_max)?
        .into_iter()
        .enumerate()
        .map(|(id, o)| OrbitObstruction {
            id,
            period: o.period,
            sum: orbit_sum(tau, &o.points),
            points: o.points,
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependenceMode {
    /// Unit `v ∈ R^ℓ`.
    Real,
    /// Primitive `v ∈ Z^ℓ` with `‖v‖_∞ ≤ V_max`.
    Integral,
    /// Integral search first, then real.
    #[default]
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Candidate {
    pub v: Vec<f64>,
    pub integral: bool,
    /// Fitted constant for this `v` (not reduced mod 1).
    pub c: f64,
    /// `sqrt(Σ (v̂·S_o − p_o ĉ)²) / Σ p_o` with `v̂ = v/|v|`.
    pub orbit_residual: f64,
}

fn fit(obs: &[OrbitObstruction], v: &[f64]) -> (f64, f64) {
    let scale = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let proj: Vec<f64> = obs
        .iter()
        .map(|o| o.sum.iter().zip(v).map(|(s, w)| s * w).sum::<f64>() / scale)
        .collect();
    let pp: f64 = obs.iter().map(|o| (o.period * o.period) as f64).sum();
    let c_unit = obs.iter().zip(&proj).map(|(o, a)| o.period as f64 * a).sum::<f64>() / pp;
    let ss: f64 = obs
        .iter()
        .zip(&proj)
        .map(|(o, a)| (a - o.period as f64 * c_unit).powi(2))
        .sum();
    let total: f64 = obs.iter().map(|o| o.period as f64).sum();
    (c_unit * scale, ss.sqrt() / total)
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn integer_vectors(l: usize, v_max: i64) -> Vec<Vec<i64>> {
    let side = (2 * v_max + 1) as usize;
    (0..side.pow(l as u32))
        .filter_map(|mut idx| {
            let mut v = vec![0i64; l];
            for slot in v.iter_mut().rev() {
                *slot = (idx % side) as i64 - v_max;
                idx /= side;
            }
            let first = v.iter().find(|&&a| a != 0).copied()?;
            let g = v.iter().fold(0, |acc, &a| gcd(acc, a));
            (first > 0 && g == 1).then_some(v)
        })
        .collect()
}

/// Best `(v, c)` explaining the orbit sums, or `None` above `threshold`.
pub fn detect_dependence(
    obs: &[OrbitObstruction],
    mode: DependenceMode,
    v_max: i64,
    threshold: f64,
) -> Result<Option<Candidate>> {
    let l = obs.first().map(|o| o.sum.len()).unwrap_or(0);
    if obs.len() < l + 2 {
        return Err(Error::InvalidInput(format!(
            "{} orbit obstructions are too few for fiber dimension {l}; raise p_max",
            obs.len()
        )));
    }
    let best = match mode {
        DependenceMode::Real => Some(real_candidate(obs, l)),
        DependenceMode::Integral => integral_candidate(obs, l, v_max),
        DependenceMode::Auto => match integral_candidate(obs, l, v_max) {
            Some(c) if c.orbit_residual <= threshold => Some(c),
            _ => Some(real_candidate(obs, l)),
        },
    };
    Ok(best.filter(|c| c.orbit_residual <= threshold))
}

fn real_candidate(obs: &[OrbitObstruction], l: usize) -> Candidate {
    let m = obs.len();
    let p: Vec<f64> = obs.iter().map(|o| o.period as f64).collect();
    let pp: f64 = p.iter().map(|a| a * a).sum();
    // (I − p p^t/|p|²) S
    let s = DMatrix::from_fn(m, l, |i, j| obs[i].sum[j]);
    let mut proj = s.clone();
    for j in 0..l {
        let dot: f64 = (0..m).map(|i| p[i] * s[(i, j)]).sum::<f64>() / pp;
        for i in 0..m {
            proj[(i, j)] -= p[i] * dot;
        }
    }
    let svd = proj.svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let k = (0..l)
        .min_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]))
        .unwrap_or(0);
    let mut v: Vec<f64> = (0..l).map(|j| vt[(k, j)]).collect();
    if v.iter().find(|a| a.abs() > 1e-9).is_some_and(|&a| a < 0.0) {
        v.iter_mut().for_each(|a| *a = -*a);
    }
    let (c, orbit_residual) = fit(obs, &v);
    let integral = v.iter().all(|a| (a - a.round()).abs() < 1e-12);
    if integral {
        v.iter_mut().for_each(|a| *a = a.round());
    }
    Candidate { v, integral, c, orbit_residual }
}

fn integral_candidate(obs: &[OrbitObstruction], l: usize, v_max: i64) -> Option<Candidate> {
    integer_vectors(l, v_max.max(1))
        .into_iter()
        .map(|iv| {
            let v: Vec<f64> = iv.iter().map(|&a| a as f64).collect();
            let (c, orbit_residual) = fit(obs, &v);
            Candidate { v, integral: true, c, orbit_residual }
        })
        .min_by(|a, b| a.orbit_residual.total_cmp(&b.orbit_residual))
}
