use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{exterior_bound, LeafCache, WeightG};
use crate::density::DensityModel;
use crate::error::{Error, Result};
use crate::fft::UniformGrid;
use crate::maps::{ExpandingMap, FiberRotation};

/// Sampling of `T^d × {|ξ| ≤ R}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldSpec {
    /// Uniform grid points per base axis.
    pub x_points: usize,
    /// Points per covector axis across `[−R, R]`; 129 gives spacing `R/64`.
    pub xi_points: usize,
}

impl FieldSpec {
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => FieldSpec { x_points: 32, xi_points: 129 },
            _ => FieldSpec { x_points: 8, xi_points: 33 },
        }
    }

    fn xi_grid(&self, dim: usize, r: f64) -> Vec<Vec<f64>> {
        let m = self.xi_points.max(2);
        let step = 2.0 * r / (m - 1) as f64;
        let total = m.pow(dim as u32);
        (0..total)
            .filter_map(|mut idx| {
                let mut xi = vec![0.0; dim];
                for slot in xi.iter_mut().rev() {
                    *slot = -r + step * (idx % m) as f64;
                    idx /= m;
                }
                (super::norm(&xi) <= r * (1.0 + 1e-12)).then_some(xi)
            })
            .collect()
    }
}

/// Samples of `p̃_n(·, ·)` for one direction.
#[derive(Clone, Debug, Serialize)]
pub struct PTildeField {
    pub direction: Vec<f64>,
    pub n_steps: usize,
    pub r: f64,
    pub xs: Vec<Vec<f64>>,
    pub xis: Vec<Vec<f64>>,
    /// Row-major over `(x, ξ)`.
    pub values: Vec<f64>,
    pub deficits: Vec<f64>,
    pub grid_sup: f64,
    pub exterior_bound: f64,
    /// `max(grid_sup, exterior_bound)`.
    pub sup: f64,
    /// Fraction of grid points where some preimage word leaves the `R`-ball.
    pub escape_fraction: f64,
    /// Fraction where every word stays inside (`p̃ = 1`).
    pub trapped_fraction: f64,
    /// Bound on `|∂_ξ p̃|` inside the ball.
    pub lipschitz_xi: f64,
    /// `grid_sup` plus the Lipschitz allowance over half a ξ-cell, capped at 1.
    pub inflated_sup: f64,
}

/// `p̃_n` fields for several directions, sharing the preimage tree of each `x`.
#[allow(clippy::too_many_arguments)]
pub fn ptilde_fields(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    g: &WeightG,
    s: f64,
    dirs: &[Vec<f64>],
    n: usize,
    spec: &FieldSpec,
) -> Result<Vec<PTildeField>> {
    let d = map.dim();
    let xs = UniformGrid::new(d, spec.x_points.max(1)).points();
    let xis = spec.xi_grid(d, g.r);
    let per_x: Vec<Vec<Vec<(f64, f64)>>> = xs
        .par_iter()
        .map(|x| {
            let cache = LeafCache::build(map, tau, h, x, n)?;
            Ok(dirs
                .iter()
                .map(|dir| {
                    let off = cache.offsets(dir);
                    xis.iter()
                        .map(|xi| {
                            let p = cache.evaluate(g, s, &off, xi);
                            (p.value, p.deficit)
                        })
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    let ext = exterior_bound(g, s);
    let step = 2.0 * g.r / (spec.xi_points.max(2) - 1) as f64;
    let lipschitz_xi = 2.0 * s.abs() * g.derivative_bound() * map.dt_sup().powi(n as i32);
    let allowance = lipschitz_xi * 0.5 * step * (d as f64).sqrt();
    let total = (xs.len() * xis.len()) as f64;
    Ok(dirs
        .iter()
        .enumerate()
        .map(|(k, dir)| {
            let mut values = Vec::with_capacity(xs.len() * xis.len());
            let mut deficits = Vec::with_capacity(values.capacity());
            for row in &per_x {
                for &(v, def) in &row[k] {
                    values.push(v);
                    deficits.push(def);
                }
            }
            let grid_sup = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let escaped = deficits.iter().filter(|&&v| v > 0.0).count() as f64;
            PTildeField {
                direction: dir.clone(),
                n_steps: n,
                r: g.r,
                xs: xs.clone(),
                xis: xis.clone(),
                values,
                deficits,
                grid_sup,
                exterior_bound: ext,
                sup: grid_sup.max(ext),
                escape_fraction: escaped / total,
                trapped_fraction: 1.0 - escaped / total,
                lipschitz_xi,
                inflated_sup: (grid_sup + allowance).min(1.0),
            }
        })
        .collect())
}

#[allow(clippy::too_many_arguments)]
pub fn ptilde_field(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    g: &WeightG,
    s: f64,
    n_dir: &[f64],
    n: usize,
    spec: &FieldSpec,
) -> Result<PTildeField> {
    Ok(ptilde_fields(map, tau, h, g, s, &[n_dir.to_vec()], n, spec)?.remove(0))
}

/// Unit directions in `R^ℓ` with angular spacing about `resolution_deg`:
/// `±1` for `ℓ = 1`, equally spaced angles for `ℓ = 2`, a Fibonacci sphere for `ℓ = 3`.
pub fn direction_grid(fiber_dim: usize, resolution_deg: f64) -> Result<Vec<Vec<f64>>> {
    if !(resolution_deg > 0.0 && resolution_deg <= 180.0) {
        return Err(Error::InvalidInput(format!(
            "direction resolution {resolution_deg}° must lie in (0, 180]"
        )));
    }
    let delta = resolution_deg.to_radians();
    match fiber_dim {
        1 => Ok(vec![vec![1.0], vec![-1.0]]),
        2 => {
            let m = (std::f64::consts::TAU / delta).ceil() as usize;
            Ok((0..m)
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / m as f64;
                    vec![a.cos(), a.sin()]
                })
                .collect())
        }
        3 => {
            let m = ((4.0 * std::f64::consts::PI) / (delta * delta)).ceil().max(2.0) as usize;
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            Ok((0..m)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / m as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * i as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect())
        }
        _ => Err(Error::InvalidInput(format!(
            "direction grids are available for fiber dimension 1 to 3, not {fiber_dim}"
        ))),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DirectionHistory {
    pub dir: Vec<f64>,
    /// `sup p̃_n` for `n = 1, 2, …`.
    pub sup_history: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct N0Search {
    pub found: bool,
    pub n0: Option<usize>,
    pub ptilde0: Option<f64>,
    pub n_max: usize,
    pub r: f64,
    pub s: f64,
    pub exterior_bound: f64,
    pub margin: f64,
    /// Largest angular gap between neighbouring directions (radians).
    pub direction_spacing: f64,
    /// Per `n`: bound on the change of `p̃_n` per unit change of direction.
    pub direction_lipschitz: Vec<f64>,
    /// Heuristic rate proxy `p̃₀^{1/(2n₀)}`; not a rigorous contraction rate.
    pub rate_proxy: Option<f64>,
    pub per_direction: Vec<DirectionHistory>,
    /// Field of the worst direction at the last depth computed.
    #[serde(skip)]
    pub worst_field: Option<PTildeField>,
}

/// Bound on `|p̃_n(x,ξ; n) − p̃_n(x,ξ; n′)| / |n − n′|` inside the `R`-ball:
/// `2|s| ‖g′‖ sup‖W_n‖` with `sup‖W_n‖ ≤ ‖Dτ‖ Σ_{k<n} ‖DT‖^k`.
pub fn direction_lipschitz(map: &ExpandingMap, tau: &FiberRotation, g: &WeightG, s: f64, n: usize) -> f64 {
    let w: f64 = (0..n).map(|k| map.dt_sup().powi(k as i32)).sum::<f64>() * tau.dtau_sup();
    2.0 * s.abs() * g.derivative_bound() * w
}

/// Smallest `n ≤ n_max` with `max_dir sup p̃_n < 1 − margin`.
#[allow(clippy::too_many_arguments)]
pub fn find_n0(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    s: f64,
    dirs: &[Vec<f64>],
    n_max: usize,
    spec: &FieldSpec,
    margin: f64,
) -> Result<N0Search> {
    if s.is_nan() || s >= 0.0 {
        return Err(Error::InvalidInput(format!("Sobolev order s = {s} must be negative")));
    }
    if dirs.is_empty() {
        return Err(Error::InvalidInput("direction grid is empty".into()));
    }
    let g = WeightG::for_system(map, tau);
    let mut per_direction: Vec<DirectionHistory> = dirs
        .iter()
        .map(|d| DirectionHistory { dir: d.clone(), sup_history: Vec::new() })
        .collect();
    let mut lips = Vec::new();
    let mut found = None;
    let mut worst_field = None;
    for n in 1..=n_max {
        let fields = ptilde_fields(map, tau, h, &g, s, dirs, n, spec)?;
        let mut worst = 0usize;
        for (k, f) in fields.iter().enumerate() {
            per_direction[k].sup_history.push(f.sup);
            if f.sup > fields[worst].sup {
                worst = k;
            }
        }
        lips.push(direction_lipschitz(map, tau, &g, s, n));
        let top = fields[worst].sup;
        worst_field = fields.into_iter().nth(worst);
        if top < 1.0 - margin {
            found = Some((n, top));
            break;
        }
    }
    Ok(N0Search {
        found: found.is_some(),
        n0: found.map(|f| f.0),
        ptilde0: found.map(|f| f.1),
        n_max,
        r: g.r,
        s,
        exterior_bound: exterior_bound(&g, s),
        margin,
        direction_spacing: max_gap(dirs),
        direction_lipschitz: lips,
        rate_proxy: found.map(|(n0, p)| p.powf(1.0 / (2.0 * n0 as f64))),
        per_direction,
        worst_field,
    })
}

/// Largest angle from any direction to its nearest neighbour.
fn max_gap(dirs: &[Vec<f64>]) -> f64 {
    if dirs.len() < 2 {
        return std::f64::consts::PI;
    }
    dirs.iter()
        .enumerate()
        .map(|(i, a)| {
            dirs.iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, b)| {
                    let c: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
                    c.clamp(-1.0, 1.0).acos()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
