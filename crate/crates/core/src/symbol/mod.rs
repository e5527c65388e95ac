//! The symbol bound `p̃` of the twisted transfer operators.
//!
//! For a unit direction `n ∈ R^ℓ` the cotangent cocycle is
//! `F_x(ξ) = (D_xT)^t ξ + (D_xτ)^t n`, with iterates
//! `F^n_y = F_y ∘ F_{Ty} ∘ … ∘ F_{T^{n-1}y}`, and
//!
//! ```text
//! p̃_n(x, ξ) = Σ_{T^n y = x} A_n(y) [g(F^n_y ξ) / g(ξ)]^{2s}.
//! ```
//!
//! Since `Σ A_n = 1` and `s < 0`, `p̃ ≤ 1` with equality exactly when no
//! preimage word pushes `ξ` beyond the radius `R` of the weight `g`. Values
//! are therefore carried as `1 − deficit`, with the deficit summed directly
//! so that escapes too small to move `1.0` in floating point are still seen.

mod field;
mod weight;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::density::{weight_A, weight_A1, DensityModel};
use crate::error::{check_budget, Result};
use crate::maps::{ExpandingMap, FiberRotation, PreimageWord};

pub use field::{
    direction_grid, direction_lipschitz, find_n0, ptilde_field, ptilde_fields, DirectionHistory,
    FieldSpec, N0Search,
    PTildeField,
};
pub use weight::{WeightG, R_MARGIN};
pub(crate) use weight::norm;

/// `F_{n,x}(ξ) = (D_xT)^t ξ + (D_xτ)^t n`.
pub fn cocycle_step(
    map: &ExpandingMap,
    tau: &FiberRotation,
    n_dir: &[f64],
    x: &[f64],
    xi: &[f64],
) -> Vec<f64> {
    let dt = map.derivative(x);
    let pull = tau.pullback(n_dir, x);
    (0..map.dim())
        .map(|j| (0..map.dim()).map(|i| dt[(i, j)] * xi[i]).sum::<f64>() + pull[j])
        .collect()
}

/// `W_n(x) = Σ_{k<n} (D_xT^k)^t (D_{T^k x}τ)^t`, a `d × ℓ` matrix.
pub fn w_n(map: &ExpandingMap, tau: &FiberRotation, x: &[f64], n: usize) -> DMatrix<f64> {
    let d = map.dim();
    let mut w = DMatrix::zeros(d, tau.fiber_dim());
    let mut p = DMatrix::<f64>::identity(d, d);
    let mut z = x.to_vec();
    for _ in 0..n {
        w += &p * tau.jacobian(&z).transpose();
        p = &p * map.derivative(&z).transpose();
        z = map.eval(&z);
    }
    w
}

/// `(D_xT^n)^t`.
pub fn dt_n_transpose(map: &ExpandingMap, x: &[f64], n: usize) -> DMatrix<f64> {
    let d = map.dim();
    let mut p = DMatrix::<f64>::identity(d, d);
    let mut z = x.to_vec();
    for _ in 0..n {
        p = &p * map.derivative(&z).transpose();
        z = map.eval(&z);
    }
    p
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PTilde {
    /// `p̃ = 1 − deficit`.
    pub value: f64,
    /// `Σ A_n(y)(1 − q_y)`, positive exactly when some image leaves the `R`-ball.
    pub deficit: f64,
    /// Largest `|F^n_y ξ|` over the preimage words.
    pub max_image_norm: f64,
}

impl PTilde {
    pub fn escaped(&self) -> bool {
        self.deficit > 0.0
    }
}

/// `1 − [g(η)/g(ξ)]^{2s}` without cancellation.
fn quotient_deficit(g: &WeightG, s: f64, log_g_xi: f64, eta_norm: f64) -> f64 {
    let log_g_eta = g.g0_minus_one(eta_norm).ln_1p();
    -(2.0 * s * (log_g_eta - log_g_xi)).exp_m1()
}

/// Preimage words of depth `n` at `x` stored as affine maps
/// `ξ ↦ M ξ + C n` together with their weights `A_n`.
#[derive(Clone, Debug)]
pub struct LeafCache {
    pub dim: usize,
    pub fiber_dim: usize,
    pub depth: usize,
    /// `(A_n, M (d×d row-major), C (d×ℓ row-major))` in lexicographic word order.
    pub leaves: Vec<(f64, Vec<f64>, Vec<f64>)>,
}

impl LeafCache {
    /// Built by descending the preimage tree from `x`: at a branch `y′` of the
    /// current point, `M ← (D_{y′}T)^t M`, `C ← (D_{y′}T)^t C + (D_{y′}τ)^t`
    /// and the weight picks up the one-step factor `A(y′)`.
    pub fn build(
        map: &ExpandingMap,
        tau: &FiberRotation,
        h: &DensityModel,
        x: &[f64],
        n: usize,
    ) -> Result<Self> {
        check_budget(map.tree_size(n), map.budget())?;
        let d = map.dim();
        let l = tau.fiber_dim();
        let mut eye = vec![0.0; d * d];
        for i in 0..d {
            eye[i * d + i] = 1.0;
        }
        let mut level = vec![(x.to_vec(), 1.0, eye, vec![0.0; d * l])];
        for _ in 0..n {
            let mut next = Vec::with_capacity(level.len() * map.degree());
            for (z, w, m, c) in &level {
                for y in map.inverse_branches(z)? {
                    let dt = map.derivative(&y);
                    let jt = tau.jacobian(&y);
                    let mut m2 = vec![0.0; d * d];
                    let mut c2 = vec![0.0; d * l];
                    for i in 0..d {
                        for k in 0..d {
                            let t = dt[(k, i)];
                            for j in 0..d {
                                m2[i * d + j] += t * m[k * d + j];
                            }
                            for j in 0..l {
                                c2[i * l + j] += t * c[k * l + j];
                            }
                        }
                        for j in 0..l {
                            c2[i * l + j] += jt[(j, i)];
                        }
                    }
                    let w2 = w * weight_A1(map, h, &y);
                    next.push((y, w2, m2, c2));
                }
            }
            level = next;
        }
        Ok(LeafCache {
            dim: d,
            fiber_dim: l,
            depth: n,
            leaves: level.into_iter().map(|(_, w, m, c)| (w, m, c)).collect(),
        })
    }

    /// `C n` for every leaf.
    pub fn offsets(&self, n_dir: &[f64]) -> Vec<Vec<f64>> {
        let (d, l) = (self.dim, self.fiber_dim);
        self.leaves
            .iter()
            .map(|(_, _, c)| {
                (0..d)
                    .map(|i| (0..l).map(|j| c[i * l + j] * n_dir[j]).sum())
                    .collect()
            })
            .collect()
    }

    pub fn evaluate(&self, g: &WeightG, s: f64, offsets: &[Vec<f64>], xi: &[f64]) -> PTilde {
        let d = self.dim;
        let log_g_xi = g.g0_minus_one(norm(xi)).ln_1p();
        let mut deficit = 0.0;
        let mut max_image_norm = 0.0f64;
        let mut eta = vec![0.0; d];
        for ((w, m, _), b) in self.leaves.iter().zip(offsets) {
            for i in 0..d {
                eta[i] = b[i] + (0..d).map(|j| m[i * d + j] * xi[j]).sum::<f64>();
            }
            let en = norm(&eta);
            max_image_norm = max_image_norm.max(en);
            deficit += w * quotient_deficit(g, s, log_g_xi, en);
        }
        PTilde { value: 1.0 - deficit, deficit, max_image_norm }
    }
}

/// `p̃_n(x, ξ)` by recursive descent of the preimage tree.
#[allow(clippy::too_many_arguments)]
pub fn ptilde(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    g: &WeightG,
    s: f64,
    n_dir: &[f64],
    n: usize,
    x: &[f64],
    xi: &[f64],
) -> Result<PTilde> {
    let cache = LeafCache::build(map, tau, h, x, n)?;
    Ok(cache.evaluate(g, s, &cache.offsets(n_dir), xi))
}

/// Independent evaluation of `p̃_n(x, ξ)`: enumerate words, then for each
/// leaf `y` use `A_n(y)` along the forward orbit and
/// `F^n_y ξ = (D_yT^n)^t ξ + W_n(y) n`. Sums `A·q` directly.
#[allow(clippy::too_many_arguments)]
pub fn ptilde_by_words(
    map: &ExpandingMap,
    tau: &FiberRotation,
    h: &DensityModel,
    g: &WeightG,
    s: f64,
    n_dir: &[f64],
    n: usize,
    x: &[f64],
    xi: &[f64],
) -> Result<f64> {
    let g_xi = g.eval(xi);
    let nd = nalgebra::DVector::from_column_slice(n_dir);
    let xv = nalgebra::DVector::from_column_slice(xi);
    let mut acc = 0.0;
    for (_, y) in map.preimage_tree(x, n)? {
        let eta = dt_n_transpose(map, &y, n) * &xv + w_n(map, tau, &y, n) * &nd;
        acc += weight_A(map, h, &y, n) * (g.eval(eta.as_slice()) / g_xi).powf(2.0 * s);
    }
    Ok(acc)
}

/// `F^n` along a single word, as the descent applies it.
pub fn cocycle_along_word(
    map: &ExpandingMap,
    tau: &FiberRotation,
    n_dir: &[f64],
    x: &[f64],
    word: &PreimageWord,
    xi: &[f64],
) -> Result<Vec<f64>> {
    let mut z = x.to_vec();
    let mut eta = xi.to_vec();
    for &j in &word.0 {
        z = map.inverse_branch(&z, j)?;
        eta = cocycle_step(map, tau, n_dir, &z, &eta);
    }
    Ok(eta)
}

/// `((γ+1)/2)^{2s}`, the bound on `p̃` outside the `R`-ball.
pub fn exterior_bound(g: &WeightG, s: f64) -> f64 {
    (0.5 * (g.gamma + 1.0)).powf(2.0 * s)
}
