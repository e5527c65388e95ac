//! Fiberwise twisted operators as truncated Fourier–Galerkin matrices.
//!
//! Writing functions on `T^d × T^ℓ` as `Σ_ν φ_ν(x) e^{2πiν·y}`, the Koopman
//! operator of the skew product acts on the `ν`-th coefficient by
//! `F̂_ν φ = (φ∘T)·e^{2πiν·τ}` and its Lebesgue dual by
//! `F̂′_ν ψ(x) = Σ_{Ty=x} e^{2πiν·τ(y)} ψ(y) / |Jac T(y)|`. Both are
//! represented in the basis `e^{2πiξ·x}`, `|ξ|_∞ ≤ K`, with
//! `M[ξ, ξ′] = ⟨e_ξ, F̂ e_ξ′⟩`.
//!
//! Matrix entries do not depend on `K`, so the operator at `K/2` is the
//! principal sub-block of the operator at `K`.

mod assemble;
mod spectrum;
mod weight;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use assemble::{
    assemble_koopman, assemble_transfer, assembly_residual, duality_residual, stationary_residual,
    AliasingWarning, MAX_BASIS,
};
pub use spectrum::{
    eigenvalues, leading_eigenpair, spectral_radius, spectral_radius_with, weighted_norm_growth,
    NormGrowth, SpectralEstimate, GELFAND_WINDOW,
};
pub use weight::{SobolevWeight, WeightStyle, DEFAULT_S};
pub(crate) use spectrum::ls_slope;

/// Frequencies `ξ ∈ Z^d` with `|ξ|_∞ ≤ K`, last axis fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FrequencyBox {
    pub dim: usize,
    pub k: usize,
}

impl FrequencyBox {
    pub fn new(dim: usize, k: usize) -> Self {
        FrequencyBox { dim, k }
    }

    pub fn side(&self) -> usize {
        2 * self.k + 1
    }

    pub fn len(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn freq(&self, mut idx: usize) -> Vec<i64> {
        let side = self.side();
        let mut out = vec![0i64; self.dim];
        for slot in out.iter_mut().rev() {
            *slot = (idx % side) as i64 - self.k as i64;
            idx /= side;
        }
        out
    }

    pub fn index(&self, xi: &[i64]) -> Option<usize> {
        let k = self.k as i64;
        let mut idx = 0usize;
        for &v in xi {
            if v.abs() > k {
                return None;
            }
            idx = idx * self.side() + (v + k) as usize;
        }
        Some(idx)
    }

    pub fn zero_index(&self) -> usize {
        self.index(&vec![0; self.dim]).expect("zero is in every box")
    }

    /// Positions of the frequencies of a smaller box inside this one.
    pub fn sub_indices(&self, k: usize) -> Vec<usize> {
        let inner = FrequencyBox::new(self.dim, k.min(self.k));
        (0..inner.len())
            .map(|i| self.index(&inner.freq(i)).expect("inner box is contained"))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// `φ ↦ (φ∘T) e^{2πiν·τ}`.
    Koopman,
    /// The Lebesgue dual, a twisted transfer operator.
    #[default]
    Transfer,
}

#[derive(Clone, Debug)]
pub struct TwistedGalerkinOperator {
    pub nu: Vec<i64>,
    pub kind: OperatorKind,
    pub basis: FrequencyBox,
    pub matrix: DMatrix<Complex64>,
    pub weight: SobolevWeight,
    pub warnings: Vec<AliasingWarning>,
}

impl TwistedGalerkinOperator {
    pub fn k(&self) -> usize {
        self.basis.k
    }

    pub fn with_weight(mut self, weight: SobolevWeight) -> Self {
        assert_eq!(weight.diagonal.len(), self.basis.len(), "weight does not match basis");
        self.weight = weight;
        self
    }

    /// `W M W^{-1}` with `W` the diagonal weight.
    pub fn weighted_matrix(&self) -> DMatrix<Complex64> {
        let w = &self.weight.diagonal;
        DMatrix::from_fn(self.matrix.nrows(), self.matrix.ncols(), |i, j| {
            self.matrix[(i, j)] * (w[i] / w[j])
        })
    }

    /// The same operator truncated at a smaller radius.
    pub fn truncate(&self, k: usize) -> TwistedGalerkinOperator {
        let idx = self.basis.sub_indices(k);
        let matrix = DMatrix::from_fn(idx.len(), idx.len(), |i, j| self.matrix[(idx[i], idx[j])]);
        TwistedGalerkinOperator {
            nu: self.nu.clone(),
            kind: self.kind,
            basis: FrequencyBox::new(self.basis.dim, k.min(self.basis.k)),
            matrix,
            weight: self.weight.restricted(&idx),
            warnings: self.warnings.clone(),
        }
    }

    /// `M c` for a coefficient vector in this basis.
    pub fn apply(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let v = nalgebra::DVector::from_column_slice(coeffs);
        (&self.matrix * v).iter().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_indexing_round_trips() {
        let b = FrequencyBox::new(2, 3);
        assert_eq!(b.len(), 49);
        for i in 0..b.len() {
            assert_eq!(b.index(&b.freq(i)), Some(i));
        }
        assert_eq!(b.freq(b.zero_index()), vec![0, 0]);
        assert_eq!(b.index(&[4, 0]), None);
        let sub = b.sub_indices(1);
        assert_eq!(sub.len(), 9);
        assert_eq!(b.freq(sub[0]), vec![-1, -1]);
    }
}
