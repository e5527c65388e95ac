//! Trigonometric polynomials on `T^d = R^d / Z^d`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

const TWO_PI: f64 = 2.0 * PI;

/// One real term `cos·cos(2πk·x) + sin·sin(2πk·x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealTerm {
    pub freq: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

impl RealTerm {
    pub fn cos(freq: Vec<i64>, a: f64) -> Self {
        RealTerm { freq, cos: a, sin: 0.0 }
    }

    pub fn sin(freq: Vec<i64>, b: f64) -> Self {
        RealTerm { freq, cos: 0.0, sin: b }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub freq: Vec<i64>,
    #[serde(default)]
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Finite Fourier table `Σ c_k e^{2πi k·x}`, sorted by frequency.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPoly {
    dim: usize,
    terms: Vec<(Vec<i64>, Complex64)>,
}

impl TrigPoly {
    pub fn new<I>(dim: usize, terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<i64>, Complex64)>,
    {
        let mut raw: Vec<(Vec<i64>, Complex64)> = terms.into_iter().collect();
        for (k, _) in &raw {
            assert_eq!(k.len(), dim, "frequency vector has wrong dimension");
        }
        raw.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(Vec<i64>, Complex64)> = Vec::with_capacity(raw.len());
        for (k, c) in raw {
            match merged.last_mut() {
                Some((last, acc)) if *last == k => *acc += c,
                _ => merged.push((k, c)),
            }
        }
        merged.retain(|(_, c)| *c != Complex64::new(0.0, 0.0));
        TrigPoly { dim, terms: merged }
    }

    pub fn zero(dim: usize) -> Self {
        TrigPoly { dim, terms: Vec::new() }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        TrigPoly::new(dim, [(vec![0; dim], Complex64::new(c, 0.0))])
    }

    pub fn from_real_terms(dim: usize, terms: &[RealTerm]) -> Self {
        let mut out = Vec::with_capacity(2 * terms.len());
        for t in terms {
            assert_eq!(t.freq.len(), dim, "frequency vector has wrong dimension");
            if t.freq.iter().all(|&k| k == 0) {
                out.push((t.freq.clone(), Complex64::new(t.cos, 0.0)));
            } else {
                let neg: Vec<i64> = t.freq.iter().map(|k| -k).collect();
                out.push((t.freq.clone(), Complex64::new(0.5 * t.cos, -0.5 * t.sin)));
                out.push((neg, Complex64::new(0.5 * t.cos, 0.5 * t.sin)));
            }
        }
        TrigPoly::new(dim, out)
    }

    pub fn from_coefficients(dim: usize, coeffs: &[Coefficient]) -> Self {
        TrigPoly::new(
            dim,
            coeffs
                .iter()
                .map(|c| (c.freq.clone(), Complex64::new(c.re, c.im))),
        )
    }

    pub fn coefficients(&self) -> Vec<Coefficient> {
        self.terms
            .iter()
            .map(|(k, c)| Coefficient {
                freq: k.clone(),
                re: c.re,
                im: c.im,
            })
            .collect()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Vec<i64>, Complex64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, k: &[i64]) -> Complex64 {
        match self.terms.binary_search_by(|(f, _)| f.as_slice().cmp(k)) {
            Ok(i) => self.terms[i].1,
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Largest `|k|_∞` among the stored frequencies.
    pub fn max_freq(&self) -> i64 {
        self.terms
            .iter()
            .map(|(k, _)| k.iter().map(|v| v.abs()).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = Complex64::new(0.0, 0.0);
        for (k, c) in &self.terms {
            let phase = TWO_PI * dot_i(k, x);
            acc += c * Complex64::new(phase.cos(), phase.sin());
        }
        acc
    }

    /// Real part of [`TrigPoly::eval`]; exact for Hermitian tables.
    pub fn eval_re(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (k, c) in &self.terms {
            let phase = TWO_PI * dot_i(k, x);
            acc += c.re * phase.cos() - c.im * phase.sin();
        }
        acc
    }

    /// Real gradient of the real part.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (k, c) in &self.terms {
            let phase = TWO_PI * dot_i(k, x);
            // d/dx_j Re(c e^{iθ}) = Re(c · 2πi k_j e^{iθ})
            let s = -(c.re * phase.sin() + c.im * phase.cos()) * TWO_PI;
            for (gj, kj) in g.iter_mut().zip(k) {
                *gj += s * *kj as f64;
            }
        }
        g
    }

    /// `Σ 2π|k| |c_k|`, an upper bound for the gradient norm.
    pub fn gradient_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| TWO_PI * norm_i(k) * c.norm())
            .sum()
    }

    /// `Σ (2π|k|)² |c_k|`, an upper bound for the Hessian norm.
    pub fn hessian_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| (TWO_PI * norm_i(k)).powi(2) * c.norm())
            .sum()
    }

    pub fn sup_bound(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).sum()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(k, c)| {
            let neg: Vec<i64> = k.iter().map(|v| -v).collect();
            (self.coeff(&neg) - c.conj()).norm() <= tol
        })
    }

    /// `x ↦ p(Ax)` for an integer matrix `A`.
    pub fn compose_linear(&self, matrix: &[Vec<i64>]) -> TrigPoly {
        let d = self.dim;
        let terms = self.terms.iter().map(|(k, c)| {
            // (A^t k)_j = Σ_i A_ij k_i
            let kt: Vec<i64> = (0..d)
                .map(|j| (0..d).map(|i| matrix[i][j] * k[i]).sum())
                .collect();
            (kt, *c)
        });
        TrigPoly::new(d, terms)
    }

    pub fn scale(&self, a: f64) -> TrigPoly {
        TrigPoly::new(self.dim, self.terms.iter().map(|(k, c)| (k.clone(), c * a)))
    }

    pub fn add(&self, other: &TrigPoly) -> TrigPoly {
        assert_eq!(self.dim, other.dim);
        TrigPoly::new(
            self.dim,
            self.terms.iter().cloned().chain(other.terms.iter().cloned()),
        )
    }

    pub fn sub(&self, other: &TrigPoly) -> TrigPoly {
        self.add(&other.scale(-1.0))
    }

    /// Pointwise product (coefficient convolution).
    pub fn mul(&self, other: &TrigPoly) -> TrigPoly {
        assert_eq!(self.dim, other.dim);
        let mut out = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (k, a) in &self.terms {
            for (j, b) in &other.terms {
                out.push((k.iter().zip(j).map(|(p, q)| p + q).collect(), a * b));
            }
        }
        TrigPoly::new(self.dim, out)
    }

    /// Drop coefficients of modulus at most `tol`.
    pub fn pruned(&self, tol: f64) -> TrigPoly {
        TrigPoly::new(
            self.dim,
            self.terms.iter().filter(|(_, c)| c.norm() > tol).cloned(),
        )
    }
}

impl Serialize for TrigPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coefficients().serialize(s)
    }
}

fn dot_i(k: &[i64], x: &[f64]) -> f64 {
    k.iter().zip(x).map(|(&a, &b)| a as f64 * b).sum()
}

fn norm_i(k: &[i64]) -> f64 {
    k.iter().map(|&a| (a * a) as f64).sum::<f64>().sqrt()
}
