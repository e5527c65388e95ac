use serde::{Deserialize, Serialize};

use super::FrequencyBox;
use crate::symbol::WeightG;

pub const DEFAULT_S: f64 = -1.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightStyle {
    /// `⟨ν⟩^{-s} ⟨ξ⟩^s`.
    #[default]
    StandardBracket,
    /// `g(ξ/⟦ν⟧)^s`.
    SymbolLambda,
}

/// Diagonal Sobolev weight `w(ξ)` on a frequency box.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SobolevWeight {
    pub s: f64,
    pub nu: Vec<i64>,
    pub style: WeightStyle,
    pub diagonal: Vec<f64>,
}

impl SobolevWeight {
    pub fn standard(s: f64, nu: &[i64], basis: FrequencyBox) -> Self {
        let nu_bracket = (1.0 + norm_sq(nu)).sqrt();
        let diagonal = (0..basis.len())
            .map(|i| {
                let xi = (1.0 + norm_sq(&basis.freq(i))).sqrt();
                nu_bracket.powf(-s) * xi.powf(s)
            })
            .collect();
        SobolevWeight { s, nu: nu.to_vec(), style: WeightStyle::StandardBracket, diagonal }
    }

    pub fn symbol_lambda(s: f64, nu: &[i64], basis: FrequencyBox, g: &WeightG) -> Self {
        let scale = 1.0f64.max(norm_sq(nu).sqrt());
        let diagonal = (0..basis.len())
            .map(|i| {
                let xi: Vec<f64> = basis.freq(i).iter().map(|&v| v as f64 / scale).collect();
                g.eval(&xi).powf(s)
            })
            .collect();
        SobolevWeight { s, nu: nu.to_vec(), style: WeightStyle::SymbolLambda, diagonal }
    }

    pub fn build(
        style: WeightStyle,
        s: f64,
        nu: &[i64],
        basis: FrequencyBox,
        g: &WeightG,
    ) -> Self {
        match style {
            WeightStyle::StandardBracket => Self::standard(s, nu, basis),
            WeightStyle::SymbolLambda => Self::symbol_lambda(s, nu, basis, g),
        }
    }

    pub(crate) fn restricted(&self, idx: &[usize]) -> Self {
        SobolevWeight {
            s: self.s,
            nu: self.nu.clone(),
            style: self.style,
            diagonal: idx.iter().map(|&i| self.diagonal[i]).collect(),
        }
    }

    /// `max_ξ w(ξ)/w′(ξ)` and `max_ξ w′(ξ)/w(ξ)`.
    pub fn comparison(&self, other: &SobolevWeight) -> (f64, f64) {
        self.diagonal.iter().zip(&other.diagonal).fold((0.0, 0.0), |(a, b), (p, q)| {
            (f64::max(a, p / q), f64::max(b, q / p))
        })
    }
}

fn norm_sq(v: &[i64]) -> f64 {
    v.iter().map(|&a| (a * a) as f64).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_bracket_values() {
        let basis = FrequencyBox::new(1, 2);
        let w = SobolevWeight::standard(-1.0, &[1], basis);
        let at = |xi: i64| w.diagonal[basis.index(&[xi]).unwrap()];
        assert!((at(0) - 2f64.sqrt()).abs() < 1e-15);
        assert!((at(2) - (2.0f64 / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn symbol_lambda_is_one_inside_radius() {
        let basis = FrequencyBox::new(1, 8);
        let g = WeightG::with_radius(2.0, 5.0);
        let w = SobolevWeight::symbol_lambda(-1.0, &[2], basis, &g);
        // |ξ/2| ≤ 4 < R
        assert!(w.diagonal.iter().all(|&v| v == 1.0));
    }
}
