use serde::Serialize;

use crate::maps::{ExpandingMap, FiberRotation};

/// Safety factor on the lower bound for `R`.
pub const R_MARGIN: f64 = 1.01;

/// Radial weight `g(ξ) = g₀(|ξ|)`: `1` up to `R`, `t` beyond `(γ+1)R/2`,
/// and a clamped cubic Hermite blend in between.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightG {
    pub r: f64,
    pub gamma: f64,
    /// Right end `(γ+1)R/2` of the blend.
    pub b: f64,
}

impl WeightG {
    /// `R = 1.01·max{1, max{1, 2‖Dτ‖}/(γ−1)}`.
    pub fn new(gamma: f64, dtau_sup: f64) -> Self {
        assert!(gamma > 1.0, "expansion constant must exceed 1");
        let bound = 1.0f64.max(1.0f64.max(2.0 * dtau_sup) / (gamma - 1.0));
        Self::with_radius(gamma, R_MARGIN * bound)
    }

    pub fn for_system(map: &ExpandingMap, tau: &FiberRotation) -> Self {
        Self::new(map.gamma(), tau.dtau_sup())
    }

    pub fn with_radius(gamma: f64, r: f64) -> Self {
        WeightG { r, gamma, b: 0.5 * (gamma + 1.0) * r }
    }

    /// `g₀(t)` for `t ≥ 0`.
    pub fn g0(&self, t: f64) -> f64 {
        if t <= self.r {
            return 1.0;
        }
        if t >= self.b {
            return t;
        }
        let h = self.b - self.r;
        let u = (t - self.r) / h;
        let (u2, u3) = (u * u, u * u * u);
        // Hermite basis: value 1 / slope 0 at R, value b / slope 1 at b
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 + h01 * self.b + h11 * h
    }

    /// `g₀(t) − 1`, accurate when the blend is barely entered.
    pub fn g0_minus_one(&self, t: f64) -> f64 {
        if t <= self.r {
            return 0.0;
        }
        if t >= self.b {
            return t - 1.0;
        }
        let h = self.b - self.r;
        let u = (t - self.r) / h;
        let (u2, u3) = (u * u, u * u * u);
        (-2.0 * u3 + 3.0 * u2) * (self.b - 1.0) + (u3 - u2) * h
    }

    pub fn g0_derivative(&self, t: f64) -> f64 {
        if t <= self.r {
            return 0.0;
        }
        if t >= self.b {
            return 1.0;
        }
        let h = self.b - self.r;
        let u = (t - self.r) / h;
        ((-6.0 * u * u + 6.0 * u) * (self.b - 1.0) + (3.0 * u * u - 2.0 * u) * h) / h
    }

    /// Sup of `|g₀′|` over the blend, sampled finely.
    pub fn derivative_bound(&self) -> f64 {
        let n = 4096;
        (0..=n)
            .map(|i| self.g0_derivative(self.r + (self.b - self.r) * i as f64 / n as f64))
            .fold(1.0, f64::max)
    }

    pub fn eval(&self, xi: &[f64]) -> f64 {
        self.g0(norm(xi))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piecewise_values() {
        let g = WeightG::new(2.0, std::f64::consts::TAU);
        assert_eq!(g.g0(g.r / 2.0), 1.0);
        assert_eq!(g.g0(2.0 * g.r), 2.0 * g.r);
        let mid = 0.5 * (g.r + g.b);
        let v = g.g0(mid);
        assert!(v > 1.0 && v < mid);
    }

    #[test]
    fn radius_formula() {
        let g = WeightG::new(2.0, 3.0);
        assert!((g.r - 1.01 * 6.0).abs() < 1e-12);
        let g = WeightG::new(3.0, 0.1);
        assert!((g.r - 1.01).abs() < 1e-12);
    }

    #[test]
    fn blend_is_monotone_c1_and_enveloped() {
        for &(gamma, dt) in &[(1.05, 0.0), (2.0, 6.3), (3.0, 0.2), (1.2, 1.0), (4.0, 40.0)] {
            let g = WeightG::new(gamma, dt);
            let n = 20_000;
            let mut prev = g.g0(g.r);
            for i in 1..=n {
                let t = g.r + (g.b - g.r) * i as f64 / n as f64;
                let v = g.g0(t);
                assert!(v > prev, "not increasing at {t}");
                assert!(v >= 1.0 && v <= t + 1e-12);
                assert!((g.g0_minus_one(t) - (v - 1.0)).abs() < 1e-9 * t);
                prev = v;
            }
            // second-order one-sided differences on each side of a knot
            let e = 1e-5;
            for knot in [g.r, g.b] {
                let left = (3.0 * g.g0(knot) - 4.0 * g.g0(knot - e) + g.g0(knot - 2.0 * e)) / (2.0 * e);
                let right = (-3.0 * g.g0(knot) + 4.0 * g.g0(knot + e) - g.g0(knot + 2.0 * e)) / (2.0 * e);
                assert!((left - right).abs() < 1e-6, "slope jump at {knot}");
            }
        }
    }
}
