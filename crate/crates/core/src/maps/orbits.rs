use serde::Serialize;

use super::{torus_distance, wrap, ExpandingMap};
use crate::error::{check_budget, Result};

const CLOSE: f64 = 1e-9;
const CONTRACTION_MAX_ITER: usize = 400;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    /// Exact minimal period.
    pub period: usize,
    /// `x, Tx, …, T^{p-1}x` starting from the lexicographically smallest point.
    pub points: Vec<Vec<f64>>,
}

impl ExpandingMap {
    /// Every periodic orbit of minimal period at most `p_max`, sorted by period
    /// and then by starting point.
    ///
    /// Fixed points of `T^p` are the fixed points of the `N^p` lifted
    /// inverse-branch compositions, which are contractions of `R^d`.
    pub fn periodic_orbits(&self, p_max: usize) -> Result<Vec<PeriodicOrbit>> {
        let total: u128 = (1..=p_max).map(|p| self.tree_size(p)).sum();
        check_budget(total, self.budget())?;

        let mut orbits: Vec<PeriodicOrbit> = Vec::new();
        for p in 1..=p_max {
            let mut fixed: Vec<Vec<f64>> = Vec::new();
            for flat in 0..self.tree_size(p) as usize {
                let word = word_digits(flat, self.degree(), p);
                let x = self.lifted_fixed_point(&word)?;
                if !fixed.iter().any(|f| torus_distance(f, &x) < CLOSE) {
                    fixed.push(x);
                }
            }
            let exact: Vec<Vec<f64>> = fixed
                .into_iter()
                .filter(|x| self.minimal_period(x, p) == p)
                .collect();
            let mut used = vec![false; exact.len()];
            for start in 0..exact.len() {
                if used[start] {
                    continue;
                }
                let mut members = vec![start];
                used[start] = true;
                let mut y = exact[start].clone();
                for _ in 1..p {
                    y = self.eval(&y);
                    let nearest = (0..exact.len())
                        .min_by(|&a, &b| {
                            torus_distance(&exact[a], &y).total_cmp(&torus_distance(&exact[b], &y))
                        })
                        .expect("orbit members are fixed points of T^p");
                    used[nearest] = true;
                    members.push(nearest);
                    y = exact[nearest].clone();
                }
                let points: Vec<Vec<f64>> = members.iter().map(|&i| exact[i].clone()).collect();
                orbits.push(canonical_rotation(p, points));
            }
        }
        orbits.sort_by(|a, b| {
            a.period
                .cmp(&b.period)
                .then_with(|| lex_cmp(&a.points[0], &b.points[0]))
        });
        Ok(orbits)
    }

    fn lifted_fixed_point(&self, word: &[usize]) -> Result<Vec<f64>> {
        let mut x = vec![0.5; self.dim()];
        for _ in 0..CONTRACTION_MAX_ITER {
            let mut y = x.clone();
            for &j in word {
                y = self.inverse_branch_lift(&y, j)?;
            }
            let delta = y
                .iter()
                .zip(&x)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            x = y;
            if delta < 1e-15 {
                break;
            }
        }
        Ok(x.into_iter().map(snap).collect())
    }

    fn minimal_period(&self, x: &[f64], p: usize) -> usize {
        let mut y = x.to_vec();
        for q in 1..=p {
            y = self.eval(&y);
            if p.is_multiple_of(q) && torus_distance(&y, x) < CLOSE {
                return q;
            }
        }
        p
    }
}

fn snap(v: f64) -> f64 {
    let w = wrap(v);
    if w < 1e-12 || 1.0 - w < 1e-12 {
        0.0
    } else {
        w
    }
}

fn word_digits(mut flat: usize, base: usize, len: usize) -> Vec<usize> {
    let mut w = vec![0; len];
    for slot in w.iter_mut().rev() {
        *slot = flat % base;
        flat /= base;
    }
    w
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

fn canonical_rotation(period: usize, mut points: Vec<Vec<f64>>) -> PeriodicOrbit {
    let start = (0..points.len())
        .min_by(|&a, &b| lex_cmp(&points[a], &points[b]))
        .unwrap_or(0);
    points.rotate_left(start);
    PeriodicOrbit { period, points }
}
