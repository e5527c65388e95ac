//! Uniform grids on `T^d` and the discrete Fourier transforms over them.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::trig::TrigPoly;

/// Tensor grid with `n` points per axis, `x_j = j / n`; the last axis varies fastest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UniformGrid {
    pub dim: usize,
    pub n: usize,
}

impl UniformGrid {
    pub fn new(dim: usize, n: usize) -> Self {
        assert!(dim >= 1 && n >= 1);
        UniformGrid { dim, n }
    }

    pub fn len(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for axis in (0..self.dim).rev() {
            out[axis] = idx % self.n;
            idx /= self.n;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        self.multi_index(idx)
            .into_iter()
            .map(|j| j as f64 / self.n as f64)
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Signed frequency of FFT bin `i`; the Nyquist bin maps to `-n/2`.
    pub fn freq_of_bin(&self, i: usize) -> i64 {
        if i < self.n.div_ceil(2) {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    pub fn bin_of_freq(&self, k: i64) -> Option<usize> {
        let n = self.n as i64;
        if 2 * k.abs() >= n {
            return None;
        }
        Some(k.rem_euclid(n) as usize)
    }

    /// Flat spectrum index of a frequency vector, if it lies strictly below Nyquist.
    pub fn spectrum_index(&self, k: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for &kj in k {
            idx = idx * self.n + self.bin_of_freq(kj)?;
        }
        Some(idx)
    }
}

/// Normalized forward transform: `c_k = n^{-d} Σ_j f(x_j) e^{-2πi k·x_j}`.
pub fn forward(grid: UniformGrid, values: &[Complex64]) -> Vec<Complex64> {
    let mut data = values.to_vec();
    transform_axes(grid, &mut data, false);
    let scale = 1.0 / grid.len() as f64;
    data.iter_mut().for_each(|c| *c *= scale);
    data
}

pub fn forward_real(grid: UniformGrid, values: &[f64]) -> Vec<Complex64> {
    let data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    forward(grid, &data)
}

/// Synthesis `f(x_j) = Σ_k c_k e^{2πi k·x_j}` from a full spectrum.
pub fn inverse(grid: UniformGrid, spectrum: &[Complex64]) -> Vec<Complex64> {
    let mut data = spectrum.to_vec();
    transform_axes(grid, &mut data, true);
    data
}

fn transform_axes(grid: UniformGrid, data: &mut [Complex64], inverse: bool) {
    assert_eq!(data.len(), grid.len());
    let n = grid.n;
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..grid.dim {
        let stride = n.pow((grid.dim - 1 - axis) as u32);
        let outer = grid.len() / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for (j, slot) in line.iter_mut().enumerate() {
                    *slot = data[base + j * stride];
                }
                fft.process(&mut line);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }
}

/// Trigonometric interpolant of grid samples, Nyquist modes dropped.
pub fn interpolant(grid: UniformGrid, values: &[Complex64]) -> TrigPoly {
    let spec = forward(grid, values);
    spectrum_to_poly(grid, &spec)
}

pub fn interpolant_real(grid: UniformGrid, values: &[f64]) -> TrigPoly {
    let spec = forward_real(grid, values);
    spectrum_to_poly(grid, &spec)
}

pub fn spectrum_to_poly(grid: UniformGrid, spec: &[Complex64]) -> TrigPoly {
    let nyquist = grid.n.is_multiple_of(2).then_some(-(grid.n as i64) / 2);
    let terms = spec.iter().enumerate().filter_map(|(idx, c)| {
        let k: Vec<i64> = grid
            .multi_index(idx)
            .into_iter()
            .map(|i| grid.freq_of_bin(i))
            .collect();
        if Some(true) == nyquist.map(|ny| k.contains(&ny)) {
            None
        } else {
            Some((k, *c))
        }
    });
    TrigPoly::new(grid.dim, terms)
}

pub fn next_pow2(n: usize) -> usize {
    n.max(1).next_power_of_two()
}
