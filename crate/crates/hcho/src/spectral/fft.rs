//! Three-dimensional complex FFT on an n³ cube, built from 1-d rustfft plans.
//!
//! Each pass transforms the contiguous axis and then cyclically rotates the
//! layout (i,j,k) → (k,i,j); three passes transform all axes and restore the
//! original layout. Rows are independent, so batch passes parallelize without
//! any nondeterminism (each output element is written by exactly one task).

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Grids at or above this mode count use rayon for batch rows.
const PAR_THRESHOLD: usize = 32 * 32 * 32;

pub struct FftEngine {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl FftEngine {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        FftEngine {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    /// In-place forward 3-d transform, normalized by 1/n³.
    pub fn forward(&self, data: &mut Vec<Complex64>) {
        self.transform(data, true);
        let scale = 1.0 / (self.n * self.n * self.n) as f64;
        if data.len() >= PAR_THRESHOLD {
            data.par_iter_mut().for_each(|z| *z *= scale);
        } else {
            for z in data.iter_mut() {
                *z *= scale;
            }
        }
    }

    /// In-place inverse 3-d transform (plain exponential sum, no scaling).
    pub fn inverse(&self, data: &mut Vec<Complex64>) {
        self.transform(data, false);
    }

    fn transform(&self, data: &mut Vec<Complex64>, forward: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n * n, "data length must be n³");
        let plan = if forward { &self.fwd } else { &self.inv };
        let mut scratch = vec![Complex64::default(); data.len()];
        for _ in 0..3 {
            batch_rows(plan, data, n);
            rotate(data, &mut scratch, n);
            std::mem::swap(data, &mut scratch);
        }
    }
}

/// FFT every contiguous row of length n.
fn batch_rows(plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64], n: usize) {
    let scratch_len = plan.get_inplace_scratch_len();
    if data.len() >= PAR_THRESHOLD {
        data.par_chunks_mut(n).for_each_init(
            || vec![Complex64::default(); scratch_len],
            |scratch, row| plan.process_with_scratch(row, scratch),
        );
    } else {
        let mut scratch = vec![Complex64::default(); scratch_len];
        for row in data.chunks_mut(n) {
            plan.process_with_scratch(row, &mut scratch);
        }
    }
}

/// out[(k·n + i)·n + j] = in[(i·n + j)·n + k]; applying it three times is the identity.
fn rotate(input: &[Complex64], out: &mut [Complex64], n: usize) {
    let fill = |(row, out_row): (usize, &mut [Complex64])| {
        let k = row / n;
        let i = row % n;
        let base = i * n * n + k;
        for (j, slot) in out_row.iter_mut().enumerate() {
            *slot = input[base + j * n];
        }
    };
    if input.len() >= PAR_THRESHOLD {
        out.par_chunks_mut(n).enumerate().for_each(fill);
    } else {
        out.chunks_mut(n).enumerate().for_each(fill);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft3(data: &[Complex64], n: usize, sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); data.len()];
        let w = sign * 2.0 * std::f64::consts::PI / n as f64;
        for qi in 0..n {
            for qj in 0..n {
                for qk in 0..n {
                    let mut acc = Complex64::default();
                    for i in 0..n {
                        for j in 0..n {
                            for k in 0..n {
                                let phase = w * (qi * i + qj * j + qk * k) as f64;
                                acc += data[(i * n + j) * n + k]
                                    * Complex64::new(phase.cos(), phase.sin());
                            }
                        }
                    }
                    out[(qi * n + qj) * n + qk] = acc;
                }
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 4;
        let mut data: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let reference = naive_dft3(&data, n, -1.0);
        let engine = FftEngine::new(n);
        engine.forward(&mut data);
        let scale = (n * n * n) as f64;
        for (got, want) in data.iter().zip(reference.iter()) {
            assert!((got * scale - want).norm() < 1e-10);
        }
    }

    #[test]
    fn forward_inverse_roundtrip() {
        let n = 8;
        let orig: Vec<Complex64> = (0..n * n * n)
            .map(|i| Complex64::new((i as f64 * 1.7).sin(), (i as f64 * 0.3).sin()))
            .collect();
        let mut data = orig.clone();
        let engine = FftEngine::new(n);
        engine.forward(&mut data);
        engine.inverse(&mut data);
        for (got, want) in data.iter().zip(orig.iter()) {
            assert!((got - want).norm() < 1e-12);
        }
    }
}
