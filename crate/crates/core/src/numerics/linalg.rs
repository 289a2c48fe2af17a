//! Largest singular value by power iteration on `MᴴM`.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};

pub const POWER_ITERATION_CAP: usize = 10_000;
pub const RAYLEIGH_TOL: f64 = 1e-12;

/// A linear map `Cⁿ → Cᵐ` that can also apply its adjoint.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `out = M x`
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]);
    /// `out = Mᴴ y`
    fn apply_adjoint(&self, y: &[Complex64], out: &mut [Complex64]);
}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::domain(
                "CMatrix",
                alloc::format!("{rows}x{cols} matrix needs {} entries, got {}", rows * cols, data.len()),
            ));
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        CMatrix { rows: n, cols: n, data }
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[r * self.cols + c]
    }
}

impl LinearOperator for CMatrix {
    fn rows(&self) -> usize {
        self.rows
    }

    fn cols(&self) -> usize {
        self.cols
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
        }
    }

    fn apply_adjoint(&self, y: &[Complex64], out: &mut [Complex64]) {
        out.iter_mut().for_each(|o| *o = Complex64::new(0.0, 0.0));
        for (r, yr) in y.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, a) in out.iter_mut().zip(row) {
                *o += a.conj() * yr;
            }
        }
    }
}

/// Top singular pair of an operator.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularPair {
    pub value: f64,
    /// Unit right singular vector.
    pub right: Vec<Complex64>,
    pub iterations: usize,
}

/// Largest singular value of a dense complex matrix.
pub fn max_singular_value(m: &CMatrix) -> Result<f64> {
    if m.data.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::NonFinite { what: "max_singular_value entry", at: f64::NAN });
    }
    Ok(top_singular_pair(m).value)
}

/// Power iteration on `MᴴM`.
///
/// The normalized all-ones vector is the primary start. Because a fixed start can
/// be orthogonal to the dominant subspace, a second deterministic start with
/// quasi-random phases is also run and the larger Rayleigh quotient wins.
pub fn top_singular_pair<M: LinearOperator + ?Sized>(m: &M) -> SingularPair {
    let n = m.cols();
    let ones = vec![Complex64::new(1.0, 0.0); n];
    let first = power_iterate(m, ones);
    let phased: Vec<Complex64> = (0..n)
        .map(|k| {
            let t = 2.399_963_229_728_653 * (k as f64 + 1.0);
            Complex64::new(libm::cos(t), libm::sin(t)) * (1.0 + 0.5 * k as f64 / n as f64)
        })
        .collect();
    let second = power_iterate(m, phased);
    if second.value > first.value {
        second
    } else {
        first
    }
}

fn norm(v: &[Complex64]) -> f64 {
    libm::sqrt(v.iter().map(|z| z.norm_sqr()).sum())
}

/// Single power iteration run from `v` (normalized internally).
pub fn power_iterate<M: LinearOperator + ?Sized>(m: &M, mut v: Vec<Complex64>) -> SingularPair {
    let scale = 1.0 / norm(&v);
    v.iter_mut().for_each(|z| *z *= scale);
    let mut mv = vec![Complex64::new(0.0, 0.0); m.rows()];
    let mut w = vec![Complex64::new(0.0, 0.0); m.cols()];
    let mut lambda = 0.0;
    let mut iterations = 0;
    while iterations < POWER_ITERATION_CAP {
        iterations += 1;
        m.apply(&v, &mut mv);
        // Rayleigh quotient of MᴴM at unit v.
        let next = mv.iter().map(|z| z.norm_sqr()).sum::<f64>();
        m.apply_adjoint(&mv, &mut w);
        let wn = norm(&w);
        if wn == 0.0 {
            lambda = next;
            break;
        }
        let converged = (next - lambda).abs() <= RAYLEIGH_TOL * next;
        lambda = next;
        if converged {
            break;
        }
        v.iter_mut().zip(&w).for_each(|(a, b)| *a = b / wn);
    }
    SingularPair { value: libm::sqrt(lambda.max(0.0)), right: v, iterations }
}
