//! Derivative-free optimizers: golden-section search on an interval and
//! Nelder–Mead on `Rⁿ`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Closed interval `[lo, hi]` with `lo < hi`, both finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
            return Err(Error::domain(
                "interval",
                alloc::format!("need finite lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(Interval { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Outcome of an optimizer run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerReport {
    pub argopt: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final bracket width (golden section) or simplex diameter (Nelder–Mead).
    pub residual: f64,
}

impl OptimizerReport {
    /// The optimizer's point for one-dimensional searches.
    pub fn scalar(&self) -> f64 {
        self.argopt[0]
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `objective` over `domain` by golden-section search.
///
/// Stops once the bracket is no wider than `tol`. The returned point is the best
/// abscissa evaluated, endpoints included, so flat or monotone objectives still
/// produce a sensible answer.
pub fn golden_section_max<F>(objective: F, domain: Interval, tol: f64) -> Result<OptimizerReport>
where
    F: FnMut(f64) -> f64,
{
    let (report, _) = golden_section_bracket(objective, domain, tol)?;
    Ok(report)
}

/// Same as [`golden_section_max`] but also returns the final bracket.
pub(crate) fn golden_section_bracket<F>(
    mut objective: F,
    domain: Interval,
    tol: f64,
) -> Result<(OptimizerReport, Interval)>
where
    F: FnMut(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::domain("golden_section_max", "tol must be > 0"));
    }
    let mut eval = |x: f64| -> Result<f64> {
        let v = objective(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { what: "golden_section_max objective", at: x })
        }
    };

    let (mut a, mut b) = (domain.lo, domain.hi);
    let mut best = (a, eval(a)?);
    let fb = eval(b)?;
    if fb > best.1 {
        best = (b, fb);
    }
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    let mut iterations = 1;
    while b - a > tol {
        iterations += 1;
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = eval(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = eval(x2)?;
        }
        // Stalls once the bracket shrinks to a few ulps.
        if x1 >= x2 || iterations > 10_000 {
            break;
        }
    }
    for (x, f) in [(x1, f1), (x2, f2)] {
        if f > best.1 {
            best = (x, f);
        }
    }
    let residual = b - a;
    let bracket = if a < b { Interval { lo: a, hi: b } } else { Interval { lo: a, hi: a + f64::EPSILON } };
    Ok((
        OptimizerReport {
            argopt: vec![best.0],
            value: best.1,
            iterations,
            converged: residual <= tol,
            residual,
        },
        bracket,
    ))
}

/// Tuning knobs for [`NelderMead`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    pub tol: f64,
    pub max_iter: usize,
    /// Initial simplex edge relative to `|xᵢ|`.
    pub relative_step: f64,
    /// Initial simplex edge used when `xᵢ = 0`.
    pub zero_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead { tol: 1e-10, max_iter: 5000, relative_step: 0.05, zero_step: 0.00025 }
    }
}

/// Minimizes `objective` from `start` with the default simplex shape.
///
/// Non-convergence within `max_iter` is reported through `converged = false`,
/// not as an error.
pub fn nelder_mead_min<F>(objective: F, start: &[f64], tol: f64, max_iter: usize) -> Result<OptimizerReport>
where
    F: FnMut(&[f64]) -> f64,
{
    NelderMead { tol, max_iter, ..NelderMead::default() }.minimize(objective, start)
}

impl NelderMead {
    pub fn minimize<F>(&self, mut objective: F, start: &[f64]) -> Result<OptimizerReport>
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = start.len();
        if n == 0 {
            return Err(Error::domain("nelder_mead_min", "dimension must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::domain("nelder_mead_min", "tol must be > 0"));
        }
        // NaN compares as worse than anything.
        let mut f = |x: &[f64]| {
            let v = objective(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(start.to_vec());
        for i in 0..n {
            let mut v = start.to_vec();
            v[i] = if v[i] != 0.0 { v[i] * (1.0 + self.relative_step) } else { self.zero_step };
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| f(v)).collect();

        let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut trial2 = vec![0.0; n];
        let mut iterations = 0;
        let mut diameter;

        loop {
            order(&mut simplex, &mut values);
            diameter = simplex_diameter(&simplex);
            if diameter <= self.tol || iterations >= self.max_iter {
                break;
            }
            iterations += 1;

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for v in &simplex[..n] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / n as f64;
                }
            }
            let worst = &simplex[n];
            for i in 0..n {
                trial[i] = centroid[i] + alpha * (centroid[i] - worst[i]);
            }
            let fr = f(&trial);

            if fr < values[0] {
                for i in 0..n {
                    trial2[i] = centroid[i] + gamma * (trial[i] - centroid[i]);
                }
                let fe = f(&trial2);
                if fe < fr {
                    simplex[n].copy_from_slice(&trial2);
                    values[n] = fe;
                } else {
                    simplex[n].copy_from_slice(&trial);
                    values[n] = fr;
                }
                continue;
            }
            if fr < values[n - 1] {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
                continue;
            }
            // Contraction, outside if the reflection improved on the worst point.
            let (base, fbase) = if fr < values[n] { (&trial, fr) } else { (&simplex[n], values[n]) };
            for i in 0..n {
                trial2[i] = centroid[i] + rho * (base[i] - centroid[i]);
            }
            let fc = f(&trial2);
            if fc < fbase {
                simplex[n].copy_from_slice(&trial2);
                values[n] = fc;
                continue;
            }
            let best = simplex[0].clone();
            for j in 1..=n {
                for i in 0..n {
                    simplex[j][i] = best[i] + sigma * (simplex[j][i] - best[i]);
                }
                values[j] = f(&simplex[j]);
            }
        }

        Ok(OptimizerReport {
            argopt: simplex[0].clone(),
            value: values[0],
            iterations: iterations.max(1),
            converged: diameter <= self.tol,
            residual: diameter,
        })
    }
}

/// Sorts vertices by value; ties keep their previous order.
fn order(simplex: &mut [Vec<f64>], values: &mut [f64]) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let s: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
    let v: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    simplex.iter_mut().zip(s).for_each(|(d, s)| *d = s);
    values.copy_from_slice(&v);
}

/// Largest Euclidean distance from the best vertex to any other.
fn simplex_diameter(simplex: &[Vec<f64>]) -> f64 {
    let best = &simplex[0];
    simplex[1..]
        .iter()
        .map(|v| {
            let s: f64 = v.iter().zip(best).map(|(a, b)| (a - b) * (a - b)).sum();
            libm::sqrt(s)
        })
        .fold(0.0, f64::max)
}
