//! Direct load control with subsampled measurements.
//!
//! The deviation dynamics are `x_{k+1} = x_k + u_k + d_k` (the nominal demand term
//! is known and cancelled by feedforward). The state is measured every `N` steps;
//! within a period the controller applies `u = −Kᵢ · x_sampled` at offset `i`.
//! Lifting one period gives a scalar-state LTI system from the `N` disturbances of a
//! period to the `N` deviations `x` at offsets `0..N`:
//!
//! ```text
//! x⁺ = a·x + bᵀd,         a = 1 − ΣKᵢ,       b = 1
//! zᵢ = cᵢ·x + Σ_{j<i} dⱼ,  cᵢ = 1 − Σ_{j<i} Kⱼ
//! ```
//!
//! Its H∞ norm is the worst-case ℓ₂ gain from disturbance to deviation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::TAU;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numerics::linalg::{power_iterate, top_singular_pair, LinearOperator};
use crate::numerics::optimize::{golden_section_max, Interval, NelderMead};
use crate::numerics::rng::{derive_seed, NormalStream};

pub const DEFAULT_FREQ_POINTS: usize = 4096;
pub const DEFAULT_REFINE_TOL: f64 = 1e-8;
pub const DEFAULT_RESTARTS: usize = 8;
pub const STABILITY_MARGIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsampledPlant {
    interval: usize,
}

impl SubsampledPlant {
    pub fn new(interval: usize) -> Result<Self> {
        if interval == 0 {
            return Err(Error::domain("SubsampledPlant", "interval must be >= 1"));
        }
        Ok(SubsampledPlant { interval })
    }

    pub fn interval(&self) -> usize {
        self.interval
    }
}

/// Static periodic gains on the most recent sample.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicController {
    gains: Vec<f64>,
}

impl PeriodicController {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() || gains.iter().any(|g| !g.is_finite()) {
            return Err(Error::domain("PeriodicController", "gains must be nonempty and finite"));
        }
        Ok(PeriodicController { gains })
    }

    /// `(1, 0, …, 0)`: cancel the sampled deviation at once, then hold.
    pub fn deadbeat(interval: usize) -> Result<Self> {
        let mut gains = vec![0.0; interval.max(1)];
        gains[0] = 1.0;
        Self::new(gains)
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }
}

/// Period-`N` lifting of the closed loop. `d_cl` is row-major `N×N`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsampledLoop {
    pub a_cl: f64,
    pub b_cl: Vec<f64>,
    pub c_cl: Vec<f64>,
    pub d_cl: Vec<f64>,
}

impl SubsampledLoop {
    pub fn new(a_cl: f64, b_cl: Vec<f64>, c_cl: Vec<f64>, d_cl: Vec<f64>) -> Result<Self> {
        let n = b_cl.len();
        if n == 0 || c_cl.len() != n || d_cl.len() != n * n {
            return Err(Error::domain("SubsampledLoop", "inconsistent lifted dimensions"));
        }
        if !a_cl.is_finite() || b_cl.iter().chain(&c_cl).chain(&d_cl).any(|v| !v.is_finite()) {
            return Err(Error::domain("SubsampledLoop", "entries must be finite"));
        }
        Ok(SubsampledLoop { a_cl, b_cl, c_cl, d_cl })
    }

    pub fn interval(&self) -> usize {
        self.b_cl.len()
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.d_cl[i * self.interval() + j]
    }

    /// `G(e^{iω}) = c (e^{iω} − a)⁻¹ bᵀ + D` as an operator.
    pub fn frequency_response(&self, omega: f64) -> FrequencyResponse<'_> {
        let z = Complex64::new(libm::cos(omega), libm::sin(omega));
        FrequencyResponse { lp: self, phi: (z - self.a_cl).inv() }
    }

    /// Runs the lifted system from `x0`; `d.len()` must be a multiple of `N`.
    /// Returns the deviation at every time step.
    pub fn simulate(&self, x0: f64, d: &[f64]) -> Vec<f64> {
        let n = self.interval();
        let mut x = x0;
        let mut z = Vec::with_capacity(d.len());
        for period in d.chunks_exact(n) {
            for i in 0..n {
                let row = &self.d_cl[i * n..(i + 1) * n];
                z.push(self.c_cl[i] * x + dot(row, period));
            }
            x = self.a_cl * x + dot(&self.b_cl, period);
        }
        z
    }
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Lifted transfer matrix at one frequency, applied without forming it.
pub struct FrequencyResponse<'a> {
    lp: &'a SubsampledLoop,
    phi: Complex64,
}

impl LinearOperator for FrequencyResponse<'_> {
    fn rows(&self) -> usize {
        self.lp.interval()
    }

    fn cols(&self) -> usize {
        self.lp.interval()
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let n = self.lp.interval();
        let bx: Complex64 = self.lp.b_cl.iter().zip(x).map(|(b, v)| v * b).sum();
        let s = self.phi * bx;
        for i in 0..n {
            let row = &self.lp.d_cl[i * n..(i + 1) * n];
            let dx: Complex64 = row.iter().zip(x).map(|(d, v)| v * d).sum();
            out[i] = dx + s * self.lp.c_cl[i];
        }
    }

    fn apply_adjoint(&self, y: &[Complex64], out: &mut [Complex64]) {
        let n = self.lp.interval();
        let cy: Complex64 = self.lp.c_cl.iter().zip(y).map(|(c, v)| v * c).sum();
        let s = self.phi.conj() * cy;
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = s * self.lp.b_cl[j];
            for i in 0..n {
                acc += y[i] * self.lp.d_cl[i * n + j];
            }
            *o = acc;
        }
    }
}

/// Exact period-`N` lifting of plant and controller.
pub fn lift_closed_loop(plant: SubsampledPlant, ctrl: &PeriodicController) -> Result<SubsampledLoop> {
    let n = plant.interval;
    if ctrl.gains.len() != n {
        return Err(Error::domain(
            "lift_closed_loop",
            format!("controller has {} gains for interval {n}", ctrl.gains.len()),
        ));
    }
    let mut c_cl = Vec::with_capacity(n);
    let mut applied = 0.0;
    for &k in &ctrl.gains {
        c_cl.push(1.0 - applied);
        applied += k;
    }
    let mut d_cl = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            d_cl[i * n + j] = 1.0;
        }
    }
    SubsampledLoop::new(1.0 - applied, vec![1.0; n], c_cl, d_cl)
}

/// Step-by-step simulation of the subsampled loop, deviation `x_k` at every step.
pub fn simulate_time_domain(plant: SubsampledPlant, ctrl: &PeriodicController, x0: f64, d: &[f64]) -> Vec<f64> {
    let n = plant.interval;
    let mut x = x0;
    let mut sampled = x0;
    let mut z = Vec::with_capacity(d.len());
    for (k, dk) in d.iter().enumerate() {
        if k % n == 0 {
            sampled = x;
        }
        z.push(x);
        let u = -ctrl.gains[k % n] * sampled;
        x = x + u + dk;
    }
    z
}

/// Worst-case frequency of a lifted loop.
#[derive(Debug, Clone, PartialEq)]
pub struct HinfPeak {
    pub norm: f64,
    pub omega: f64,
    /// Unit right singular vector of `G(e^{iω})` at the peak.
    pub direction: Vec<Complex64>,
}

fn sigma_at(lp: &SubsampledLoop, omega: f64) -> f64 {
    top_singular_pair(&lp.frequency_response(omega)).value
}

/// Cheaper variant for the optimizer loop: one power-iteration start.
fn sigma_at_single_start(lp: &SubsampledLoop, omega: f64) -> f64 {
    let start = vec![Complex64::new(1.0, 0.0); lp.interval()];
    power_iterate(&lp.frequency_response(omega), start).value
}

/// Peak gain over a uniform grid on `[0, 2π)`, golden-refined around the grid argmax.
pub fn hinf_peak(lp: &SubsampledLoop, freq_points: usize, refine_tol: f64) -> Result<HinfPeak> {
    let (norm, omega) = scan_peak(lp, freq_points, refine_tol, sigma_at)?;
    let direction = top_singular_pair(&lp.frequency_response(omega)).right;
    Ok(HinfPeak { norm, omega, direction })
}

fn scan_peak(
    lp: &SubsampledLoop,
    freq_points: usize,
    refine_tol: f64,
    sigma: fn(&SubsampledLoop, f64) -> f64,
) -> Result<(f64, f64)> {
    if lp.a_cl.abs() >= 1.0 {
        return Err(Error::Unstable { a_cl: lp.a_cl });
    }
    if freq_points < 64 {
        return Err(Error::domain("hinf_norm", "freq_points must be >= 64"));
    }
    let checked = |w: f64| -> Result<f64> {
        let s = sigma(lp, w);
        if s.is_finite() {
            Ok(s)
        } else {
            Err(Error::NonFinite { what: "hinf_norm frequency response", at: w })
        }
    };
    let step = TAU / freq_points as f64;
    let mut best = (0.0, f64::NEG_INFINITY);
    for k in 0..freq_points {
        let w = step * k as f64;
        let s = checked(w)?;
        if s > best.1 {
            best = (w, s);
        }
    }
    let (mut omega, mut norm) = best;
    if norm > 0.0 {
        let around = Interval::new(omega - step, omega + step)?;
        let r = golden_section_max(|w| sigma(lp, w), around, refine_tol)?;
        if r.value > norm {
            norm = r.value;
            omega = r.scalar() % TAU;
            if omega < 0.0 {
                omega += TAU;
            }
        }
    }
    Ok((norm, omega))
}

/// `sup_ω σ_max(G(e^{iω}))` of a stable lifted loop.
pub fn hinf_norm(lp: &SubsampledLoop, freq_points: usize, refine_tol: f64) -> Result<f64> {
    Ok(hinf_peak(lp, freq_points, refine_tol)?.norm)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformancePoint {
    pub interval: usize,
    pub hinf_norm: f64,
    pub gains: Vec<f64>,
}

/// Settings of the multi-start controller search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControllerSearch {
    pub restarts: usize,
    pub seed: u64,
    /// Grid used inside the optimizer loop.
    pub search_freq_points: usize,
    pub search_refine_tol: f64,
    /// Grid used to score each restart's result.
    pub freq_points: usize,
    pub refine_tol: f64,
    pub stability_margin: f64,
    /// Standard deviation of the seeded perturbation around the deadbeat start.
    pub perturbation: f64,
    pub simplex: NelderMead,
    /// Nelder–Mead is restarted from its own result until it stops improving.
    pub polish_rounds: usize,
}

impl ControllerSearch {
    pub fn new(restarts: usize, seed: u64) -> Self {
        ControllerSearch {
            restarts,
            seed,
            search_freq_points: 64,
            search_refine_tol: 1e-5,
            freq_points: DEFAULT_FREQ_POINTS,
            refine_tol: DEFAULT_REFINE_TOL,
            stability_margin: STABILITY_MARGIN,
            perturbation: 0.3,
            simplex: NelderMead { tol: 1e-6, max_iter: 4000, relative_step: 0.1, zero_step: 0.05 },
            polish_rounds: 3,
        }
    }

    /// Starting gains of restart `k`; restart 0 is deadbeat.
    pub fn start(&self, interval: usize, k: usize) -> Vec<f64> {
        let mut g = vec![0.0; interval];
        g[0] = 1.0;
        if k > 0 {
            let mut s = NormalStream::new(derive_seed(self.seed, k as u64));
            g.iter_mut().for_each(|v| *v += self.perturbation * s.next_normal());
        }
        g
    }

    fn penalized(&self, plant: SubsampledPlant, gains: &[f64]) -> f64 {
        let a = 1.0 - gains.iter().sum::<f64>();
        let limit = 1.0 - self.stability_margin;
        if a.abs() > limit || gains.iter().any(|g| !g.is_finite()) {
            return 1e3 * (1.0 + (a.abs() - limit).max(0.0));
        }
        let Ok(ctrl) = PeriodicController::new(gains.to_vec()) else { return f64::INFINITY };
        lift_closed_loop(plant, &ctrl)
            .and_then(|lp| scan_peak(&lp, self.search_freq_points, self.search_refine_tol, sigma_at_single_start))
            .map(|(norm, _)| norm)
            .unwrap_or(f64::INFINITY)
    }

    fn score(&self, plant: SubsampledPlant, gains: &[f64]) -> Option<f64> {
        let a = 1.0 - gains.iter().sum::<f64>();
        if a.abs() > 1.0 - self.stability_margin {
            return None;
        }
        let ctrl = PeriodicController::new(gains.to_vec()).ok()?;
        let lp = lift_closed_loop(plant, &ctrl).ok()?;
        hinf_norm(&lp, self.freq_points, self.refine_tol).ok()
    }

    /// Best controller found for `plant`.
    pub fn run(&self, plant: SubsampledPlant) -> Result<PerformancePoint> {
        if self.restarts == 0 {
            return Err(Error::domain("optimal_subsampled_controller", "restarts must be >= 1"));
        }
        let n = plant.interval();
        let mut best: Option<(f64, Vec<f64>)> = None;
        for k in 0..self.restarts {
            let mut x = self.start(n, k);
            let mut fx = self.penalized(plant, &x);
            for _ in 0..=self.polish_rounds {
                let r = self.simplex.minimize(|g| self.penalized(plant, g), &x)?;
                let improved = r.value < fx - 1e-12;
                if r.value <= fx {
                    x = r.argopt;
                    fx = r.value;
                }
                if !improved {
                    break;
                }
            }
            if let Some(s) = self.score(plant, &x) {
                if best.as_ref().is_none_or(|(b, _)| s < *b) {
                    best = Some((s, x));
                }
            }
        }
        let (hinf_norm, gains) = best.ok_or_else(|| Error::Optimization {
            detail: format!("no restart produced a stabilizing controller for N = {n}"),
        })?;
        Ok(PerformancePoint { interval: n, hinf_norm, gains })
    }
}

/// Lowest H∞ norm found within the periodic-gain class for `plant`.
pub fn optimal_subsampled_controller(plant: SubsampledPlant, restarts: usize, seed: u64) -> Result<PerformancePoint> {
    ControllerSearch::new(restarts, seed).run(plant)
}

/// One optimized point per interval, in input order.
pub fn performance_curve(intervals: &[usize], restarts: usize, seed: u64) -> Result<Vec<PerformancePoint>> {
    performance_curve_with(intervals, &ControllerSearch::new(restarts, seed))
}

pub fn performance_curve_with(intervals: &[usize], search: &ControllerSearch) -> Result<Vec<PerformancePoint>> {
    if intervals.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("performance_curve", "intervals must be sorted ascending"));
    }
    intervals.iter().map(|&n| search.run(SubsampledPlant::new(n)?)).collect()
}

/// Least-squares slope ζ of H∞ norm against privacy setting `q`.
///
/// `q_map` pairs each privacy setting with the sampling interval it implies.
pub fn fit_linear_degradation(curve: &[PerformancePoint], q_map: &[(f64, usize)]) -> Result<f64> {
    let mut pts = Vec::with_capacity(q_map.len());
    for &(q, n) in q_map {
        let p = curve.iter().find(|p| p.interval == n).ok_or_else(|| {
            Error::domain("fit_linear_degradation", format!("interval {n} of q_map is not on the curve"))
        })?;
        if !q.is_finite() {
            return Err(Error::domain("fit_linear_degradation", "q values must be finite"));
        }
        pts.push((q, n, p.hinf_norm));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pts.windows(2).any(|w| !(w[0].0 < w[1].0 && w[0].1 < w[1].1)) {
        return Err(Error::domain(
            "fit_linear_degradation",
            "q_map must have distinct q values, strictly increasing with the interval",
        ));
    }
    if pts.len() < 2 {
        return Err(Error::domain("fit_linear_degradation", "need at least two distinct q values"));
    }
    let m = pts.len() as f64;
    let qm = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let hm = pts.iter().map(|p| p.2).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - qm) * (p.2 - hm)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - qm) * (p.0 - qm)).sum();
    let zeta = sxy / sxx;
    if !(zeta > 0.0) {
        return Err(Error::Calibration {
            detail: format!("fitted slope {zeta} is not positive; performance does not degrade with q"),
        });
    }
    Ok(zeta)
}
