//! Probability that an adversary distinguishes two consumption hypotheses from
//! the aggregate meter signal, and how it falls as the meter samples less often.
//!
//! Observations are `x ~ N(μⱼ, σ²I)` under input `uⱼ`, `j ∈ {1, 2}`, with equal
//! priors. The optimal test is linear, `decide u₁ ⇔ aᵀx + b > 0` with
//! `a = (μ₁ − μ₂)/σ²` and `b = (‖μ₂‖² − ‖μ₁‖²)/(2σ²)`, and its success probability
//! bounds that of every estimator.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::numerics::rng::{derive_seed, NormalStream};
use crate::numerics::special::erf;

/// Mean traces (watts per sample) under the two inputs and the per-sample noise scale.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianHypothesisPair {
    mu1: Vec<f64>,
    mu2: Vec<f64>,
    sigma: f64,
}

impl GaussianHypothesisPair {
    pub fn new(mu1: Vec<f64>, mu2: Vec<f64>, sigma: f64) -> Result<Self> {
        if mu1.is_empty() {
            return Err(Error::domain("GaussianHypothesisPair", "traces must have length >= 1"));
        }
        if mu1.len() != mu2.len() {
            return Err(Error::domain(
                "GaussianHypothesisPair",
                format!("trace lengths differ: {} vs {}", mu1.len(), mu2.len()),
            ));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::domain("GaussianHypothesisPair", "sigma must be finite and > 0"));
        }
        if mu1.iter().chain(&mu2).any(|v| !v.is_finite()) {
            return Err(Error::domain("GaussianHypothesisPair", "trace entries must be finite"));
        }
        Ok(GaussianHypothesisPair { mu1, mu2, sigma })
    }

    pub fn mu1(&self) -> &[f64] {
        &self.mu1
    }

    pub fn mu2(&self) -> &[f64] {
        &self.mu2
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn len(&self) -> usize {
        self.mu1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu1.is_empty()
    }

    /// Both traces observed through the same sampling policy.
    pub fn subsampled(&self, policy: SamplingPolicy) -> Result<Self> {
        Self::new(
            subsample_trace(&self.mu1, policy)?,
            subsample_trace(&self.mu2, policy)?,
            self.sigma,
        )
    }

    /// The likelihood-ratio classifier for this pair.
    pub fn optimal_test(&self) -> LinearTest {
        let s2 = self.sigma * self.sigma;
        let a: Vec<f64> = self.mu1.iter().zip(&self.mu2).map(|(m1, m2)| (m1 - m2) / s2).collect();
        let b = (dot(&self.mu2, &self.mu2) - dot(&self.mu1, &self.mu1)) / (2.0 * s2);
        LinearTest { a, b }
    }
}

/// `decide u₁ ⇔ aᵀx + b > 0`, otherwise `u₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearTest {
    pub a: Vec<f64>,
    pub b: f64,
}

impl LinearTest {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.a, x) + self.b
    }

    pub fn decides_first(&self, x: &[f64]) -> bool {
        self.score(x) > 0.0
    }
}

/// Meter keeps every `interval`-th sample starting at `phase`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPolicy {
    interval: usize,
    phase: usize,
}

impl SamplingPolicy {
    pub fn new(interval: usize, phase: usize) -> Result<Self> {
        if interval == 0 {
            return Err(Error::domain("SamplingPolicy", "interval must be >= 1"));
        }
        if phase >= interval {
            return Err(Error::domain(
                "SamplingPolicy",
                format!("phase {phase} must be < interval {interval}"),
            ));
        }
        Ok(SamplingPolicy { interval, phase })
    }

    /// Phase-zero policy.
    pub fn every(interval: usize) -> Result<Self> {
        Self::new(interval, 0)
    }

    pub fn interval(&self) -> usize {
        self.interval
    }

    pub fn phase(&self) -> usize {
        self.phase
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreachCurvePoint {
    pub interval: usize,
    pub success_prob: f64,
    /// η: probability that the adversary fails.
    pub failure_prob: f64,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Success probability of the optimal test under equal priors.
///
/// Evaluates `½(1 − erf(−(aᵀμ₁ + b)/‖a‖ / √(2σ²)))`, which equals
/// `½(1 + erf(‖μ₁ − μ₂‖ / (2σ√2)))`. Returns exactly ½ when the means coincide.
pub fn breach_success_probability(pair: &GaussianHypothesisPair) -> Result<f64> {
    if pair.is_empty() {
        return Err(Error::domain("breach_success_probability", "empty traces"));
    }
    let test = pair.optimal_test();
    let a_norm = libm::sqrt(dot(&test.a, &test.a));
    if a_norm == 0.0 {
        return Ok(0.5);
    }
    let margin = (dot(&test.a, &pair.mu1) + test.b) / a_norm;
    let arg = -margin / libm::sqrt(2.0 * pair.sigma * pair.sigma);
    Ok(0.5 * (1.0 - erf(arg)?))
}

/// Entries at `phase, phase + N, phase + 2N, …`.
pub fn subsample_trace(trace: &[f64], policy: SamplingPolicy) -> Result<Vec<f64>> {
    if trace.is_empty() {
        return Err(Error::domain("subsample_trace", "trace must have length >= 1"));
    }
    if policy.phase >= trace.len() {
        return Err(Error::domain(
            "subsample_trace",
            format!("phase {} leaves no samples in a trace of length {}", policy.phase, trace.len()),
        ));
    }
    Ok(trace.iter().skip(policy.phase).step_by(policy.interval).copied().collect())
}

/// Breach probability at each sampling interval (phase 0), in input order.
pub fn breach_curve(pair: &GaussianHypothesisPair, intervals: &[usize]) -> Result<Vec<BreachCurvePoint>> {
    if intervals.is_empty() {
        return Err(Error::domain("breach_curve", "intervals must be nonempty"));
    }
    intervals
        .iter()
        .map(|&n| {
            if n == 0 || n >= pair.len().max(2) {
                return Err(Error::domain(
                    "breach_curve",
                    format!("interval {n} must satisfy 1 <= N < T = {}", pair.len()),
                ));
            }
            let success = breach_success_probability(&pair.subsampled(SamplingPolicy::every(n)?)?)?;
            Ok(BreachCurvePoint { interval: n, success_prob: success, failure_prob: 1.0 - success })
        })
        .collect()
}

/// Worst case over several secrets: the pair the adversary separates best.
pub fn max_success_over_pairs(pairs: &[GaussianHypothesisPair], policy: SamplingPolicy) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::domain("max_success_over_pairs", "no hypothesis pairs"));
    }
    let mut worst: f64 = 0.5;
    for p in pairs {
        worst = worst.max(breach_success_probability(&p.subsampled(policy)?)?);
    }
    Ok(worst)
}

/// Trials per Monte Carlo block. Each block draws from its own derived stream, so
/// the estimate does not depend on how blocks are spread over workers.
pub const MC_BLOCK: u64 = 1 << 16;

/// Number of blocks needed for `trials`.
pub fn mc_block_count(trials: u64) -> u64 {
    trials.div_ceil(MC_BLOCK)
}

/// Successes of the optimal test in block `block` of a `trials`-trial experiment.
pub fn monte_carlo_block(pair: &GaussianHypothesisPair, trials: u64, seed: u64, block: u64) -> u64 {
    let start = block * MC_BLOCK;
    let count = trials.saturating_sub(start).min(MC_BLOCK);
    let test = pair.optimal_test();
    let mut stream = NormalStream::new(derive_seed(seed, block));
    let mut x = alloc::vec![0.0; pair.len()];
    let mut successes = 0;
    for _ in 0..count {
        let first = stream.next_bool();
        let mean = if first { &pair.mu1 } else { &pair.mu2 };
        for (xi, m) in x.iter_mut().zip(mean) {
            *xi = m + pair.sigma * stream.next_normal();
        }
        if test.decides_first(&x) == first {
            successes += 1;
        }
    }
    successes
}

/// Empirical success rate of the optimal test over `trials` simulated observations.
pub fn monte_carlo_success(pair: &GaussianHypothesisPair, trials: u64, seed: u64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::domain("monte_carlo_success", "trials must be >= 1"));
    }
    let successes: u64 = (0..mc_block_count(trials)).map(|b| monte_carlo_block(pair, trials, seed, b)).sum();
    Ok(successes as f64 / trials as f64)
}
