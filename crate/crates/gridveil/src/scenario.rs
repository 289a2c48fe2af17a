//! Scenario files: JSON parsing and validation with JSON-pointer error paths.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use gridveil_core::insurance::UtilityFamily;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub privacy: PrivacySection,
    pub dlc: DlcSection,
    pub q_map: Vec<QMapEntry>,
    pub screening: ScreeningSection,
    pub insurance: InsuranceSection,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySection {
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
    pub sigma: f64,
    pub intervals: Vec<usize>,
    /// Further secrets the adversary may try to learn; curves report the worst case.
    #[serde(default)]
    pub additional_pairs: Vec<MeanPair>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeanPair {
    pub mu1: Vec<f64>,
    pub mu2: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DlcSection {
    pub intervals: Vec<usize>,
    pub restarts: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QMapEntry {
    pub q: f64,
    pub interval: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScreeningSection {
    pub theta_low: f64,
    pub theta_high: f64,
    pub p_high: f64,
    pub q_bar: f64,
    #[serde(default)]
    pub zeta_override: Option<f64>,
    /// Type probabilities for the welfare sweep; defaults to 0.01, 0.02, …, 0.99.
    #[serde(default)]
    pub welfare_p_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InsuranceSection {
    pub y: f64,
    pub loss: f64,
    #[serde(default)]
    pub eta_high_risk: Option<f64>,
    #[serde(default)]
    pub eta_low_risk: Option<f64>,
    pub p_risky: f64,
    pub utility: UtilitySection,
    #[serde(default)]
    pub premium_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtilitySection {
    pub kind: String,
    #[serde(default)]
    pub parameter: f64,
}

/// One failed check, located by JSON pointer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationError {
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.pointer, self.message)
    }
}

#[derive(Default)]
struct Collector(Vec<ValidationError>);

impl Collector {
    fn push(&mut self, pointer: impl Into<String>, message: impl Into<String>) {
        self.0.push(ValidationError { pointer: pointer.into(), message: message.into() });
    }

    fn positive(&mut self, pointer: &str, v: f64) {
        if !(v.is_finite() && v > 0.0) {
            self.push(pointer, "must be > 0");
        }
    }

    fn finite(&mut self, pointer: &str, v: f64) {
        if !v.is_finite() {
            self.push(pointer, "must be finite");
        }
    }

    fn unit_open(&mut self, pointer: &str, v: f64) {
        if !(v > 0.0 && v < 1.0) {
            self.push(pointer, "must lie in (0, 1)");
        }
    }

    fn trace(&mut self, pointer: &str, v: &[f64]) {
        if v.is_empty() {
            self.push(pointer, "must be nonempty");
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            self.push(format!("{pointer}/{i}"), "must be finite");
        }
    }
}

/// Default welfare sweep: `0.01, 0.02, …, 0.99`.
pub fn default_welfare_grid() -> Vec<f64> {
    (1..100).map(|i| i as f64 / 100.0).collect()
}

impl ScenarioFile {
    /// Parses JSON text; syntax and type errors carry line and column.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let scenario: ScenarioFile = serde_json::from_str(text).map_err(|e| CliError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let errors = scenario.validate();
        if errors.is_empty() {
            Ok(scenario)
        } else {
            Err(CliError::Validation(errors))
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Every invariant violation in the file, not just the first.
    pub fn validate(&self) -> Vec<ValidationError> {
        let mut c = Collector::default();
        self.validate_privacy(&mut c);
        self.validate_dlc(&mut c);
        self.validate_q_map(&mut c);
        self.validate_screening(&mut c);
        self.validate_insurance(&mut c);
        c.0
    }

    fn validate_privacy(&self, c: &mut Collector) {
        let p = &self.privacy;
        c.trace("/privacy/mu1", &p.mu1);
        c.trace("/privacy/mu2", &p.mu2);
        if p.mu1.len() != p.mu2.len() {
            c.push("/privacy/mu2", format!("length {} differs from /privacy/mu1 length {}", p.mu2.len(), p.mu1.len()));
        }
        c.positive("/privacy/sigma", p.sigma);
        for (i, pair) in p.additional_pairs.iter().enumerate() {
            let base = format!("/privacy/additional_pairs/{i}");
            c.trace(&format!("{base}/mu1"), &pair.mu1);
            c.trace(&format!("{base}/mu2"), &pair.mu2);
            if pair.mu1.len() != pair.mu2.len() {
                c.push(format!("{base}/mu2"), "length differs from mu1");
            }
        }
        if p.intervals.is_empty() {
            c.push("/privacy/intervals", "must be nonempty");
        }
        let shortest = self.shortest_trace();
        for (i, &n) in p.intervals.iter().enumerate() {
            if n == 0 {
                c.push(format!("/privacy/intervals/{i}"), "must be >= 1");
            } else if n > 1 && n >= shortest {
                c.push(format!("/privacy/intervals/{i}"), format!("interval {n} must be shorter than the trace length {shortest}"));
            }
        }
    }

    fn validate_dlc(&self, c: &mut Collector) {
        let d = &self.dlc;
        if d.intervals.is_empty() {
            c.push("/dlc/intervals", "must be nonempty");
        }
        for (i, &n) in d.intervals.iter().enumerate() {
            if n == 0 {
                c.push(format!("/dlc/intervals/{i}"), "must be >= 1");
            }
        }
        if d.intervals.windows(2).any(|w| w[0] >= w[1]) {
            c.push("/dlc/intervals", "must be strictly increasing");
        }
        if d.restarts == 0 {
            c.push("/dlc/restarts", "must be >= 1");
        }
    }

    fn validate_q_map(&self, c: &mut Collector) {
        let derives_eta = self.insurance.eta_high_risk.is_none() || self.insurance.eta_low_risk.is_none();
        let shortest = self.shortest_trace();
        if self.q_map.len() < 2 {
            c.push("/q_map", "needs at least two entries");
        }
        for (i, e) in self.q_map.iter().enumerate() {
            if !(e.q.is_finite() && e.q >= 0.0) {
                c.push(format!("/q_map/{i}/q"), "must be finite and >= 0");
            }
            if !self.dlc.intervals.contains(&e.interval) {
                c.push(format!("/q_map/{i}/interval"), format!("interval {} does not appear in /dlc/intervals", e.interval));
            } else if derives_eta && e.interval > 1 && e.interval >= shortest {
                c.push(
                    format!("/q_map/{i}/interval"),
                    format!("interval {} must be shorter than the trace length {shortest} to derive eta", e.interval),
                );
            }
        }
        let mut sorted: Vec<QMapEntry> = self.q_map.clone();
        sorted.sort_by(|a, b| a.q.total_cmp(&b.q));
        if sorted.windows(2).any(|w| !(w[0].q < w[1].q && w[0].interval < w[1].interval)) {
            c.push("/q_map", "q values must be distinct and larger q must map to a larger interval");
        }
    }

    fn validate_screening(&self, c: &mut Collector) {
        let s = &self.screening;
        c.positive("/screening/theta_low", s.theta_low);
        c.finite("/screening/theta_high", s.theta_high);
        if s.theta_low >= s.theta_high {
            c.push("/screening", "theta_low must be < theta_high");
        }
        c.unit_open("/screening/p_high", s.p_high);
        c.positive("/screening/q_bar", s.q_bar);
        if let Some(z) = s.zeta_override {
            c.positive("/screening/zeta_override", z);
        }
        if let Some(grid) = &s.welfare_p_grid {
            if grid.is_empty() {
                c.push("/screening/welfare_p_grid", "must be nonempty");
            }
            for (i, &p) in grid.iter().enumerate() {
                c.unit_open(&format!("/screening/welfare_p_grid/{i}"), p);
            }
            if grid.windows(2).any(|w| w[0] > w[1]) {
                c.push("/screening/welfare_p_grid", "must be sorted ascending");
            }
        }
    }

    fn validate_insurance(&self, c: &mut Collector) {
        let s = &self.insurance;
        c.positive("/insurance/y", s.y);
        if !(s.loss > 0.0 && s.loss <= s.y) {
            c.push("/insurance/loss", "must lie in (0, y]");
        }
        if let Some(e) = s.eta_high_risk {
            c.unit_open("/insurance/eta_high_risk", e);
        }
        if let Some(e) = s.eta_low_risk {
            c.unit_open("/insurance/eta_low_risk", e);
        }
        if let (Some(h), Some(l)) = (s.eta_high_risk, s.eta_low_risk) {
            if h >= l {
                c.push("/insurance", "eta_high_risk must be < eta_low_risk");
            }
        }
        c.unit_open("/insurance/p_risky", s.p_risky);
        if let Some(r) = s.premium_rate {
            c.unit_open("/insurance/premium_rate", r);
        }
        match s.utility.kind.as_str() {
            "logarithmic" | "exponential" | "power" => {
                if let Err(e) = UtilityFamily::from_kind(&s.utility.kind, s.utility.parameter) {
                    c.push("/insurance/utility/parameter", e.to_string());
                }
            }
            other => c.push(
                "/insurance/utility/kind",
                format!("unknown kind {other:?}; expected logarithmic, exponential or power"),
            ),
        }
    }

    fn shortest_trace(&self) -> usize {
        let p = &self.privacy;
        std::iter::once(p.mu1.len()).chain(p.additional_pairs.iter().map(|q| q.mu1.len())).min().unwrap_or(0)
    }

    pub fn utility(&self) -> UtilityFamily {
        let u = &self.insurance.utility;
        UtilityFamily::from_kind(&u.kind, u.parameter).expect("validated at load")
    }

    pub fn welfare_grid(&self) -> Vec<f64> {
        self.screening.welfare_p_grid.clone().unwrap_or_else(default_welfare_grid)
    }

    /// Sampling interval implied by privacy setting `q`: the entry with the largest
    /// mapped `q` not above it, or `1` below the smallest entry.
    pub fn interval_for(&self, q: f64) -> usize {
        self.q_map.iter().filter(|e| e.q <= q).max_by(|a, b| a.q.total_cmp(&b.q)).map_or(1, |e| e.interval)
    }
}
