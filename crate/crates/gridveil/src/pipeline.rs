//! Stage runner shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use gridveil_core::dlc::{fit_linear_degradation, ControllerSearch, PerformancePoint, SubsampledPlant};
use gridveil_core::insurance::{
    consumer_optimal_coverage, insurer_optimal_menu, kkt_residual, profit_shares, expected_insurer_profit,
    ConsumerInsuranceProblem, InsuranceScenario,
};
use gridveil_core::numerics::derive_seed;
use gridveil_core::privacy::{max_success_over_pairs, GaussianHypothesisPair, SamplingPolicy};
use gridveil_core::screening::{
    closed_form_menu, expected_profit, full_information_menu, oracle_menu, shutdown_probability, welfare_curve,
    ContractMenu, ScreeningMarket, ScreeningScenario,
};

use crate::error::CliError;
use crate::manifest::{sha256_hex, InsuranceReport, MenuReport, OutputEntry, RunManifest, ShutdownRow, WelfareMismatch};
use crate::parallel::map_ordered;
use crate::scenario::ScenarioFile;
use crate::svg::{LineChart, Series};
use crate::table::{self, num};

/// Printed-versus-direct welfare differences above this are listed in the manifest.
pub const WELFARE_MISMATCH_TOL: f64 = 1e-9;
/// Premium rates per type in the coverage sweep.
pub const COVERAGE_RATES: usize = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
    Both,
}

impl Format {
    fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    fn svg(self) -> bool {
        matches!(self, Format::Svg | Format::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    PrivacyCurve,
    DlcCurve,
    ScreeningMenu,
    WelfareSweep,
    InsuranceConsumer,
    InsuranceMenu,
    Pipeline,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::PrivacyCurve => "privacy-curve",
            Command::DlcCurve => "dlc-curve",
            Command::ScreeningMenu => "screening-menu",
            Command::WelfareSweep => "welfare-sweep",
            Command::InsuranceConsumer => "insurance-consumer",
            Command::InsuranceMenu => "insurance-menu",
            Command::Pipeline => "pipeline",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub seed: u64,
    /// Points per axis of the screening oracle.
    pub grid: usize,
    pub format: Format,
    pub workers: usize,
}

/// Outcome of a run; the manifest is written in both cases.
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    pub error: Option<CliError>,
}

struct Runner<'a> {
    scenario: &'a ScenarioFile,
    opts: RunOptions,
    out_dir: &'a Path,
    checksum: String,
    manifest: RunManifest,
    zeta: Option<f64>,
    screening: Option<(ScreeningScenario, ContractMenu)>,
    eta: Option<(f64, f64)>,
}

/// Loads `scenario_path`, runs `command` and writes outputs plus `manifest.json`
/// into `out_dir`.
pub fn run_file(command: Command, scenario_path: &Path, out_dir: &Path, opts: RunOptions) -> Result<RunOutcome, CliError> {
    let bytes = fs::read(scenario_path).map_err(|source| CliError::Io { path: scenario_path.to_path_buf(), source })?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| CliError::Parse {
        line: 1,
        column: e.utf8_error().valid_up_to() + 1,
        message: "scenario is not UTF-8".into(),
    })?;
    let scenario = ScenarioFile::parse(&text)?;
    run(command, &scenario, &scenario_path.display().to_string(), &sha256_hex(&bytes), out_dir, opts)
}

/// Runs `command` on a validated scenario.
pub fn run(
    command: Command,
    scenario: &ScenarioFile,
    scenario_label: &str,
    checksum: &str,
    out_dir: &Path,
    opts: RunOptions,
) -> Result<RunOutcome, CliError> {
    fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    let dlc_seed = derive_seed(scenario.dlc.seed, opts.seed);
    let mut r = Runner {
        scenario,
        opts,
        out_dir,
        checksum: checksum.to_string(),
        manifest: RunManifest::new(command.name(), scenario_label, checksum.to_string(), opts.seed, dlc_seed, opts.grid),
        zeta: None,
        screening: None,
        eta: None,
    };
    let result = r.execute(command);
    r.manifest.status = if result.is_ok() { "complete" } else { "failed" }.into();
    r.manifest.error = result.as_ref().err().map(|e| e.to_string());
    let manifest_path = r.manifest.write(out_dir)?;
    Ok(RunOutcome { manifest: r.manifest, manifest_path, error: result.err() })
}

impl Runner<'_> {
    fn execute(&mut self, command: Command) -> Result<(), CliError> {
        match command {
            Command::PrivacyCurve => self.breach(),
            Command::DlcCurve => self.dlc_curve().map(|_| ()),
            Command::ScreeningMenu => self.contract_menu(),
            Command::WelfareSweep => self.welfare(),
            Command::InsuranceConsumer => self.coverage(),
            Command::InsuranceMenu => self.insurance_menu(),
            Command::Pipeline => {
                self.breach()?;
                self.calibrate(true)?;
                self.contract_menu()?;
                self.welfare()?;
                self.coverage()?;
                self.insurance_menu()
            }
        }
    }

    fn emit(&mut self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.out_dir.join(file);
        fs::write(&path, bytes).map_err(|source| CliError::Io { path, source })?;
        self.manifest.outputs.push(OutputEntry { file: file.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    fn emit_csv(&mut self, file: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        if self.opts.format.csv() {
            self.emit(file, &bytes)?;
        }
        Ok(())
    }

    fn emit_svg(&mut self, file: &str, chart: LineChart) -> Result<(), CliError> {
        if self.opts.format.svg() {
            let svg = chart.render(&self.checksum);
            self.emit(file, svg.as_bytes())?;
        }
        Ok(())
    }

    fn pairs(&self) -> Result<Vec<GaussianHypothesisPair>, CliError> {
        let p = &self.scenario.privacy;
        std::iter::once((&p.mu1, &p.mu2))
            .chain(p.additional_pairs.iter().map(|q| (&q.mu1, &q.mu2)))
            .map(|(a, b)| GaussianHypothesisPair::new(a.clone(), b.clone(), p.sigma))
            .collect::<Result<_, _>>()
            .map_err(CliError::numerical("privacy"))
    }

    fn success_at(&self, pairs: &[GaussianHypothesisPair], interval: usize) -> Result<f64, CliError> {
        SamplingPolicy::every(interval)
            .and_then(|policy| max_success_over_pairs(pairs, policy))
            .map_err(CliError::numerical("breach_curve"))
    }

    fn breach(&mut self) -> Result<(), CliError> {
        let pairs = self.pairs()?;
        let mut rows = Vec::new();
        let (mut success, mut failure) = (Vec::new(), Vec::new());
        for &n in &self.scenario.privacy.intervals {
            let s = self.success_at(&pairs, n)?;
            rows.push([n.to_string(), num(s), num(1.0 - s)]);
            success.push((n as f64, s));
            failure.push((n as f64, 1.0 - s));
        }
        self.emit_csv("breach_curve.csv", table::render(table::BREACH_HEADER, &rows))?;
        self.emit_svg(
            "breach_curve.svg",
            LineChart {
                title: "Breach probability vs sampling interval".into(),
                x_label: "sampling interval N".into(),
                y_label: "probability".into(),
                series: vec![Series::new("success", success), Series::new("failure", failure)],
            },
        )
    }

    fn compute_dlc_curve(&self) -> Result<Vec<PerformancePoint>, CliError> {
        let d = &self.scenario.dlc;
        let search = ControllerSearch::new(d.restarts, self.manifest.dlc_seed);
        map_ordered(&d.intervals, self.opts.workers, |&n| search.run(SubsampledPlant::new(n)?))
            .into_iter()
            .collect::<Result<Vec<_>, _>>()
            .map_err(CliError::numerical("performance_curve"))
    }

    fn dlc_curve(&mut self) -> Result<Vec<PerformancePoint>, CliError> {
        let curve = self.compute_dlc_curve()?;
        let rows: Vec<[String; 3]> =
            curve.iter().map(|p| [p.interval.to_string(), num(p.hinf_norm), table::joined(&p.gains)]).collect();
        self.emit_csv("dlc_curve.csv", table::render(table::DLC_HEADER, &rows))?;
        self.emit_svg(
            "dlc_curve.svg",
            LineChart {
                title: "Worst-case load deviation gain vs sampling interval".into(),
                x_label: "sampling interval N".into(),
                y_label: "H-infinity norm".into(),
                series: vec![Series::new("optimized gains", curve.iter().map(|p| (p.interval as f64, p.hinf_norm)).collect())],
            },
        )?;
        Ok(curve)
    }

    /// Cost slope for screening; runs the controller search only when needed.
    /// Only `dlc-curve` and `pipeline` publish the curve itself.
    fn calibrate(&mut self, write_curve: bool) -> Result<f64, CliError> {
        if let Some(z) = self.zeta {
            return Ok(z);
        }
        let zeta = match self.scenario.screening.zeta_override {
            Some(z) => {
                self.manifest.zeta = Some("overridden".into());
                z
            }
            None => {
                let curve = if write_curve { self.dlc_curve()? } else { self.compute_dlc_curve()? };
                let q_map: Vec<(f64, usize)> = self.scenario.q_map.iter().map(|e| (e.q, e.interval)).collect();
                let z = fit_linear_degradation(&curve, &q_map).map_err(CliError::numerical("dlc calibration"))?;
                self.manifest.zeta = Some(z.into());
                z
            }
        };
        self.zeta = Some(zeta);
        Ok(zeta)
    }

    fn market(&mut self) -> Result<ScreeningMarket, CliError> {
        let zeta = self.calibrate(false)?;
        let s = &self.scenario.screening;
        ScreeningMarket::new(s.theta_low, s.theta_high, s.q_bar, zeta).map_err(CliError::numerical("screening"))
    }

    fn screening(&mut self) -> Result<(ScreeningScenario, ContractMenu), CliError> {
        if let Some(v) = self.screening {
            return Ok(v);
        }
        let market = self.market()?;
        let s = market.with_p(self.scenario.screening.p_high).map_err(CliError::numerical("screening"))?;
        let menu = closed_form_menu(&s).map_err(CliError::numerical("closed_form_menu"))?;
        let report = shutdown_probability(&market);
        let p0 = market.theta_low / market.theta_high;
        self.manifest.shutdown = Some(ShutdownRow {
            p_shutdown: report.p_shutdown,
            degenerate: report.degenerate,
            p0_type_ratio: p0,
            difference: report.p_shutdown - p0,
        });
        self.screening = Some((s, menu));
        Ok((s, menu))
    }

    fn contract_menu(&mut self) -> Result<(), CliError> {
        let (s, closed) = self.screening()?;
        let oracle = oracle_menu(&s, self.opts.grid).map_err(CliError::numerical("oracle_menu"))?;
        let row = |name: &str, m: &ContractMenu| {
            [name.to_string(), num(m.q_low), num(m.t_low), num(m.q_high), num(m.t_high), num(expected_profit(m, &s))]
        };
        let mut rows = vec![row("closed_form", &closed), row("oracle", &oracle)];
        match full_information_menu(&s) {
            Ok(full) => rows.push(row("full_info", &full)),
            Err(e) => self.manifest.notes.push(format!("full_info row omitted: {e}")),
        }
        self.emit_csv("contract_menu.csv", table::render(table::MENU_HEADER, &rows))
    }

    fn welfare(&mut self) -> Result<(), CliError> {
        let market = self.market()?;
        self.screening()?;
        let points = welfare_curve(&market, &self.scenario.welfare_grid()).map_err(CliError::numerical("welfare_curve"))?;
        let rows: Vec<[String; 6]> = points
            .iter()
            .map(|w| {
                [num(w.p), num(w.profit), num(w.consumer_surplus), num(w.welfare), num(w.piecewise_welfare), w.shutdown.to_string()]
            })
            .collect();
        let off: Vec<f64> =
            points.iter().filter(|w| (w.piecewise_welfare - w.welfare).abs() > WELFARE_MISMATCH_TOL).map(|w| w.p).collect();
        self.manifest.piecewise_welfare_mismatch = Some(WelfareMismatch { tolerance: WELFARE_MISMATCH_TOL, count: off.len(), p: off });
        self.emit_csv("welfare.csv", table::render(table::WELFARE_HEADER, &rows))?;
        let series = |label: &str, f: fn(&gridveil_core::screening::WelfarePoint) -> f64| {
            Series::new(label, points.iter().map(|w| (w.p, f(w))).collect())
        };
        self.emit_svg(
            "welfare.svg",
            LineChart {
                title: "Welfare vs share of high-privacy consumers".into(),
                x_label: "p".into(),
                y_label: "value".into(),
                series: vec![
                    series("welfare", |w| w.welfare),
                    series("profit", |w| w.profit),
                    series("consumer surplus", |w| w.consumer_surplus),
                    series("piecewise closed form", |w| w.piecewise_welfare),
                ],
            },
        )
    }

    /// `(η_h, η_l)`: scenario values where given, otherwise the adversary's failure
    /// probability at the interval each type's privacy setting maps to.
    fn eta(&mut self) -> Result<(f64, f64), CliError> {
        if let Some(v) = self.eta {
            return Ok(v);
        }
        let ins = &self.scenario.insurance;
        let (eta_h, eta_l, source) = match (ins.eta_high_risk, ins.eta_low_risk) {
            (Some(h), Some(l)) => (h, l, "scenario".to_string()),
            (given_h, given_l) => {
                // The high-risk type is the one holding the low-privacy contract.
                let (_, menu) = self.screening()?;
                let pairs = self.pairs()?;
                let (n_h, n_l) = (self.scenario.interval_for(menu.q_low), self.scenario.interval_for(menu.q_high));
                let h = match given_h {
                    Some(h) => h,
                    None => 1.0 - self.success_at(&pairs, n_h)?,
                };
                let l = match given_l {
                    Some(l) => l,
                    None => 1.0 - self.success_at(&pairs, n_l)?,
                };
                (h, l, format!("breach failure probability at intervals (high_risk {n_h}, low_risk {n_l})"))
            }
        };
        if !(eta_h < eta_l) {
            return Err(CliError::Derived {
                stage: "insurance",
                detail: format!(
                    "eta_high_risk = {eta_h} must be below eta_low_risk = {eta_l}; set /insurance/eta_high_risk and /insurance/eta_low_risk to override"
                ),
            });
        }
        self.manifest.insurance =
            Some(InsuranceReport { eta_high_risk: eta_h, eta_low_risk: eta_l, eta_source: source, menu: None });
        self.eta = Some((eta_h, eta_l));
        Ok((eta_h, eta_l))
    }

    fn coverage(&mut self) -> Result<(), CliError> {
        let (eta_h, eta_l) = self.eta()?;
        let ins = &self.scenario.insurance;
        let family = self.scenario.utility();
        let mut rows = Vec::new();
        let mut series = Vec::new();
        for (label, eta) in [("high_risk", eta_h), ("low_risk", eta_l)] {
            let fair = 1.0 - eta;
            let top = ins.premium_rate.filter(|&r| r > fair).unwrap_or(1.0 - eta / 2.0);
            let mut pts = Vec::with_capacity(COVERAGE_RATES);
            for k in 0..COVERAGE_RATES {
                let c = fair + (top - fair) * k as f64 / (COVERAGE_RATES - 1) as f64;
                let prob = ConsumerInsuranceProblem::new(ins.y, ins.loss, eta, c, family)
                    .map_err(CliError::numerical("consumer_optimal_coverage"))?;
                let beta = consumer_optimal_coverage(&prob).map_err(CliError::numerical("consumer_optimal_coverage"))?;
                let kkt = kkt_residual(beta, &prob).map_err(CliError::numerical("kkt_residual"))?;
                rows.push([label.to_string(), num(c), num(beta), num(kkt)]);
                pts.push((c, beta));
            }
            series.push(Series::new(label, pts));
        }
        self.emit_csv("insurance_coverage.csv", table::render(table::COVERAGE_HEADER, &rows))?;
        self.emit_svg(
            "insurance_coverage.svg",
            LineChart {
                title: "Optimal coverage vs premium rate".into(),
                x_label: "premium rate c".into(),
                y_label: "coverage beta".into(),
                series,
            },
        )
    }

    fn insurance_menu(&mut self) -> Result<(), CliError> {
        let (eta_h, eta_l) = self.eta()?;
        let ins = &self.scenario.insurance;
        let s = InsuranceScenario::new(ins.y, ins.loss, eta_h, eta_l, ins.p_risky, self.scenario.utility())
            .map_err(CliError::numerical("insurance"))?;
        let (menu, d) = insurer_optimal_menu(&s).map_err(CliError::numerical("insurer_optimal_menu"))?;
        let (share_h, share_l) = profit_shares(&menu, &s);
        let rows = [
            ["high_risk".to_string(), num(menu.high_risk.alpha_attack), num(menu.high_risk.alpha_premium), num(share_h)],
            ["low_risk".to_string(), num(menu.low_risk.alpha_attack), num(menu.low_risk.alpha_premium), num(share_l)],
        ];
        if let Some(r) = self.manifest.insurance.as_mut() {
            r.menu = Some(MenuReport {
                expected_profit: expected_insurer_profit(&menu, &s),
                ic_h_residual: d.ic_h_residual,
                ir_l_residual: d.ir_l_residual,
                ic_l_slack: d.ic_l_slack,
                ir_h_slack: d.ir_h_slack,
                full_insurance_gap_h: d.full_insurance_gap_h,
                partial_insurance_margin_l: d.partial_insurance_margin_l,
                lagrange_lambda1: d.lagrange_lambda1,
                lagrange_lambda2: d.lagrange_lambda2,
            });
        }
        self.emit_csv("insurance_menu.csv", table::render(table::INSURANCE_MENU_HEADER, &rows))
    }
}
