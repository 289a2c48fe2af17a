use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use gridveil::parallel::worker_count;
use gridveil::{run_file, Command, Format, RunOptions};

/// Smart-meter privacy, load-control and contract-design computations.
#[derive(Parser)]
#[command(name = "gridveil", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Breach probability against sampling interval.
    PrivacyCurve(Common),
    /// Optimized worst-case load-control gain against sampling interval.
    DlcCurve(Common),
    /// Closed-form, grid-oracle and full-information contract menus.
    ScreeningMenu(Common),
    /// Profit, consumer surplus and welfare over the type probability.
    WelfareSweep(Common),
    /// Optimal coverage over a sweep of premium rates.
    InsuranceConsumer(Common),
    /// The monopolist insurer's two-type menu.
    InsuranceMenu(Common),
    /// Every stage in order.
    Pipeline(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = "./out")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Both)]
    format: FormatArg,
    /// Points per axis of the screening grid oracle.
    #[arg(long, default_value_t = gridveil_core::screening::DEFAULT_GRID_POINTS)]
    grid: usize,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Svg,
    Both,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (command, common) = match cli.command {
        Sub::PrivacyCurve(c) => (Command::PrivacyCurve, c),
        Sub::DlcCurve(c) => (Command::DlcCurve, c),
        Sub::ScreeningMenu(c) => (Command::ScreeningMenu, c),
        Sub::WelfareSweep(c) => (Command::WelfareSweep, c),
        Sub::InsuranceConsumer(c) => (Command::InsuranceConsumer, c),
        Sub::InsuranceMenu(c) => (Command::InsuranceMenu, c),
        Sub::Pipeline(c) => (Command::Pipeline, c),
    };
    let opts = RunOptions {
        seed: common.seed,
        grid: common.grid,
        format: match common.format {
            FormatArg::Csv => Format::Csv,
            FormatArg::Svg => Format::Svg,
            FormatArg::Both => Format::Both,
        },
        workers: worker_count(),
    };
    match run_file(command, &common.scenario, &common.out_dir, opts) {
        Ok(outcome) => match outcome.error {
            None => {
                println!("wrote {} outputs; manifest at {}", outcome.manifest.outputs.len(), outcome.manifest_path.display());
                ExitCode::SUCCESS
            }
            Some(e) => {
                eprintln!("error: {e}");
                eprintln!("partial manifest at {}", outcome.manifest_path.display());
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
