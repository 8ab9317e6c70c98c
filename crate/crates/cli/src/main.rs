use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use holocurve_cli::grid::{grid_csv, grid_json};
use holocurve_cli::{emit_curvature_grid, exit_code, run_scenario, verify_suite, GridSpec, RunOptions, Scenario, EXIT_INPUT};

#[derive(Parser)]
#[command(name = "holocurve", version, about = "Verification suites for extended holomorphic curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and print its report.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
    },
    /// Run a scenario file or directory and print a pass/fail table.
    Verify {
        /// Defaults to the bundled corpus.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        opts: Opts,
    },
    /// Curvature of one curve on a square grid.
    Grid {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        curve: String,
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
        #[arg(long, default_value_t = 5)]
        size: usize,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// Replace every tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// Caps on Hol and AntiHol steps of swept plans.
    #[arg(long, num_args = 2, value_names = ["P", "Q"])]
    max_order: Option<Vec<u32>>,
    /// Cross-check every analytic derivative against central differences.
    #[arg(long)]
    fd_check: bool,
    /// Only run tasks with this label or kind.
    #[arg(long)]
    task: Option<String>,
}

impl Opts {
    fn run_options(&self) -> RunOptions {
        RunOptions {
            tolerance: self.tolerance,
            max_order: self.max_order.as_ref().map(|v| (v[0], v[1])),
            fd_check: self.fd_check,
            task: self.task.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        // every error reaching here is bad input
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_INPUT as u8)
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Run { common, format } => {
            let report = run_scenario(&common.scenario, &common.opts.run_options())
                .with_context(|| format!("scenario {}", common.scenario.display()))?;
            match format {
                Format::Json => println!("{}", report.to_json()),
                Format::Csv => print!("{}", report.to_csv()),
            }
            Ok(exit_code(&report))
        }
        Command::Verify { scenario, opts } => {
            let path = scenario.unwrap_or_else(|| holocurve_cli::bundled_dir().join("corpus"));
            let summary = verify_suite(&path, &opts.run_options()).with_context(|| format!("suite {}", path.display()))?;
            print!("{}", summary.render());
            Ok(if summary.passed() { 0 } else { 1 })
        }
        Command::Grid {
            scenario,
            curve,
            radius,
            size,
            format,
        } => {
            let s = Scenario::load(&scenario).with_context(|| format!("scenario {}", scenario.display()))?;
            let rows = emit_curvature_grid(&s, &curve, GridSpec { radius, size }).with_context(|| format!("grid for curve '{curve}'"))?;
            match format {
                Format::Csv => print!("{}", grid_csv(&rows)),
                Format::Json => println!("{}", grid_json(&rows)),
            }
            Ok(0)
        }
    }
}
