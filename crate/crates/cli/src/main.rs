use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sociallearn::analysis::Decision;
use sociallearn_cli::{
    check_assumptions, compare_strategies, run_experiment, AnalysisReport, Canned, CliError,
    CompareReport, ExperimentConfig, Overrides, Scenario,
};

#[derive(Parser)]
#[command(
    name = "sociallearn",
    version,
    about = "Social learning under partial information sharing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured strategy for every trial and write artifacts.
    Simulate {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Check the model assumptions for a configuration.
    Check { config: PathBuf },
    /// Run all four strategies on shared observation streams.
    Compare {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Run a canned scenario (fig2-panel2, fig2-panel3, fig2-panel4).
    Reproduce {
        #[arg(value_parser = ["fig2-panel2", "fig2-panel3", "fig2-panel4"])]
        scenario: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run even when an assumption check fails.
    #[arg(long)]
    waive_assumptions: bool,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            trials: self.trials,
            horizon: self.horizon,
            stride: self.stride,
            out: self.out.clone(),
        }
    }
}

fn load(path: &Path, flags: Option<&Flags>) -> Result<Scenario, CliError> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(f) = flags {
        config.apply(&f.overrides());
    }
    Scenario::resolve(config)
}

fn print_simulation(report: &AnalysisReport, out: &Path) {
    let tx = report.theta_tx;
    for t in &report.trials {
        let (lo, hi) = t
            .final_beliefs
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(lo, hi), b| {
                (lo.min(b[tx]), hi.max(b[tx]))
            });
        let rejected = t
            .decisions
            .iter()
            .filter(|d| **d == Decision::Reject)
            .count();
        println!(
            "trial {}: mu(theta_tx) in [{lo:.6e}, {hi:.6e}], {rejected}/{} agents reject",
            t.trial,
            t.decisions.len()
        );
    }
    if let Some(c) = &report.confusion {
        println!("rho = {:.6}, J = {:.6}", c.rho, c.j);
    }
    if let Some(m) = &report.memoryless {
        println!(
            "memoryless: d_tx = {:.6}, d_fict = {:.6} (se {:.2e}) -> {:?}",
            m.d_tx, m.d_fict, m.d_fict_se, m.prediction
        );
    }
    println!("artifacts in {}", out.display());
}

fn print_comparison(report: &CompareReport) {
    if let Some(m) = &report.memoryless {
        println!(
            "memoryless: d_tx = {:.6}, d_fict = {:.6} (se {:.2e}) -> {:?}",
            m.d_tx, m.d_fict, m.d_fict_se, m.prediction
        );
    }
    for t in &report.trials {
        println!(
            "trial {} (observations {})",
            t.trial,
            &t.observation_digest[..16]
        );
        for s in &t.strategies {
            let tx = report.theta_tx;
            let mean =
                s.final_beliefs.iter().map(|b| b[tx]).sum::<f64>() / s.final_beliefs.len() as f64;
            let rejected = s
                .decisions
                .iter()
                .filter(|d| **d == Decision::Reject)
                .count();
            println!(
                "  {:<13} mean mu(theta_tx) = {mean:.6e}  rejects {rejected}/{}  {:?}",
                s.strategy.name(),
                s.decisions.len(),
                s.outcome
            );
        }
        if let Some(holds) = t.memoryless_prediction_holds {
            println!(
                "  memoryless prediction {}",
                if holds { "holds" } else { "does not hold" }
            );
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { config, flags } => {
            let scenario = load(&config, Some(&flags))?;
            let out = scenario.out_dir("out");
            let report = run_experiment(&scenario, &out, flags.waive_assumptions)?;
            print_simulation(&report, &out);
        }
        Command::Check { config } => {
            let scenario = load(&config, None)?;
            let report = check_assumptions(&scenario)?;
            print!("{report}");
            if !report.passed() {
                return Err(CliError::Assumptions(report));
            }
        }
        Command::Compare { config, flags } => {
            let scenario = load(&config, Some(&flags))?;
            let out = scenario.config.out.clone();
            let report = compare_strategies(&scenario, out.as_deref(), flags.waive_assumptions)?;
            print_comparison(&report);
        }
        Command::Reproduce { scenario, flags } => {
            let canned = Canned::from_name(&scenario).expect("clap restricts the names");
            let mut config = canned.config(flags.seed.unwrap_or(1));
            config.apply(&flags.overrides());
            let scenario = Scenario::resolve(config)?;
            let out = scenario.out_dir(&format!("runs/{}", canned.name()));
            let report = run_experiment(&scenario, &out, flags.waive_assumptions)?;
            print_simulation(&report, &out);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
