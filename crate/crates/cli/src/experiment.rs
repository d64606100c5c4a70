use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sociallearn::analysis::{
    confusion_summary, frozen_ratio_drift, martingale_diagnostics, memoryless_comparison,
    predict_limits, ConfusionSummary, Decision, LimitPrediction, MartingaleReport,
    MemorylessComparison, MemorylessPrediction, Regime,
};
use sociallearn::graph::PerronVector;
use sociallearn::learning::{run, Strategy, TrajectoryRecord};
use sociallearn::rng::derive_seed;

use crate::assumptions::{check_assumptions, AssumptionReport};
use crate::error::{CliError, Result};
use crate::scenario::Scenario;

pub const MANIFEST_FILE: &str = "manifest.toml";
pub const NETWORK_FILE: &str = "network.txt";
pub const ANALYSIS_FILE: &str = "analysis.json";
pub const COMPARE_FILE: &str = "compare.json";

pub fn trajectory_file(trial: u32) -> String {
    format!("trajectory_{trial:04}.csv")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub trial: u32,
    pub trajectory: String,
    pub observation_digest: String,
    pub final_beliefs: Vec<Vec<f64>>,
    pub decisions: Vec<Decision>,
    /// Largest relative drift of the belief ratios the dynamics preserve.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frozen_ratio_drift: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub martingale: Option<MartingaleReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub strategy: Strategy,
    pub theta0: usize,
    pub theta_tx: usize,
    pub horizon: usize,
    pub assumptions: AssumptionReport,
    pub assumptions_waived: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<ConfusionSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<LimitPrediction>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memoryless: Option<MemorylessComparison>,
    pub trials: Vec<TrialSummary>,
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports always serialise");
    write_file(path, &(text + "\n"))
}

fn write_trajectory(path: &Path, rec: &TrajectoryRecord) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    rec.write_csv(BufWriter::new(file))
        .map_err(|e| CliError::io(path, e))
}

fn prepare_out(out: &Path, scenario: &Scenario) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    write_file(&out.join(MANIFEST_FILE), &scenario.manifest().to_toml())?;
    write_file(&out.join(NETWORK_FILE), &scenario.net.to_edge_list())
}

fn gate(scenario: &Scenario, waive: bool) -> Result<AssumptionReport> {
    let report = check_assumptions(scenario)?;
    if !report.passed() && !waive {
        return Err(CliError::Assumptions(report));
    }
    Ok(report)
}

fn perron(scenario: &Scenario) -> Result<Option<PerronVector>> {
    if scenario.net.connectivity().is_connected() {
        Ok(Some(scenario.net.perron_vector()?))
    } else {
        Ok(None)
    }
}

fn decisions(scenario: &Scenario, beliefs: &[Vec<f64>]) -> Result<Vec<Decision>> {
    beliefs
        .iter()
        .map(|b| {
            scenario
                .config
                .decision
                .classify(&scenario.priors, b, scenario.config.theta_tx)
                .map_err(CliError::from)
        })
        .collect()
}

fn memoryless_report(scenario: &Scenario, v: &PerronVector) -> Result<MemorylessComparison> {
    let c = &scenario.config;
    Ok(memoryless_comparison(
        &scenario.models,
        v,
        c.theta0,
        c.theta_tx,
        c.diagnostics.memoryless_samples,
        derive_seed(c.seed, "monte-carlo"),
    )?)
}

/// Runs every trial of the configured strategy, writes per-trial trajectory
/// CSVs, the manifest, the network and `analysis.json` under `out`.
pub fn run_experiment(scenario: &Scenario, out: &Path, waive: bool) -> Result<AnalysisReport> {
    let assumptions = gate(scenario, waive)?;
    prepare_out(out, scenario)?;
    let c = &scenario.config;
    let v = perron(scenario)?;

    let trials: Vec<TrialSummary> = (0..c.trials as u32)
        .into_par_iter()
        .map(|trial| {
            let rec = run(
                &scenario.run_config(c.strategy, trial),
                &scenario.net,
                &scenario.models,
            )?;
            let name = trajectory_file(trial);
            write_trajectory(&out.join(&name), &rec)?;
            let final_beliefs = rec.final_beliefs();
            let frozen_ratio_drift = match c.strategy {
                Strategy::PartialMemoryAware => {
                    Some(frozen_ratio_drift(&rec, &scenario.structure, false))
                }
                Strategy::Standalone => Some(frozen_ratio_drift(&rec, &scenario.structure, true)),
                _ => None,
            };
            let martingale = match (&v, c.diagnostics.martingale) {
                (Some(v), true) => {
                    Some(martingale_diagnostics(&rec, &scenario.structure, v, None)?.1)
                }
                _ => None,
            };
            Ok(TrialSummary {
                trial,
                trajectory: name,
                observation_digest: rec.observation_digest.clone(),
                decisions: decisions(scenario, &final_beliefs)?,
                final_beliefs,
                frozen_ratio_drift,
                martingale,
            })
        })
        .collect::<Result<_>>()?;

    let confusion = v
        .as_ref()
        .map(|v| confusion_summary(&scenario.priors, &scenario.structure, v))
        .transpose()?;
    let regime = match c.strategy {
        Strategy::PartialMemoryAware => Some(Regime::network(c.theta0, c.theta_tx)),
        Strategy::Standalone => Some(Regime::Standalone),
        _ => None,
    };
    // With waived assumptions the prediction may not exist; that is not an error.
    let limits = match (&confusion, regime) {
        (Some(summary), Some(regime)) => predict_limits(
            &scenario.net,
            summary,
            &scenario.structure,
            &scenario.priors,
            regime,
            c.theta_tx,
        )
        .ok(),
        _ => None,
    };
    let memoryless = match &v {
        Some(v) if c.strategy == Strategy::PartialMemoryless || c.diagnostics.memoryless => {
            Some(memoryless_report(scenario, v)?)
        }
        _ => None,
    };
    let report = AnalysisReport {
        strategy: c.strategy,
        theta0: c.theta0,
        theta_tx: c.theta_tx,
        horizon: c.horizon,
        assumptions,
        assumptions_waived: waive,
        threshold: c.decision.threshold(&scenario.priors)?.map(|t| t.value()),
        confusion,
        limits,
        memoryless,
        trials,
    };
    write_json(&out.join(ANALYSIS_FILE), &report)?;
    Ok(report)
}

/// What a run's decisions made of the transmitted hypothesis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    /// Every agent decides correctly: reject a false transmitted hypothesis,
    /// accept a true one.
    Learns,
    /// Every agent decides wrongly.
    Fooled,
    Mixed,
}

impl Outcome {
    pub fn of(decisions: &[Decision], theta0: usize, theta_tx: usize) -> Self {
        let right = if theta_tx == theta0 {
            Decision::Accept
        } else {
            Decision::Reject
        };
        let n = decisions.iter().filter(|&&d| d == right).count();
        if n == decisions.len() {
            Outcome::Learns
        } else if n == 0 {
            Outcome::Fooled
        } else {
            Outcome::Mixed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub strategy: Strategy,
    pub final_beliefs: Vec<Vec<f64>>,
    pub decisions: Vec<Decision>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareTrial {
    pub trial: u32,
    /// Shared by every strategy's run.
    pub observation_digest: String,
    pub strategies: Vec<StrategyOutcome>,
    /// Whether the memoryless prediction matched the realized outcome;
    /// absent when the prediction is inconclusive or unavailable.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memoryless_prediction_holds: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub theta0: usize,
    pub theta_tx: usize,
    pub horizon: usize,
    pub assumptions: AssumptionReport,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memoryless: Option<MemorylessComparison>,
    pub trials: Vec<CompareTrial>,
}

impl CompareReport {
    pub fn outcome(&self, trial: usize, strategy: Strategy) -> &StrategyOutcome {
        self.trials[trial]
            .strategies
            .iter()
            .find(|s| s.strategy == strategy)
            .expect("every strategy is run")
    }
}

/// Runs all four strategies on common observation streams. When `out` is
/// given, writes the manifest, one CSV per strategy and trial, and
/// `compare.json`.
pub fn compare_strategies(
    scenario: &Scenario,
    out: Option<&Path>,
    waive: bool,
) -> Result<CompareReport> {
    let assumptions = gate(scenario, waive)?;
    if let Some(out) = out {
        prepare_out(out, scenario)?;
    }
    let c = &scenario.config;
    let v = perron(scenario)?;
    let memoryless = v
        .as_ref()
        .map(|v| memoryless_report(scenario, v))
        .transpose()?;
    let prediction = memoryless.as_ref().map(|m| m.prediction);

    let trials = (0..c.trials as u32)
        .into_par_iter()
        .map(|trial| {
            let mut digest: Option<String> = None;
            let mut strategies = Vec::with_capacity(4);
            for strategy in Strategy::ALL {
                let rec = run(
                    &scenario.run_config(strategy, trial),
                    &scenario.net,
                    &scenario.models,
                )?;
                match &digest {
                    None => digest = Some(rec.observation_digest.clone()),
                    Some(d) if *d != rec.observation_digest => {
                        return Err(CliError::StreamMismatch(trial))
                    }
                    Some(_) => {}
                }
                if let Some(out) = out {
                    let path: PathBuf = out.join(format!("trajectory_{strategy}_{trial:04}.csv"));
                    write_trajectory(&path, &rec)?;
                }
                let final_beliefs = rec.final_beliefs();
                let decisions = decisions(scenario, &final_beliefs)?;
                strategies.push(StrategyOutcome {
                    strategy,
                    outcome: Outcome::of(&decisions, c.theta0, c.theta_tx),
                    decisions,
                    final_beliefs,
                });
            }
            let realized = strategies
                .iter()
                .find(|s| s.strategy == Strategy::PartialMemoryless)
                .map(|s| s.outcome);
            let memoryless_prediction_holds = match (prediction, realized) {
                (Some(MemorylessPrediction::Learns), Some(o)) => Some(o == Outcome::Learns),
                (Some(MemorylessPrediction::Fooled), Some(o)) => Some(o == Outcome::Fooled),
                _ => None,
            };
            Ok(CompareTrial {
                trial,
                observation_digest: digest.unwrap_or_default(),
                strategies,
                memoryless_prediction_holds,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let report = CompareReport {
        theta0: c.theta0,
        theta_tx: c.theta_tx,
        horizon: c.horizon,
        assumptions,
        memoryless,
        trials,
    };
    if let Some(out) = out {
        write_json(&out.join(COMPARE_FILE), &report)?;
    }
    Ok(report)
}
