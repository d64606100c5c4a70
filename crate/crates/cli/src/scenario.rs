//! Turning a configuration into concrete objects, and back into a manifest.

use std::path::PathBuf;

use sociallearn::graph::Network;
use sociallearn::learning::{Priors, ScenarioConfig, Strategy};
use sociallearn::models::{
    derive_identifiability, draw_indistinguishable_sets, IdentifiabilityStructure, LikelihoodFamily,
};
use sociallearn::rng::derive_seed;

use crate::config::{
    DiagnosticsSpec, ExperimentConfig, GraphSpec, IdentifiabilitySpec, LikelihoodSpec, PriorName,
    PriorSpec,
};
use crate::error::{CliError, Result};

/// A configuration with every random or file-backed choice made.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub net: Network,
    pub models: Vec<LikelihoodFamily>,
    pub structure: IdentifiabilityStructure,
    pub priors: Priors,
}

impl Scenario {
    pub fn resolve(config: ExperimentConfig) -> Result<Self> {
        config.validate_early()?;
        let net = build_network(&config)?;
        let agents = net.num_agents();
        let mut errs = Vec::new();
        config.validate_into(Some(agents), &mut errs);
        if !errs.is_empty() {
            return Err(CliError::Invalid(errs));
        }
        let h = config.likelihood.num_hypotheses().unwrap_or(0);

        let base: Vec<LikelihoodFamily> = match &config.likelihood {
            LikelihoodSpec::Gaussian { means } => {
                vec![LikelihoodFamily::gaussian(means.clone())?; agents]
            }
            LikelihoodSpec::Discrete { table } => {
                vec![LikelihoodFamily::discrete(table.clone())?; agents]
            }
            LikelihoodSpec::GaussianPerAgent { means } => means
                .iter()
                .map(|m| LikelihoodFamily::gaussian(m.clone()))
                .collect::<Result<_, _>>()?,
            LikelihoodSpec::DiscretePerAgent { tables } => tables
                .iter()
                .map(|t| LikelihoodFamily::discrete(t.clone()))
                .collect::<Result<_, _>>()?,
        };

        let sets: Option<Vec<Vec<usize>>> = match &config.identifiability {
            IdentifiabilitySpec::Derived => None,
            IdentifiabilitySpec::Explicit { sets } => Some(sets.clone()),
            IdentifiabilitySpec::Cardinalities {
                pattern,
                seed,
                clear,
            } => {
                let cards: Vec<usize> = pattern
                    .iter()
                    .flat_map(|&[count, size]| std::iter::repeat_n(size, count))
                    .collect();
                let seed = seed.unwrap_or_else(|| derive_seed(config.seed, "sets"));
                let mut sets = draw_indistinguishable_sets(h, config.theta0, &cards, seed)?;
                for &k in clear {
                    sets[k].clear();
                }
                Some(sets)
            }
        };
        let models: Vec<LikelihoodFamily> = match &sets {
            Some(sets) => base
                .iter()
                .zip(sets)
                .map(|(fam, set)| fam.with_indistinguishable(config.theta0, set))
                .collect(),
            None => base,
        };
        let structure = derive_identifiability(&models, config.theta0)?;

        let priors = match &config.priors {
            PriorSpec::Named(PriorName::Uniform) => Priors::uniform(agents, h),
            PriorSpec::Explicit(rows) => Priors::new(rows.clone())?,
        };

        Ok(Self {
            config,
            net,
            models,
            structure,
            priors,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.net.num_agents()
    }

    /// The per-trajectory configuration for one trial.
    pub fn run_config(&self, strategy: Strategy, trial: u32) -> ScenarioConfig {
        let c = &self.config;
        let mut sc = ScenarioConfig::new(c.theta0, c.theta_tx, strategy, self.priors.clone());
        sc.horizon = c.horizon;
        sc.seed = c.seed;
        sc.trial = trial;
        sc.stride = c.stride;
        sc.record_intermediate = c.diagnostics.martingale;
        sc
    }

    /// A configuration that pins down this exact scenario: explicit weights,
    /// per-agent likelihoods and the resolved `I_k` memberships.
    pub fn manifest(&self) -> ExperimentConfig {
        let mut m = self.config.clone();
        m.out = None;
        m.graph = GraphSpec::Weights {
            matrix: self.net.matrix(),
        };
        m.likelihood = if self.models.iter().all(LikelihoodFamily::is_discrete) {
            LikelihoodSpec::DiscretePerAgent {
                tables: self
                    .models
                    .iter()
                    .map(|f| match f {
                        LikelihoodFamily::Discrete { table } => table.clone(),
                        LikelihoodFamily::Gaussian { .. } => unreachable!(),
                    })
                    .collect(),
            }
        } else {
            LikelihoodSpec::GaussianPerAgent {
                means: self
                    .models
                    .iter()
                    .map(|f| match f {
                        LikelihoodFamily::Gaussian { means } => means.clone(),
                        LikelihoodFamily::Discrete { .. } => unreachable!(),
                    })
                    .collect(),
            }
        };
        m.identifiability = IdentifiabilitySpec::Explicit {
            sets: (0..self.num_agents())
                .map(|k| self.structure.indistinguishable(k).to_vec())
                .collect(),
        };
        m
    }

    pub fn out_dir(&self, fallback: &str) -> PathBuf {
        self.config
            .out
            .clone()
            .unwrap_or_else(|| PathBuf::from(fallback))
    }
}

impl ExperimentConfig {
    /// Checks that need no graph; a file-backed graph is checked again once
    /// it is loaded.
    fn validate_early(&self) -> Result<()> {
        if matches!(self.graph, GraphSpec::File { .. }) {
            return Ok(());
        }
        self.validate()
    }
}

fn build_network(config: &ExperimentConfig) -> Result<Network> {
    Ok(match &config.graph {
        GraphSpec::ErdosRenyi { agents, p, seed } => {
            let seed = seed.unwrap_or_else(|| derive_seed(config.seed, "graph"));
            Network::erdos_renyi(*agents, *p, seed)?
        }
        GraphSpec::Undirected { agents, edges } => {
            let mut adj = vec![vec![false; *agents]; *agents];
            for &[a, b] in edges {
                adj[a][b] = true;
                adj[b][a] = true;
            }
            Network::metropolis(&adj)?
        }
        GraphSpec::Weights { matrix } => Network::from_matrix(matrix)?,
        GraphSpec::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            Network::from_edge_list(&text)?
        }
    })
}

/// Built-in scenarios with every random choice derived from one seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Canned {
    /// Transmitted hypothesis false.
    Panel2,
    /// Transmitted hypothesis true.
    Panel3,
    /// Transmitted hypothesis true, agent 0 with an empty `I_k`.
    Panel4,
}

impl Canned {
    pub const ALL: [Canned; 3] = [Canned::Panel2, Canned::Panel3, Canned::Panel4];

    pub fn name(self) -> &'static str {
        match self {
            Canned::Panel2 => "fig2-panel2",
            Canned::Panel3 => "fig2-panel3",
            Canned::Panel4 => "fig2-panel4",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    /// K = 20 agents on an Erdos-Renyi graph with p = 1/3, H = 10 unit-variance
    /// Gaussians with means 1..=10, uniform priors, `theta0 = 0`, and
    /// indistinguishable sets of sizes 4 (ten agents), 8 (five) and 2 (five).
    pub fn config(self, seed: u64) -> ExperimentConfig {
        let theta_tx = match self {
            Canned::Panel2 => 1,
            Canned::Panel3 | Canned::Panel4 => 0,
        };
        let clear = match self {
            Canned::Panel4 => vec![0],
            _ => Vec::new(),
        };
        ExperimentConfig {
            seed,
            trials: 1,
            horizon: 2000,
            stride: 1,
            theta0: 0,
            theta_tx,
            strategy: Strategy::PartialMemoryAware,
            out: None,
            priors: PriorSpec::default(),
            graph: GraphSpec::ErdosRenyi {
                agents: 20,
                p: 1.0 / 3.0,
                seed: None,
            },
            likelihood: LikelihoodSpec::Gaussian {
                means: (1..=10).map(f64::from).collect(),
            },
            identifiability: IdentifiabilitySpec::Cardinalities {
                pattern: vec![[10, 4], [5, 8], [5, 2]],
                seed: None,
                clear,
            },
            decision: Default::default(),
            diagnostics: DiagnosticsSpec::default(),
        }
    }
}
