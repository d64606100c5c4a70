//! Experiment configuration, read from and written to TOML.
//!
//! Hypothesis and agent indices are zero-based. A minimal file:
//!
//! ```toml
//! seed = 7
//! horizon = 2000
//! theta0 = 0
//! theta_tx = 0
//! strategy = "memory-aware"
//!
//! [graph]
//! kind = "erdos-renyi"
//! agents = 20
//! p = 0.3333333333333333
//!
//! [likelihood]
//! kind = "gaussian"
//! means = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]
//!
//! [identifiability]
//! kind = "cardinalities"
//! pattern = [[10, 4], [5, 8], [5, 2]]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sociallearn::analysis::{DecisionRuleConfig, Threshold, MIN_MC_SAMPLES};
use sociallearn::learning::Strategy;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    pub horizon: usize,
    #[serde(default = "one")]
    pub stride: usize,
    pub theta0: usize,
    pub theta_tx: usize,
    pub strategy: Strategy,
    /// Artifact directory; the `--out` flag takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub priors: PriorSpec,
    pub graph: GraphSpec,
    pub likelihood: LikelihoodSpec,
    #[serde(default)]
    pub identifiability: IdentifiabilitySpec,
    #[serde(default)]
    pub decision: DecisionRuleConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsSpec,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PriorSpec {
    Named(PriorName),
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorName {
    Uniform,
}

impl Default for PriorSpec {
    fn default() -> Self {
        PriorSpec::Named(PriorName::Uniform)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GraphSpec {
    /// Undirected Erdos-Renyi draw with Metropolis weights. Without an
    /// explicit `seed` one is derived from the experiment seed.
    ErdosRenyi {
        agents: usize,
        p: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    /// Undirected edge list with Metropolis weights.
    Undirected {
        agents: usize,
        edges: Vec<[usize; 2]>,
    },
    /// Explicit combination matrix, `matrix[l][k] = a_lk`.
    Weights { matrix: Vec<Vec<f64>> },
    /// Edge-list file (`K` header, then `l k weight` lines), relative to the
    /// configuration file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LikelihoodSpec {
    /// Unit-variance Gaussians shared by every agent, one mean per hypothesis.
    Gaussian {
        means: Vec<f64>,
    },
    GaussianPerAgent {
        means: Vec<Vec<f64>>,
    },
    /// One discrete distribution per hypothesis, shared by every agent.
    Discrete {
        table: Vec<Vec<f64>>,
    },
    DiscretePerAgent {
        tables: Vec<Vec<Vec<f64>>>,
    },
}

impl LikelihoodSpec {
    pub fn num_hypotheses(&self) -> Option<usize> {
        match self {
            Self::Gaussian { means } => Some(means.len()),
            Self::Discrete { table } => Some(table.len()),
            Self::GaussianPerAgent { means } => means.first().map(Vec::len),
            Self::DiscretePerAgent { tables } => tables.first().map(Vec::len),
        }
    }

    fn per_agent_count(&self) -> Option<usize> {
        match self {
            Self::GaussianPerAgent { means } => Some(means.len()),
            Self::DiscretePerAgent { tables } => Some(tables.len()),
            _ => None,
        }
    }
}

/// How each agent's indistinguishable set `I_k` comes about. For
/// `explicit` and `cardinalities` the likelihood of every member of `I_k` is
/// overwritten with that of `theta0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum IdentifiabilitySpec {
    /// Read off the likelihoods as given.
    #[default]
    Derived,
    Explicit {
        sets: Vec<Vec<usize>>,
    },
    /// Random sets with the given sizes and an empty common intersection.
    /// `pattern` lists `[agent count, set size]` blocks; agents in `clear`
    /// get an empty set afterwards.
    Cardinalities {
        pattern: Vec<[usize; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        clear: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsSpec {
    /// Record intermediate beliefs and report the martingale diagnostics.
    #[serde(default)]
    pub martingale: bool,
    /// Report the memoryless `d_tx` / `d_fict` comparison even when the
    /// strategy is not memoryless.
    #[serde(default)]
    pub memoryless: bool,
    #[serde(default = "default_mc_samples")]
    pub memoryless_samples: usize,
}

fn default_mc_samples() -> usize {
    1_000_000
}

impl Default for DiagnosticsSpec {
    fn default() -> Self {
        Self {
            martingale: false,
            memoryless: false,
            memoryless_samples: default_mc_samples(),
        }
    }
}

/// Command-line overrides, applied before validation.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub horizon: Option<usize>,
    pub stride: Option<usize>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut config = Self::parse(&text, path)?;
        // Relative graph files resolve against the configuration's directory.
        if let GraphSpec::File { path: graph } = &mut config.graph {
            if graph.is_relative() {
                if let Some(dir) = path.parent() {
                    *graph = dir.join(&*graph);
                }
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration types always serialise")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(trials) = o.trials {
            self.trials = trials;
        }
        if let Some(horizon) = o.horizon {
            self.horizon = horizon;
        }
        if let Some(stride) = o.stride {
            self.stride = stride;
        }
        if let Some(out) = &o.out {
            self.out = Some(out.clone());
        }
    }

    /// Number of agents, when it is known without reading a graph file.
    pub fn num_agents(&self) -> Option<usize> {
        match &self.graph {
            GraphSpec::ErdosRenyi { agents, .. } | GraphSpec::Undirected { agents, .. } => {
                Some(*agents)
            }
            GraphSpec::Weights { matrix } => Some(matrix.len()),
            GraphSpec::File { .. } => None,
        }
    }

    /// Checks referential consistency and reports every violation at once.
    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        self.validate_into(None, &mut errs);
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Invalid(errs))
        }
    }

    /// As [`Self::validate`], with the agent count supplied by the caller
    /// (for graphs loaded from file).
    pub(crate) fn validate_into(&self, agents: Option<usize>, errs: &mut Vec<String>) {
        let agents = agents.or(self.num_agents());
        let h = self.likelihood.num_hypotheses();

        if self.trials == 0 {
            errs.push("trials must be at least 1".into());
        }
        if self.trials > u32::MAX as usize {
            errs.push("too many trials".into());
        }
        if self.stride == 0 {
            errs.push("stride must be at least 1".into());
        }

        match &self.graph {
            GraphSpec::ErdosRenyi { agents, p, .. } => {
                if *agents == 0 {
                    errs.push("graph.agents must be at least 1".into());
                }
                if !(*p > 0.0 && *p <= 1.0) {
                    errs.push(format!("graph.p = {p} must lie in (0, 1]"));
                }
            }
            GraphSpec::Undirected { agents, edges } => {
                if *agents == 0 {
                    errs.push("graph.agents must be at least 1".into());
                }
                for &[a, b] in edges {
                    if a >= *agents || b >= *agents {
                        errs.push(format!("graph edge [{a}, {b}] references a missing agent"));
                    }
                }
            }
            GraphSpec::Weights { matrix } => {
                if matrix.is_empty() {
                    errs.push("graph.matrix is empty".into());
                }
                for (l, row) in matrix.iter().enumerate() {
                    if row.len() != matrix.len() {
                        errs.push(format!("graph.matrix row {l} has {} entries", row.len()));
                    }
                }
            }
            GraphSpec::File { .. } => {}
        }

        match h {
            None | Some(0) => errs.push("likelihood lists no hypotheses".into()),
            Some(1) => errs.push("at least two hypotheses are needed".into()),
            Some(h) => {
                if self.theta0 >= h {
                    errs.push(format!("theta0 = {} is not below H = {h}", self.theta0));
                }
                if self.theta_tx >= h {
                    errs.push(format!("theta_tx = {} is not below H = {h}", self.theta_tx));
                }
            }
        }
        self.validate_likelihood(h, errs);
        if let (Some(k), Some(n)) = (agents, self.likelihood.per_agent_count()) {
            if k != n {
                errs.push(format!("likelihood lists {n} agents, the graph has {k}"));
            }
        }

        match &self.priors {
            PriorSpec::Named(PriorName::Uniform) => {}
            PriorSpec::Explicit(rows) => {
                if let Some(k) = agents {
                    if rows.len() != k {
                        errs.push(format!(
                            "priors list {} agents, the graph has {k}",
                            rows.len()
                        ));
                    }
                }
                for (k, row) in rows.iter().enumerate() {
                    if Some(row.len()) != h {
                        errs.push(format!("priors row {k} has {} entries", row.len()));
                    }
                }
            }
        }

        if let Some(h) = h.filter(|&h| h >= 2) {
            self.validate_identifiability(agents, h, errs);
            let tau = match (&self.decision, &self.priors) {
                (DecisionRuleConfig::Explicit { tau }, _) => Threshold::new(*tau).err(),
                (DecisionRuleConfig::Uniform { epsilon }, _) => {
                    Threshold::uniform(h, *epsilon).err()
                }
                (DecisionRuleConfig::MinPrior { epsilon }, PriorSpec::Named(_)) => {
                    Threshold::uniform(h, *epsilon).err()
                }
                (DecisionRuleConfig::MinPrior { epsilon }, PriorSpec::Explicit(rows)) => {
                    let floor = rows.iter().flatten().copied().fold(f64::INFINITY, f64::min);
                    (!(*epsilon > 0.0 && *epsilon < floor))
                        .then(|| format!("epsilon {epsilon} must lie in (0, {floor})"))
                        .map(sociallearn::Error::InvalidScenario)
                }
                (DecisionRuleConfig::MaxBelief, _) => None,
            };
            if let Some(e) = tau {
                errs.push(format!("decision: {e}"));
            }
        }

        if self.diagnostics.memoryless_samples < MIN_MC_SAMPLES {
            errs.push(format!(
                "diagnostics.memoryless_samples = {} is below {MIN_MC_SAMPLES}",
                self.diagnostics.memoryless_samples
            ));
        }
    }

    fn validate_likelihood(&self, h: Option<usize>, errs: &mut Vec<String>) {
        let check_table = |name: String, table: &[Vec<f64>], errs: &mut Vec<String>| {
            let width = table.first().map_or(0, Vec::len);
            for (t, row) in table.iter().enumerate() {
                if row.len() != width || width == 0 {
                    errs.push(format!("{name} row {t} has {} symbols", row.len()));
                }
                if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    errs.push(format!("{name} row {t} has a negative or non-finite entry"));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    errs.push(format!("{name} row {t} sums to {sum}"));
                }
            }
        };
        match &self.likelihood {
            LikelihoodSpec::Gaussian { means } => {
                if means.iter().any(|m| !m.is_finite()) {
                    errs.push("likelihood.means has a non-finite entry".into());
                }
            }
            LikelihoodSpec::GaussianPerAgent { means } => {
                for (k, row) in means.iter().enumerate() {
                    if Some(row.len()) != h {
                        errs.push(format!("likelihood.means[{k}] has {} entries", row.len()));
                    }
                    if row.iter().any(|m| !m.is_finite()) {
                        errs.push(format!("likelihood.means[{k}] has a non-finite entry"));
                    }
                }
            }
            LikelihoodSpec::Discrete { table } => {
                check_table("likelihood.table".into(), table, errs)
            }
            LikelihoodSpec::DiscretePerAgent { tables } => {
                for (k, table) in tables.iter().enumerate() {
                    if Some(table.len()) != h {
                        errs.push(format!("likelihood.tables[{k}] has {} rows", table.len()));
                    }
                    check_table(format!("likelihood.tables[{k}]"), table, errs);
                }
            }
        }
    }

    fn validate_identifiability(&self, agents: Option<usize>, h: usize, errs: &mut Vec<String>) {
        match &self.identifiability {
            IdentifiabilitySpec::Derived => {}
            IdentifiabilitySpec::Explicit { sets } => {
                if let Some(k) = agents {
                    if sets.len() != k {
                        errs.push(format!(
                            "identifiability lists {} sets for {k} agents",
                            sets.len()
                        ));
                    }
                }
                for (k, set) in sets.iter().enumerate() {
                    for &t in set {
                        if t >= h || t == self.theta0 {
                            errs.push(format!("identifiability.sets[{k}] contains invalid {t}"));
                        }
                    }
                }
            }
            IdentifiabilitySpec::Cardinalities { pattern, clear, .. } => {
                let total: usize = pattern.iter().map(|b| b[0]).sum();
                if let Some(k) = agents {
                    if total != k {
                        errs.push(format!(
                            "cardinality pattern covers {total} agents, not {k}"
                        ));
                    }
                }
                for &[_, size] in pattern {
                    if size >= h {
                        errs.push(format!("cardinality {size} exceeds H - 1 = {}", h - 1));
                    }
                }
                for &c in clear {
                    if c >= total {
                        errs.push(format!("identifiability.clear lists missing agent {c}"));
                    }
                }
            }
        }
    }
}
