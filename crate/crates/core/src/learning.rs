//! Belief states and the social learning iteration.
//!
//! One iteration is two phases separated by a barrier: every agent first runs
//! the local Bayes step (`adapt`), producing its intermediate belief `psi`;
//! only then does any agent combine. Four strategies are supported:
//!
//! - `Full`: geometric pooling of complete neighbour vectors;
//! - `PartialMemoryless` / `PartialMemoryAware`: each neighbour transmits only
//!   its belief on the hypothesis of interest, which the receiver completes
//!   with the uniform or the memory-aware filling before pooling;
//! - `Standalone`: no communication, `mu = psi`.
//!
//! All arithmetic happens on log-beliefs with log-sum-exp normalisation.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::logmath::{log1m_exp, log_sum_exp_except, normalize_log};
use crate::models::{LikelihoodFamily, Observation};
use crate::rng::observation_stream;

/// Tolerance on the unit sum of user-supplied priors.
pub const PRIOR_SUM_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Full,
    #[serde(rename = "memoryless")]
    PartialMemoryless,
    #[serde(rename = "memory-aware")]
    PartialMemoryAware,
    Standalone,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Full,
        Strategy::PartialMemoryless,
        Strategy::PartialMemoryAware,
        Strategy::Standalone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Full => "full",
            Strategy::PartialMemoryless => "memoryless",
            Strategy::PartialMemoryAware => "memory-aware",
            Strategy::Standalone => "standalone",
        }
    }

    fn filling(self) -> Option<Filling> {
        match self {
            Strategy::PartialMemoryless => Some(Filling::Memoryless),
            Strategy::PartialMemoryAware => Some(Filling::MemoryAware),
            _ => None,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How a receiver completes a transmitted scalar into a full belief vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filling {
    /// Residual mass split uniformly over the other hypotheses.
    Memoryless,
    /// Residual mass split in proportion to the receiver's own `psi`.
    MemoryAware,
}

/// The single belief component an agent transmits, `psi(theta_tx)`.
///
/// It is carried as `ln p` together with `ln(1 - p)`, so that neither a belief
/// collapsing to zero nor one rounding to one loses precision. Both fields
/// describe the same scalar.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxBelief {
    log_p: f64,
    log_rest: f64,
}

impl TxBelief {
    /// Reads the transmitted component out of a normalised log-belief.
    pub fn from_log_belief(log_psi: &[f64], theta_tx: usize) -> Self {
        Self {
            log_p: log_psi[theta_tx],
            log_rest: log_sum_exp_except(log_psi, theta_tx),
        }
    }

    pub fn from_probability(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::TransmittedOutOfRange(p));
        }
        Ok(Self {
            log_p: p.ln(),
            log_rest: (-p).ln_1p(),
        })
    }

    pub fn from_log_probability(log_p: f64) -> Result<Self> {
        if !(log_p < 0.0 && log_p > f64::NEG_INFINITY) {
            return Err(Error::TransmittedOutOfRange(log_p.exp()));
        }
        Ok(Self {
            log_p,
            log_rest: log1m_exp(log_p),
        })
    }

    pub fn log_p(&self) -> f64 {
        self.log_p
    }

    /// `ln(1 - p)`.
    pub fn log_rest(&self) -> f64 {
        self.log_rest
    }

    pub fn probability(&self) -> f64 {
        self.log_p.exp()
    }
}

/// Memoryless filling: `p` on `theta_tx`, `(1 - p) / (H - 1)` elsewhere.
/// Writes log-beliefs into `out` (length `H`).
pub fn fill_memoryless(tx: TxBelief, theta_tx: usize, out: &mut [f64]) -> Result<()> {
    let h = out.len();
    if h < 2 {
        return Err(Error::InvalidScenario(
            "filling needs at least two hypotheses".into(),
        ));
    }
    let other = tx.log_rest - ((h - 1) as f64).ln();
    out.fill(other);
    out[theta_tx] = tx.log_p;
    Ok(())
}

/// Memory-aware filling: `p` on `theta_tx`; every other hypothesis gets
/// `psi_k(theta) (1 - p) / (1 - psi_k(theta_tx))`, where `psi_k` is the
/// receiver's own intermediate belief and `own` its own transmitted scalar.
pub fn fill_memory_aware(
    tx: TxBelief,
    own_log_psi: &[f64],
    own: TxBelief,
    theta_tx: usize,
    out: &mut [f64],
) -> Result<()> {
    if own.log_rest == f64::NEG_INFINITY {
        return Err(Error::DegenerateOwnBelief);
    }
    // Exactly zero when tx == own, which keeps self-filling an identity.
    let shift = tx.log_rest - own.log_rest;
    for (o, &lp) in out.iter_mut().zip(own_log_psi) {
        *o = lp + shift;
    }
    out[theta_tx] = tx.log_p;
    Ok(())
}

fn fill(
    filling: Filling,
    tx: TxBelief,
    own_log_psi: &[f64],
    own: TxBelief,
    theta_tx: usize,
    out: &mut [f64],
) -> Result<()> {
    match filling {
        Filling::Memoryless => fill_memoryless(tx, theta_tx, out),
        Filling::MemoryAware => fill_memory_aware(tx, own_log_psi, own, theta_tx, out),
    }
}

/// The channel a transmitted scalar crosses on its way from `from` to `to`.
///
/// The combine step only ever hands a [`TxBelief`] to a link, so the
/// receiver cannot see more than one scalar per neighbour.
pub trait Link {
    fn transmit(&mut self, from: usize, to: usize, value: TxBelief) -> TxBelief;
}

/// Lossless, instantaneous delivery.
#[derive(Debug, Default, Clone, Copy)]
pub struct DirectLink;

impl Link for DirectLink {
    fn transmit(&mut self, _from: usize, _to: usize, value: TxBelief) -> TxBelief {
        value
    }
}

/// Prior beliefs `mu_{k,0}`, one probability vector per agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Priors(Vec<Vec<f64>>);

impl Priors {
    pub fn uniform(agents: usize, hypotheses: usize) -> Self {
        Self(vec![vec![1.0 / hypotheses as f64; hypotheses]; agents])
    }

    /// Validates strict positivity and unit sums.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::InvalidScenario("no prior rows".into()));
        };
        let h = first.len();
        for (k, row) in rows.iter().enumerate() {
            if row.len() != h || h == 0 {
                return Err(Error::InvalidScenario(format!(
                    "prior of agent {k} has {} entries, expected {h}",
                    row.len()
                )));
            }
            if let Some(t) = row.iter().position(|&p| !p.is_finite() || p <= 0.0) {
                return Err(Error::AssumptionViolated {
                    number: 3,
                    detail: format!("prior of agent {k} is not positive at hypothesis {t}"),
                });
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > PRIOR_SUM_TOL {
                return Err(Error::InvalidScenario(format!(
                    "prior of agent {k} sums to {sum}"
                )));
            }
        }
        Ok(Self(rows))
    }

    pub fn num_agents(&self) -> usize {
        self.0.len()
    }

    pub fn num_hypotheses(&self) -> usize {
        self.0.first().map_or(0, Vec::len)
    }

    pub fn agent(&self, k: usize) -> &[f64] {
        &self.0[k]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.0
    }

    /// Smallest prior entry over all agents and hypotheses.
    pub fn min_entry(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Log-beliefs `ln mu_k` and intermediate log-beliefs `ln psi_k` of every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct BeliefState {
    /// Index of the most recent adapt phase (0 before the first one).
    iteration: usize,
    log_mu: Vec<Vec<f64>>,
    log_psi: Vec<Vec<f64>>,
}

impl BeliefState {
    pub fn from_priors(priors: &Priors) -> Self {
        let log_mu: Vec<Vec<f64>> = priors
            .rows()
            .iter()
            .map(|row| {
                let mut l: Vec<f64> = row.iter().map(|p| p.ln()).collect();
                normalize_log(&mut l);
                l
            })
            .collect();
        let log_psi = log_mu.clone();
        Self {
            iteration: 0,
            log_mu,
            log_psi,
        }
    }

    /// Builds a state from explicit log-vectors (used by tests and tools).
    pub fn from_log_parts(log_mu: Vec<Vec<f64>>, log_psi: Vec<Vec<f64>>) -> Self {
        Self {
            iteration: 0,
            log_mu,
            log_psi,
        }
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn num_agents(&self) -> usize {
        self.log_mu.len()
    }

    pub fn log_mu(&self, k: usize) -> &[f64] {
        &self.log_mu[k]
    }

    pub fn log_psi(&self, k: usize) -> &[f64] {
        &self.log_psi[k]
    }

    pub fn mu(&self, k: usize) -> Vec<f64> {
        self.log_mu[k].iter().map(|x| x.exp()).collect()
    }

    pub fn psi(&self, k: usize) -> Vec<f64> {
        self.log_psi[k].iter().map(|x| x.exp()).collect()
    }

    pub fn log_mu_all(&self) -> &[Vec<f64>] {
        &self.log_mu
    }

    pub fn log_psi_all(&self) -> &[Vec<f64>] {
        &self.log_psi
    }
}

/// Local Bayes step for one agent: `psi ∝ L(xi | .) mu`, in logs.
/// Returns `false` when the observation has zero likelihood everywhere.
pub fn adapt_agent(log_mu: &[f64], log_lik: &[f64], log_psi: &mut [f64]) -> bool {
    for ((p, &m), &l) in log_psi.iter_mut().zip(log_mu).zip(log_lik) {
        *p = m + l;
    }
    normalize_log(log_psi).is_finite()
}

/// Adapt phase for every agent; advances the state's iteration counter.
pub fn adapt(
    state: &mut BeliefState,
    observations: &[Observation],
    models: &[LikelihoodFamily],
) -> Result<()> {
    state.iteration += 1;
    let iteration = state.iteration;
    let mut log_lik = Vec::new();
    for (k, (obs, fam)) in observations.iter().zip(models).enumerate() {
        log_lik.resize(fam.num_hypotheses(), 0.0);
        fam.log_likelihoods(*obs, &mut log_lik)
            .map_err(|e| Error::Simulation {
                agent: k,
                iteration,
                source: Box::new(e),
            })?;
        if !adapt_agent(&state.log_mu[k], &log_lik, &mut state.log_psi[k]) {
            return Err(Error::ZeroLikelihood {
                agent: k,
                iteration,
            });
        }
    }
    Ok(())
}

/// Pools one agent's filled neighbour beliefs: `ln mu(theta) = sum_l a_lk ln
/// psi_hat_lk(theta) - lse`. Neighbour information enters only as the scalars
/// in `incoming` (weight, transmitted belief), self included.
pub fn combine_agent_partial(
    own_log_psi: &[f64],
    incoming: &[(f64, TxBelief)],
    filling: Filling,
    theta_tx: usize,
    scratch: &mut [f64],
    out: &mut [f64],
) -> Result<()> {
    let own = TxBelief::from_log_belief(own_log_psi, theta_tx);
    out.fill(0.0);
    for &(w, tx) in incoming {
        fill(filling, tx, own_log_psi, own, theta_tx, scratch)?;
        for (o, &s) in out.iter_mut().zip(scratch.iter()) {
            *o += w * s;
        }
    }
    normalize_log(out);
    Ok(())
}

/// Combine phase under partial sharing. Each off-diagonal neighbour's scalar
/// crosses `link` exactly once per iteration; the self term does not.
pub fn combine_partial<L: Link + ?Sized>(
    state: &mut BeliefState,
    net: &Network,
    filling: Filling,
    theta_tx: usize,
    link: &mut L,
) -> Result<()> {
    let outgoing: Vec<TxBelief> = state
        .log_psi
        .iter()
        .map(|p| TxBelief::from_log_belief(p, theta_tx))
        .collect();
    let h = state.log_psi.first().map_or(0, Vec::len);
    let mut scratch = vec![0.0; h];
    let mut incoming = Vec::new();
    for k in 0..state.num_agents() {
        incoming.clear();
        for &l in net.neighbors(k) {
            let value = if l == k {
                outgoing[k]
            } else {
                link.transmit(l, k, outgoing[l])
            };
            incoming.push((net.weight(l, k), value));
        }
        combine_agent_partial(
            &state.log_psi[k],
            &incoming,
            filling,
            theta_tx,
            &mut scratch,
            &mut state.log_mu[k],
        )
        .map_err(|e| Error::Simulation {
            agent: k,
            iteration: state.iteration,
            source: Box::new(e),
        })?;
    }
    Ok(())
}

/// Combine phase under full sharing: weighted geometric pooling of complete
/// neighbour vectors.
pub fn combine_full(state: &mut BeliefState, net: &Network) {
    for k in 0..state.num_agents() {
        let out = &mut state.log_mu[k];
        out.fill(0.0);
        for &l in net.neighbors(k) {
            let w = net.weight(l, k);
            for (o, &p) in out.iter_mut().zip(&state.log_psi[l]) {
                *o += w * p;
            }
        }
        normalize_log(out);
    }
}

/// Standalone step: local Bayes update with no communication.
pub fn step_standalone(
    state: &mut BeliefState,
    observations: &[Observation],
    models: &[LikelihoodFamily],
) -> Result<()> {
    adapt(state, observations, models)?;
    for k in 0..state.num_agents() {
        let (mu, psi) = (&mut state.log_mu[k], &state.log_psi[k]);
        mu.copy_from_slice(psi);
    }
    Ok(())
}

/// Everything needed to run one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub theta0: usize,
    pub theta_tx: usize,
    pub strategy: Strategy,
    pub priors: Priors,
    pub horizon: usize,
    pub seed: u64,
    #[serde(default)]
    pub trial: u32,
    /// Record every `stride`-th iteration (and the last one).
    pub stride: usize,
    /// Also record intermediate beliefs `psi` (needed for diagnostics).
    #[serde(default)]
    pub record_intermediate: bool,
}

impl ScenarioConfig {
    pub fn new(theta0: usize, theta_tx: usize, strategy: Strategy, priors: Priors) -> Self {
        Self {
            theta0,
            theta_tx,
            strategy,
            priors,
            horizon: 0,
            seed: 0,
            trial: 0,
            stride: 1,
            record_intermediate: false,
        }
    }

    pub fn num_hypotheses(&self) -> usize {
        self.priors.num_hypotheses()
    }

    fn validate(&self, net: &Network, models: &[LikelihoodFamily]) -> Result<()> {
        let k = net.num_agents();
        let h = self.num_hypotheses();
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.priors.num_agents() != k {
            return bad(format!(
                "{} prior rows for {k} agents",
                self.priors.num_agents()
            ));
        }
        if models.len() != k {
            return bad(format!("{} likelihood models for {k} agents", models.len()));
        }
        if let Some((i, m)) = models
            .iter()
            .enumerate()
            .find(|(_, m)| m.num_hypotheses() != h)
        {
            return bad(format!(
                "agent {i} model has {} hypotheses, expected {h}",
                m.num_hypotheses()
            ));
        }
        if h < 2 {
            return bad("need at least two hypotheses".into());
        }
        if self.theta0 >= h || self.theta_tx >= h {
            return bad(format!(
                "theta0 = {} and theta_tx = {} must be below H = {h}",
                self.theta0, self.theta_tx
            ));
        }
        if self.stride == 0 {
            return bad("stride must be positive".into());
        }
        Ok(())
    }
}

/// Log-beliefs of every agent at one iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub iteration: usize,
    pub log_beliefs: Vec<Vec<f64>>,
}

impl Snapshot {
    pub fn beliefs(&self, k: usize) -> Vec<f64> {
        self.log_beliefs[k].iter().map(|x| x.exp()).collect()
    }
}

/// Output of [`run`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub strategy: Strategy,
    pub theta0: usize,
    pub theta_tx: usize,
    pub horizon: usize,
    pub stride: usize,
    /// `mu` snapshots, starting with the priors at iteration 0.
    pub beliefs: Vec<Snapshot>,
    /// `psi` snapshots at the same iterations (from iteration 1), if recorded.
    pub intermediate: Vec<Snapshot>,
    /// SHA-256 over every observation fed to the run, in (iteration, agent) order.
    pub observation_digest: String,
}

impl TrajectoryRecord {
    pub fn last(&self) -> &Snapshot {
        self.beliefs
            .last()
            .expect("a record always holds the priors")
    }

    /// Final beliefs of every agent in the linear domain.
    pub fn final_beliefs(&self) -> Vec<Vec<f64>> {
        let last = self.last();
        (0..last.log_beliefs.len())
            .map(|k| last.beliefs(k))
            .collect()
    }

    /// Writes `iteration,agent,hypothesis,belief` rows; beliefs in the linear
    /// domain with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "iteration,agent,hypothesis,belief")?;
        for snap in &self.beliefs {
            for (k, row) in snap.log_beliefs.iter().enumerate() {
                for (theta, lp) in row.iter().enumerate() {
                    writeln!(w, "{},{k},{theta},{:.16e}", snap.iteration, lp.exp())?;
                }
            }
        }
        Ok(())
    }
}

/// Runs `config.horizon` iterations with lossless links.
pub fn run(
    config: &ScenarioConfig,
    net: &Network,
    models: &[LikelihoodFamily],
) -> Result<TrajectoryRecord> {
    run_with_link(config, net, models, &mut DirectLink)
}

/// Runs the scenario, routing every transmitted scalar through `link`.
pub fn run_with_link<L: Link + ?Sized>(
    config: &ScenarioConfig,
    net: &Network,
    models: &[LikelihoodFamily],
    link: &mut L,
) -> Result<TrajectoryRecord> {
    config.validate(net, models)?;
    let agents = net.num_agents();
    let mut state = BeliefState::from_priors(&config.priors);
    let mut record = TrajectoryRecord {
        strategy: config.strategy,
        theta0: config.theta0,
        theta_tx: config.theta_tx,
        horizon: config.horizon,
        stride: config.stride,
        beliefs: vec![Snapshot {
            iteration: 0,
            log_beliefs: state.log_mu.clone(),
        }],
        intermediate: Vec::new(),
        observation_digest: String::new(),
    };
    let mut hasher = Sha256::new();
    let mut observations = vec![Observation::Real(0.0); agents];

    for i in 1..=config.horizon {
        for (k, obs) in observations.iter_mut().enumerate() {
            let mut rng = observation_stream(config.seed, config.trial, k as u32, i as u64);
            *obs = models[k].sample(config.theta0, &mut rng);
            hash_observation(&mut hasher, *obs);
        }

        adapt(&mut state, &observations, models)?;
        match config.strategy {
            Strategy::Full => combine_full(&mut state, net),
            Strategy::Standalone => {
                for k in 0..agents {
                    let (mu, psi) = (&mut state.log_mu[k], &state.log_psi[k]);
                    mu.copy_from_slice(psi);
                }
            }
            s => {
                let filling = s.filling().expect("partial strategy");
                combine_partial(&mut state, net, filling, config.theta_tx, link)?;
            }
        }
        if let Some(k) = state
            .log_mu
            .iter()
            .position(|row| row.iter().any(|x| x.is_nan()))
        {
            return Err(Error::NonFiniteBelief {
                agent: k,
                iteration: i,
            });
        }

        if i % config.stride == 0 || i == config.horizon {
            record.beliefs.push(Snapshot {
                iteration: i,
                log_beliefs: state.log_mu.clone(),
            });
            if config.record_intermediate {
                record.intermediate.push(Snapshot {
                    iteration: i,
                    log_beliefs: state.log_psi.clone(),
                });
            }
        }
    }
    record.observation_digest = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    Ok(record)
}

fn hash_observation(hasher: &mut Sha256, obs: Observation) {
    match obs {
        Observation::Real(x) => hasher.update(x.to_bits().to_le_bytes()),
        Observation::Symbol(s) => hasher.update((s as u64).to_le_bytes()),
    }
}
