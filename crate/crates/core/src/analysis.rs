//! Theoretical descriptors, asymptotic limit predictions, decision rules and
//! empirical diagnostics for social learning trajectories.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Connectivity, Network, PerronVector};
use crate::learning::{Priors, TrajectoryRecord};
use crate::logmath::{log_sum_exp, log_sum_exp_over};
use crate::models::{IdentifiabilityStructure, LikelihoodFamily, Observation};

/// Minimum Monte Carlo sample count for the fictitious-divergence estimate.
pub const MIN_MC_SAMPLES: usize = 10_000;
/// Width of the inconclusive band, in standard errors.
pub const INCONCLUSIVE_SE: f64 = 3.0;

/// Confusion ratios of the agents and their Perron-weighted network averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionSummary {
    /// `rho_k = mu_{k,0}(I_k) / mu_{k,0}(theta0)`.
    pub agent_rho: Vec<f64>,
    /// `J_k = |I_k|`.
    pub cardinalities: Vec<usize>,
    /// Network confusion ratio, `prod rho_k^{v_k}`.
    pub rho: f64,
    /// `prod J_k^{v_k}`.
    pub j: f64,
    pub perron: PerronVector,
}

pub fn confusion_summary(
    priors: &Priors,
    structure: &IdentifiabilityStructure,
    perron: &PerronVector,
) -> Result<ConfusionSummary> {
    let agents = structure.num_agents();
    if priors.num_agents() != agents || perron.len() != agents {
        return Err(Error::InvalidScenario(format!(
            "{} prior rows and a Perron vector of length {} for {agents} agents",
            priors.num_agents(),
            perron.len()
        )));
    }
    let theta0 = structure.theta0();
    // Summing ratios (rather than dividing a sum) keeps rho_k == J_k bit-exact
    // for flat priors.
    let agent_rho: Vec<f64> = (0..agents)
        .map(|k| {
            let prior = priors.agent(k);
            structure
                .indistinguishable(k)
                .iter()
                .map(|&t| prior[t] / prior[theta0])
                .sum()
        })
        .collect();
    let cardinalities = structure.cardinalities();
    let card_f: Vec<f64> = cardinalities.iter().map(|&c| c as f64).collect();
    Ok(ConfusionSummary {
        rho: weighted_geometric_mean(&agent_rho, perron.as_slice()),
        j: weighted_geometric_mean(&card_f, perron.as_slice()),
        agent_rho,
        cardinalities,
        perron: perron.clone(),
    })
}

/// `prod x_k^{w_k}`, computed in logs; zero as soon as any factor is zero.
fn weighted_geometric_mean(xs: &[f64], weights: &[f64]) -> f64 {
    if xs.contains(&0.0) {
        return 0.0;
    }
    xs.iter()
        .zip(weights)
        .map(|(x, w)| w * x.ln())
        .sum::<f64>()
        .exp()
}

/// Which asymptotic law applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Memory-aware strategy, transmitted hypothesis false.
    TxFalse,
    /// Memory-aware strategy, transmitted hypothesis true.
    TxTrue,
    /// No communication.
    Standalone,
}

impl Regime {
    pub fn network(theta0: usize, theta_tx: usize) -> Self {
        if theta0 == theta_tx {
            Regime::TxTrue
        } else {
            Regime::TxFalse
        }
    }
}

/// Almost-sure limits of every agent's belief vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitPrediction {
    pub regime: Regime,
    pub theta_tx: usize,
    /// `limits[k][theta]`.
    pub limits: Vec<Vec<f64>>,
}

/// Predicts the belief limits for the memory-aware strategy (network
/// regimes) or for standalone learning.
///
/// Network regimes require strong connectivity and global identifiability
/// and are refused otherwise.
pub fn predict_limits(
    net: &Network,
    summary: &ConfusionSummary,
    structure: &IdentifiabilityStructure,
    priors: &Priors,
    regime: Regime,
    theta_tx: usize,
) -> Result<LimitPrediction> {
    let theta0 = structure.theta0();
    let h = structure.num_hypotheses();
    if theta_tx >= h {
        return Err(Error::InvalidScenario(format!(
            "theta_tx = {theta_tx} out of range"
        )));
    }
    match regime {
        Regime::TxTrue if theta_tx != theta0 => {
            return Err(Error::InvalidScenario(
                "tx-true regime needs theta_tx == theta0".into(),
            ))
        }
        Regime::TxFalse if theta_tx == theta0 => {
            return Err(Error::InvalidScenario(
                "tx-false regime needs theta_tx != theta0".into(),
            ))
        }
        _ => {}
    }
    if regime != Regime::Standalone {
        match net.connectivity() {
            Connectivity::Connected => {}
            other => {
                return Err(Error::AssumptionViolated {
                    number: 1,
                    detail: format!("{other:?}"),
                })
            }
        }
        if let Some(t) = structure.shared_indistinguishable() {
            return Err(Error::AssumptionViolated {
                number: 4,
                detail: format!("hypothesis {t} is indistinguishable at every agent"),
            });
        }
    }

    let limits = (0..structure.num_agents())
        .map(|k| {
            let prior = priors.agent(k);
            let indist = structure.indistinguishable(k);
            let mut out = vec![0.0; h];
            match regime {
                Regime::TxFalse => {
                    // Residual mass on {theta0} ∪ I_k \ {tx}, proportional to the prior.
                    let set: Vec<usize> = std::iter::once(theta0)
                        .chain(indist.iter().copied().filter(|&t| t != theta_tx))
                        .collect();
                    let mass: f64 = set.iter().map(|&t| prior[t]).sum();
                    for &t in &set {
                        out[t] = prior[t] / mass;
                    }
                }
                Regime::TxTrue | Regime::Standalone => {
                    let rho = if regime == Regime::TxTrue {
                        summary.rho
                    } else {
                        summary.agent_rho[k]
                    };
                    out[theta0] = 1.0 / (1.0 + rho);
                    let mass: f64 = indist.iter().map(|&t| prior[t]).sum();
                    for &t in indist {
                        out[t] = rho / (1.0 + rho) * prior[t] / mass;
                    }
                }
            }
            out
        })
        .collect();
    Ok(LimitPrediction {
        regime,
        theta_tx,
        limits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Decision {
    Accept,
    Reject,
}

/// How the transmitted hypothesis is classified.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum DecisionRuleConfig {
    /// Fixed threshold.
    Explicit { tau: f64 },
    /// `tau = min prior entry - epsilon`.
    MinPrior { epsilon: f64 },
    /// `tau = 1/H - epsilon`.
    Uniform { epsilon: f64 },
    /// Accept iff the transmitted hypothesis maximises the belief.
    MaxBelief,
}

impl Default for DecisionRuleConfig {
    fn default() -> Self {
        DecisionRuleConfig::Uniform { epsilon: 0.01 }
    }
}

/// A validated threshold `tau` in (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidScenario(format!(
                "threshold {tau} is outside (0, 1)"
            )));
        }
        Ok(Self(tau))
    }

    pub fn min_prior(priors: &Priors, epsilon: f64) -> Result<Self> {
        let floor = priors.min_entry();
        if !(epsilon > 0.0 && epsilon < floor) {
            return Err(Error::InvalidScenario(format!(
                "epsilon {epsilon} must lie in (0, {floor})"
            )));
        }
        Self::new(floor - epsilon)
    }

    pub fn uniform(hypotheses: usize, epsilon: f64) -> Result<Self> {
        let flat = 1.0 / hypotheses as f64;
        if !(epsilon > 0.0 && epsilon < flat) {
            return Err(Error::InvalidScenario(format!(
                "epsilon {epsilon} must lie in (0, {flat})"
            )));
        }
        Self::new(flat - epsilon)
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl DecisionRuleConfig {
    /// The threshold this rule uses, `None` for the max-belief rule.
    pub fn threshold(&self, priors: &Priors) -> Result<Option<Threshold>> {
        match *self {
            Self::Explicit { tau } => Threshold::new(tau).map(Some),
            Self::MinPrior { epsilon } => Threshold::min_prior(priors, epsilon).map(Some),
            Self::Uniform { epsilon } => {
                Threshold::uniform(priors.num_hypotheses(), epsilon).map(Some)
            }
            Self::MaxBelief => Ok(None),
        }
    }

    pub fn classify(&self, priors: &Priors, belief: &[f64], theta_tx: usize) -> Result<Decision> {
        Ok(match self.threshold(priors)? {
            Some(tau) => decide(belief[theta_tx], tau),
            None => max_belief_classify(belief, theta_tx),
        })
    }
}

/// Threshold test: reject iff the belief is at most `tau`.
pub fn decide(belief_tx: f64, tau: Threshold) -> Decision {
    if belief_tx <= tau.0 {
        Decision::Reject
    } else {
        Decision::Accept
    }
}

/// Accept iff `theta_tx` is the (lowest-index) maximiser of the belief.
pub fn max_belief_classify(belief: &[f64], theta_tx: usize) -> Decision {
    let mut best = 0;
    for (t, &b) in belief.iter().enumerate() {
        if b > belief[best] {
            best = t;
        }
    }
    if best == theta_tx {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

/// Predicted outcome of the memoryless strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MemorylessPrediction {
    Learns,
    Fooled,
    /// `|d_tx - d_fict|` is within the Monte Carlo uncertainty band.
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemorylessComparison {
    /// `sum_k v_k D(L_{k,theta0} || L_{k,theta_tx})`.
    pub d_tx: f64,
    /// `sum_k v_k D(L_{k,theta0} || f_k)`, `f_k` the uniform mixture of the
    /// non-transmitted likelihoods.
    pub d_fict: f64,
    /// Standard error of `d_fict` (zero when computed exactly).
    pub d_fict_se: f64,
    pub agent_fict: Vec<f64>,
    pub agent_fict_se: Vec<f64>,
    pub prediction: MemorylessPrediction,
}

/// Compares the two divergences that decide whether the memoryless strategy
/// rejects a false transmitted hypothesis.
pub fn memoryless_comparison(
    models: &[LikelihoodFamily],
    perron: &PerronVector,
    theta0: usize,
    theta_tx: usize,
    mc_samples: usize,
    seed: u64,
) -> Result<MemorylessComparison> {
    if mc_samples < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples {
            got: mc_samples,
            min: MIN_MC_SAMPLES,
        });
    }
    if models.len() != perron.len() {
        return Err(Error::InvalidScenario(
            "one model per agent required".into(),
        ));
    }
    let mut d_tx = 0.0;
    let mut agent_fict = Vec::with_capacity(models.len());
    let mut agent_fict_se = Vec::with_capacity(models.len());
    for (k, fam) in models.iter().enumerate() {
        let h = fam.num_hypotheses();
        if h < 2 || theta0 >= h || theta_tx >= h {
            return Err(Error::InvalidScenario(format!(
                "bad hypotheses for agent {k}"
            )));
        }
        d_tx += perron[k] * fam.kl_divergence(theta0, theta_tx)?;
        let (est, se) = fictitious_divergence(fam, theta0, theta_tx, mc_samples, seed, k as u64)?;
        agent_fict.push(est);
        agent_fict_se.push(se);
    }
    let d_fict: f64 = agent_fict
        .iter()
        .zip(perron.as_slice())
        .map(|(d, v)| v * d)
        .sum();
    let d_fict_se = agent_fict_se
        .iter()
        .zip(perron.as_slice())
        .map(|(s, v)| (v * s).powi(2))
        .sum::<f64>()
        .sqrt();
    let prediction = if theta_tx == theta0 {
        MemorylessPrediction::Learns
    } else {
        let gap = d_tx - d_fict;
        let band = INCONCLUSIVE_SE * d_fict_se;
        if gap > band {
            MemorylessPrediction::Learns
        } else if gap < -band {
            MemorylessPrediction::Fooled
        } else {
            MemorylessPrediction::Inconclusive
        }
    };
    Ok(MemorylessComparison {
        d_tx,
        d_fict,
        d_fict_se,
        agent_fict,
        agent_fict_se,
        prediction,
    })
}

/// `D(L_theta0 || f)` with `f = mean_{tau != tx} L_tau`; exact for discrete
/// families, Monte Carlo under `L_theta0` otherwise. Returns (estimate, SE).
fn fictitious_divergence(
    fam: &LikelihoodFamily,
    theta0: usize,
    theta_tx: usize,
    samples: usize,
    seed: u64,
    stream: u64,
) -> Result<(f64, f64)> {
    let h = fam.num_hypotheses();
    let others: Vec<usize> = (0..h).filter(|&t| t != theta_tx).collect();
    if others.iter().all(|&t| fam.same_model(t, theta0)) {
        return Ok((0.0, 0.0));
    }
    let log_mix_norm = ((h - 1) as f64).ln();
    let log_ratio = |obs: Observation| -> Result<f64> {
        let l0 = fam.log_likelihood(obs, theta0)?;
        let terms: Vec<f64> = others
            .iter()
            .map(|&t| fam.log_likelihood(obs, t))
            .collect::<Result<_>>()?;
        Ok(l0 - (log_sum_exp(&terms) - log_mix_norm))
    };
    match fam {
        LikelihoodFamily::Discrete { table } => {
            let mut total = 0.0;
            for (s, &p) in table[theta0].iter().enumerate() {
                if p > 0.0 {
                    total += p * log_ratio(Observation::Symbol(s))?;
                }
            }
            Ok((total.max(0.0), 0.0))
        }
        LikelihoodFamily::Gaussian { .. } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            let mut stats = RunningStats::default();
            for _ in 0..samples {
                stats.push(log_ratio(fam.sample(theta0, &mut rng))?);
            }
            Ok((stats.mean(), stats.standard_error()))
        }
    }
}

/// Welford accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct RunningStats {
    n: usize,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn mean(&self) -> f64 {
        self.mean
    }

    fn standard_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Mean one-step increment of a series with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementStats {
    pub steps: usize,
    pub mean: f64,
    pub standard_error: f64,
}

impl IncrementStats {
    pub fn of(series: &[f64]) -> Self {
        let mut stats = RunningStats::default();
        for w in series.windows(2) {
            stats.push(w[1] - w[0]);
        }
        Self {
            steps: stats.n,
            mean: stats.mean(),
            standard_error: stats.standard_error(),
        }
    }

    /// `|mean| <= z * SE`.
    pub fn within(&self, z: f64) -> bool {
        self.mean.abs() <= z * self.standard_error
    }
}

/// Time series of the submartingale and martingale quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleDiagnostics {
    pub iterations: Vec<usize>,
    /// `m_i = sum_k v_k ln mu_{k,i}(theta0)`.
    pub m: Vec<f64>,
    /// `n_i(S) = sum_k v_k ln mu_{k,i}(S_k)`; `None` when some `S_k` is empty.
    pub n: Option<Vec<f64>>,
    /// Iterations of the ratio series: 0 (priors) then every recorded `psi`.
    pub ratio_iterations: Vec<usize>,
    /// `psi_{k,i}(D_k) / psi_{k,i}(I_k)` per agent; `None` when `I_k` is empty.
    pub ratio: Vec<Option<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioReport {
    pub agent: usize,
    pub increment: IncrementStats,
    pub within_3se: bool,
    pub terminal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub m_nonpositive: bool,
    pub n_nonpositive: Option<bool>,
    pub m_increment: IncrementStats,
    pub n_increment: Option<IncrementStats>,
    pub ratio: Vec<RatioReport>,
}

/// Default sets `S_k = ({theta0} ∪ I_k) \ {theta_tx}`.
pub fn default_sets(structure: &IdentifiabilityStructure, theta_tx: usize) -> Vec<Vec<usize>> {
    let theta0 = structure.theta0();
    (0..structure.num_agents())
        .map(|k| {
            std::iter::once(theta0)
                .chain(structure.indistinguishable(k).iter().copied())
                .filter(|&t| t != theta_tx)
                .collect()
        })
        .collect()
}

/// Computes the diagnostic series of a trajectory and tests them. The ratio
/// series needs the trajectory's intermediate beliefs; without them it is
/// empty.
pub fn martingale_diagnostics(
    trajectory: &TrajectoryRecord,
    structure: &IdentifiabilityStructure,
    perron: &PerronVector,
    sets: Option<&[Vec<usize>]>,
) -> Result<(MartingaleDiagnostics, MartingaleReport)> {
    let agents = structure.num_agents();
    if perron.len() != agents {
        return Err(Error::InvalidScenario(
            "Perron vector length mismatch".into(),
        ));
    }
    let theta0 = structure.theta0();
    let owned_sets;
    let sets = match sets {
        Some(s) => s,
        None => {
            owned_sets = default_sets(structure, trajectory.theta_tx);
            &owned_sets
        }
    };
    if sets.len() != agents {
        return Err(Error::InvalidScenario("one set per agent required".into()));
    }
    let v = perron.as_slice();

    let iterations: Vec<usize> = trajectory.beliefs.iter().map(|s| s.iteration).collect();
    let m: Vec<f64> = trajectory
        .beliefs
        .iter()
        .map(|s| (0..agents).map(|k| v[k] * s.log_beliefs[k][theta0]).sum())
        .collect();
    let n = sets.iter().all(|s| !s.is_empty()).then(|| {
        trajectory
            .beliefs
            .iter()
            .map(|s| {
                (0..agents)
                    .map(|k| {
                        // Rounding can push a near-full-mass subset a hair above zero.
                        v[k] * log_sum_exp_over(&s.log_beliefs[k], sets[k].iter().copied()).min(0.0)
                    })
                    .sum()
            })
            .collect::<Vec<f64>>()
    });

    let mut ratio_iterations = Vec::new();
    let mut ratio = Vec::with_capacity(agents);
    if !trajectory.intermediate.is_empty() {
        ratio_iterations.push(0);
        ratio_iterations.extend(trajectory.intermediate.iter().map(|s| s.iteration));
    }
    let prior = &trajectory.beliefs[0];
    for k in 0..agents {
        let dist = structure.distinguishable(k);
        let indist = structure.indistinguishable(k);
        if indist.is_empty() || trajectory.intermediate.is_empty() {
            ratio.push(None);
            continue;
        }
        let r = |log_b: &[f64]| {
            (log_sum_exp_over(log_b, dist.iter().copied())
                - log_sum_exp_over(log_b, indist.iter().copied()))
            .exp()
        };
        let series: Vec<f64> = std::iter::once(r(&prior.log_beliefs[k]))
            .chain(trajectory.intermediate.iter().map(|s| r(&s.log_beliefs[k])))
            .collect();
        ratio.push(Some(series));
    }

    let report = MartingaleReport {
        m_nonpositive: m.iter().all(|&x| x <= 0.0),
        n_nonpositive: n.as_ref().map(|n| n.iter().all(|&x| x <= 0.0)),
        m_increment: IncrementStats::of(&m),
        n_increment: n.as_deref().map(IncrementStats::of),
        ratio: ratio
            .iter()
            .enumerate()
            .filter_map(|(agent, s)| {
                let s = s.as_ref()?;
                let increment = IncrementStats::of(s);
                Some(RatioReport {
                    agent,
                    increment,
                    within_3se: increment.within(3.0),
                    terminal: *s.last()?,
                })
            })
            .collect(),
    };
    Ok((
        MartingaleDiagnostics {
            iterations,
            m,
            n,
            ratio_iterations,
            ratio,
        },
        report,
    ))
}

/// Largest relative deviation, over every snapshot and agent, of the belief
/// ratios that the dynamics keep frozen at their prior values: within `I_k`
/// when `theta_tx == theta0`, within `({theta0} ∪ I_k) \ {theta_tx}` when it
/// is not, and within `{theta0} ∪ I_k` for standalone runs.
pub fn frozen_ratio_drift(
    trajectory: &TrajectoryRecord,
    structure: &IdentifiabilityStructure,
    standalone: bool,
) -> f64 {
    let theta0 = structure.theta0();
    let tx = trajectory.theta_tx;
    let prior = &trajectory.beliefs[0];
    let mut worst: f64 = 0.0;
    for k in 0..structure.num_agents() {
        let indist = structure.indistinguishable(k).iter().copied();
        let set: Vec<usize> = if standalone {
            std::iter::once(theta0).chain(indist).collect()
        } else if tx == theta0 {
            indist.collect()
        } else {
            std::iter::once(theta0)
                .chain(indist)
                .filter(|&t| t != tx)
                .collect()
        };
        let Some((&anchor, rest)) = set.split_first() else {
            continue;
        };
        let base = &prior.log_beliefs[k];
        for snap in &trajectory.beliefs {
            let lb = &snap.log_beliefs[k];
            for &t in rest {
                let drift = (lb[t] - lb[anchor]) - (base[t] - base[anchor]);
                worst = worst.max(drift.exp_m1().abs());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{expand_cardinality_pattern, IdentifiabilityStructure};

    fn sets_with_cards(cards: &[usize]) -> Vec<Vec<usize>> {
        // Agent k confused about 1..=J_k; the last agent takes the top J_k
        // hypotheses instead so that the intersection is empty (needs J_k < 5).
        let last = cards.len() - 1;
        cards
            .iter()
            .enumerate()
            .map(|(k, &c)| {
                if k == last {
                    (10 - c..10).collect()
                } else {
                    (1..=c).collect()
                }
            })
            .collect()
    }

    #[test]
    fn block_pattern_gives_j_four() {
        let cards = expand_cardinality_pattern(&[(10, 4), (5, 8), (5, 2)]);
        let st = IdentifiabilityStructure::from_indistinguishable(10, 0, &sets_with_cards(&cards))
            .unwrap();
        let s =
            confusion_summary(&Priors::uniform(20, 10), &st, &PerronVector::uniform(20)).unwrap();
        assert!((s.j - 4.0).abs() < 1e-9, "J = {}", s.j);
        assert_eq!(s.rho, s.j);
        for (r, &c) in s.agent_rho.iter().zip(&cards) {
            assert_eq!(*r, c as f64);
        }
    }

    #[test]
    fn empty_set_zeroes_both_ratios() {
        let st =
            IdentifiabilityStructure::from_indistinguishable(3, 0, &[vec![], vec![1, 2]]).unwrap();
        let s = confusion_summary(&Priors::uniform(2, 3), &st, &PerronVector::uniform(2)).unwrap();
        assert_eq!((s.rho, s.j), (0.0, 0.0));
    }

    fn complete(k: usize) -> Network {
        let adj = vec![vec![true; k]; k];
        Network::metropolis(&adj).unwrap()
    }

    #[test]
    fn limits_tx_true_uniform() {
        let cards = expand_cardinality_pattern(&[(10, 4), (5, 8), (5, 2)]);
        let st = IdentifiabilityStructure::from_indistinguishable(10, 0, &sets_with_cards(&cards))
            .unwrap();
        let priors = Priors::uniform(20, 10);
        let net = complete(20);
        let s = confusion_summary(&priors, &st, &net.perron_vector().unwrap()).unwrap();
        let p = predict_limits(&net, &s, &st, &priors, Regime::TxTrue, 0).unwrap();
        for (k, row) in p.limits.iter().enumerate() {
            assert!((row[0] - 0.2).abs() < 1e-9);
            for &t in st.indistinguishable(k) {
                assert!((row[t] - 4.0 / cards[k] as f64 * 0.2).abs() < 1e-9);
            }
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn limits_tx_false_equipartition() {
        let st = IdentifiabilityStructure::from_indistinguishable(5, 0, &[vec![1, 2, 3], vec![4]])
            .unwrap();
        let priors = Priors::uniform(2, 5);
        let net = complete(2);
        let s = confusion_summary(&priors, &st, &net.perron_vector().unwrap()).unwrap();
        let p = predict_limits(&net, &s, &st, &priors, Regime::TxFalse, 2).unwrap();
        // Agent 0: {0, 1, 3}; agent 1: {0, 4}.
        assert_eq!(p.limits[0], vec![1.0 / 3.0, 1.0 / 3.0, 0.0, 1.0 / 3.0, 0.0]);
        assert_eq!(p.limits[1], vec![0.5, 0.0, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn limits_rho_zero_and_standalone() {
        let st =
            IdentifiabilityStructure::from_indistinguishable(3, 0, &[vec![], vec![1]]).unwrap();
        let priors = Priors::new(vec![vec![0.5, 0.25, 0.25], vec![0.2, 0.6, 0.2]]).unwrap();
        let net = complete(2);
        let s = confusion_summary(&priors, &st, &net.perron_vector().unwrap()).unwrap();
        let p = predict_limits(&net, &s, &st, &priors, Regime::TxTrue, 0).unwrap();
        assert_eq!(p.limits[0][0], 1.0);
        assert_eq!(p.limits[1][0], 1.0);
        let p = predict_limits(&net, &s, &st, &priors, Regime::Standalone, 0).unwrap();
        // rho_1 = 0.6 / 0.2 = 3.
        assert!((p.limits[1][0] - 0.25).abs() < 1e-12);
        assert!((p.limits[1][1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn limits_refuse_broken_assumptions() {
        let st =
            IdentifiabilityStructure::from_indistinguishable(3, 0, &[vec![1], vec![1]]).unwrap();
        let priors = Priors::uniform(2, 3);
        let net = complete(2);
        let s = confusion_summary(&priors, &st, &net.perron_vector().unwrap()).unwrap();
        assert!(matches!(
            predict_limits(&net, &s, &st, &priors, Regime::TxTrue, 0),
            Err(Error::AssumptionViolated { number: 4, .. })
        ));
        assert!(predict_limits(&net, &s, &st, &priors, Regime::Standalone, 0).is_ok());
        let split = Network::from_matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let st =
            IdentifiabilityStructure::from_indistinguishable(3, 0, &[vec![1], vec![]]).unwrap();
        assert!(matches!(
            predict_limits(&split, &s, &st, &priors, Regime::TxFalse, 1),
            Err(Error::AssumptionViolated { number: 1, .. })
        ));
        assert!(predict_limits(&net, &s, &st, &priors, Regime::TxFalse, 0).is_err());
    }

    #[test]
    fn threshold_rules() {
        let tau = Threshold::uniform(10, 0.01).unwrap();
        assert!((tau.value() - 0.09).abs() < 1e-15);
        assert_eq!(decide(0.19, tau), Decision::Accept);
        assert_eq!(decide(tau.value(), tau), Decision::Reject);
        assert_eq!(decide(1e-6, tau), Decision::Reject);
        assert!(Threshold::uniform(10, 0.1).is_err());
        assert!(Threshold::uniform(10, 0.0).is_err());
        let priors = Priors::new(vec![vec![0.7, 0.3], vec![0.4, 0.6]]).unwrap();
        assert!((Threshold::min_prior(&priors, 0.05).unwrap().value() - 0.25).abs() < 1e-15);
        assert!(Threshold::min_prior(&priors, 0.3).is_err());
    }

    #[test]
    fn max_belief_rule() {
        assert_eq!(max_belief_classify(&[0.1, 0.6, 0.3], 1), Decision::Accept);
        assert_eq!(max_belief_classify(&[0.25; 4], 0), Decision::Accept);
        assert_eq!(max_belief_classify(&[0.25; 4], 2), Decision::Reject);
        // Limits for an agent with J_k = 2 < J = 4.
        let mut limit = vec![0.0; 10];
        limit[0] = 0.2;
        limit[3] = 0.4;
        limit[7] = 0.4;
        assert_eq!(max_belief_classify(&limit, 0), Decision::Reject);
        let rule = DecisionRuleConfig::Uniform { epsilon: 0.01 };
        assert_eq!(
            rule.classify(&Priors::uniform(1, 10), &limit, 0).unwrap(),
            Decision::Accept
        );
    }

    #[test]
    fn memoryless_comparison_discrete_is_exact() {
        let fam = LikelihoodFamily::discrete(vec![vec![0.5, 0.5], vec![0.9, 0.1], vec![0.1, 0.9]])
            .unwrap();
        let c = memoryless_comparison(&[fam], &PerronVector::uniform(1), 0, 1, MIN_MC_SAMPLES, 1)
            .unwrap();
        assert_eq!(c.d_fict_se, 0.0);
        // f = (L_0 + L_2) / 2 = (0.3, 0.7).
        let want = 0.5 * (0.5f64 / 0.3).ln() + 0.5 * (0.5f64 / 0.7).ln();
        assert!((c.d_fict - want).abs() < 1e-15);
        let kl_tx = 0.5 * (0.5f64 / 0.9).ln() + 0.5 * (0.5f64 / 0.1).ln();
        assert!((c.d_tx - kl_tx).abs() < 1e-15);
        assert_eq!(c.prediction, MemorylessPrediction::Learns);
    }

    #[test]
    fn memoryless_comparison_edge_cases() {
        let flat = LikelihoodFamily::gaussian(vec![0.0, 1.0, 0.0]).unwrap();
        let c = memoryless_comparison(&[flat], &PerronVector::uniform(1), 0, 1, MIN_MC_SAMPLES, 1)
            .unwrap();
        assert_eq!((c.d_fict, c.d_fict_se), (0.0, 0.0));

        let g = LikelihoodFamily::gaussian(vec![0.0, 0.5, 3.0]).unwrap();
        let c = memoryless_comparison(
            std::slice::from_ref(&g),
            &PerronVector::uniform(1),
            0,
            0,
            20_000,
            1,
        )
        .unwrap();
        assert_eq!(c.d_tx, 0.0);
        assert_eq!(c.prediction, MemorylessPrediction::Learns);
        assert!(matches!(
            memoryless_comparison(&[g], &PerronVector::uniform(1), 0, 1, 9_999, 1),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn increment_stats_basics() {
        let s = IncrementStats::of(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!((s.steps, s.mean, s.standard_error), (3, 1.0, 0.0));
        assert!(!s.within(3.0));
        assert!(IncrementStats::of(&[1.0, 1.0, 1.0]).within(3.0));
    }
}
