//! Per-agent likelihood families, observation sampling, KL divergences and
//! the identifiability structure they induce.

use std::f64::consts::PI;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-sum tolerance for discrete probability tables.
pub const TABLE_TOL: f64 = 1e-12;
/// KL values at or below this are treated as zero (indistinguishable).
pub const KL_ZERO_TOL: f64 = 1e-12;
/// Residual below which a convex combination counts as reproducing the
/// true likelihood.
pub const CONVEX_RESIDUAL_TOL: f64 = 1e-9;
pub const SET_DRAW_MAX_ATTEMPTS: usize = 10_000;
/// Largest distinguishable set the convex-combination check enumerates.
pub const CONVEX_MAX_SET: usize = 16;

/// One observation: a real value for Gaussian families, a symbol index for
/// discrete ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Observation {
    Real(f64),
    Symbol(usize),
}

/// Likelihoods `L(xi | theta)` of one agent, one parameter set per hypothesis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LikelihoodFamily {
    /// Unit-variance Gaussians, `means[theta]` per hypothesis.
    Gaussian { means: Vec<f64> },
    /// Probability table over a finite alphabet, `table[theta][symbol]`.
    Discrete { table: Vec<Vec<f64>> },
}

impl LikelihoodFamily {
    pub fn gaussian(means: Vec<f64>) -> Result<Self> {
        let fam = Self::Gaussian { means };
        fam.validate()?;
        Ok(fam)
    }

    pub fn discrete(table: Vec<Vec<f64>>) -> Result<Self> {
        let fam = Self::Discrete { table };
        fam.validate()?;
        Ok(fam)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Gaussian { means } => {
                if means.is_empty() {
                    return Err(Error::InvalidModel("no hypotheses".into()));
                }
                if let Some(m) = means.iter().find(|m| !m.is_finite()) {
                    return Err(Error::InvalidModel(format!("non-finite mean {m}")));
                }
            }
            Self::Discrete { table } => {
                let Some(first) = table.first() else {
                    return Err(Error::InvalidModel("no hypotheses".into()));
                };
                if first.is_empty() {
                    return Err(Error::InvalidModel("empty alphabet".into()));
                }
                for (theta, row) in table.iter().enumerate() {
                    if row.len() != first.len() {
                        return Err(Error::InvalidModel(format!(
                            "row {theta} has {} symbols, expected {}",
                            row.len(),
                            first.len()
                        )));
                    }
                    if row.iter().any(|&p| !p.is_finite() || p < 0.0) {
                        return Err(Error::InvalidModel(format!(
                            "row {theta} has a negative entry"
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > TABLE_TOL {
                        return Err(Error::InvalidModel(format!("row {theta} sums to {sum}")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn num_hypotheses(&self) -> usize {
        match self {
            Self::Gaussian { means } => means.len(),
            Self::Discrete { table } => table.len(),
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Self::Discrete { .. })
    }

    /// Natural log of the density (Gaussian) or mass (discrete) at `obs`.
    pub fn log_likelihood(&self, obs: Observation, theta: usize) -> Result<f64> {
        match (self, obs) {
            (Self::Gaussian { means }, Observation::Real(x)) => {
                let d = x - means[theta];
                Ok(-0.5 * (2.0 * PI).ln() - 0.5 * d * d)
            }
            (Self::Discrete { table }, Observation::Symbol(s)) => {
                let alphabet = table[theta].len();
                if s >= alphabet {
                    return Err(Error::SymbolOutOfRange {
                        symbol: s,
                        alphabet,
                    });
                }
                Ok(table[theta][s].ln())
            }
            _ => Err(Error::ObservationKindMismatch),
        }
    }

    /// Fills `out[theta]` with `log L(obs | theta)` for every hypothesis.
    pub fn log_likelihoods(&self, obs: Observation, out: &mut [f64]) -> Result<()> {
        for (theta, o) in out.iter_mut().enumerate() {
            *o = self.log_likelihood(obs, theta)?;
        }
        Ok(())
    }

    /// `D_KL(L_p || L_q)`.
    pub fn kl_divergence(&self, p: usize, q: usize) -> Result<f64> {
        match self {
            Self::Gaussian { means } => {
                let d = means[p] - means[q];
                Ok(0.5 * d * d)
            }
            Self::Discrete { table } => {
                discrete_kl(&table[p], &table[q]).ok_or(Error::InfiniteDivergence { p, q })
            }
        }
    }

    /// True when hypotheses `p` and `q` carry identical parameters.
    pub fn same_model(&self, p: usize, q: usize) -> bool {
        match self {
            Self::Gaussian { means } => means[p] == means[q],
            Self::Discrete { table } => table[p] == table[q],
        }
    }

    /// Draws one observation from `L(. | theta)`.
    pub fn sample<R: Rng + ?Sized>(&self, theta: usize, rng: &mut R) -> Observation {
        match self {
            Self::Gaussian { means } => {
                let z: f64 = rng.sample(StandardNormal);
                Observation::Real(means[theta] + z)
            }
            Self::Discrete { table } => {
                let row = &table[theta];
                let u: f64 = rng.random();
                let mut cum = 0.0;
                for (s, &p) in row.iter().enumerate() {
                    cum += p;
                    if u < cum {
                        return Observation::Symbol(s);
                    }
                }
                // u landed in the rounding gap above the last cumulative sum.
                Observation::Symbol(row.iter().rposition(|&p| p > 0.0).unwrap_or(0))
            }
        }
    }

    /// Copies the parameters of `theta0` onto every hypothesis in `set`,
    /// making those hypotheses indistinguishable from `theta0`.
    pub fn with_indistinguishable(&self, theta0: usize, set: &[usize]) -> Self {
        let mut out = self.clone();
        match &mut out {
            Self::Gaussian { means } => {
                for &t in set {
                    means[t] = means[theta0];
                }
            }
            Self::Discrete { table } => {
                let row = table[theta0].clone();
                for &t in set {
                    table[t] = row.clone();
                }
            }
        }
        out
    }
}

/// `sum p ln(p / q)`, `None` when `q` vanishes where `p` does not.
fn discrete_kl(p: &[f64], q: &[f64]) -> Option<f64> {
    let mut kl = 0.0;
    for (&pi, &qi) in p.iter().zip(q) {
        if pi > 0.0 {
            if qi <= 0.0 {
                return None;
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Some(kl.max(0.0))
}

/// Distinguishable and indistinguishable hypotheses of one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSets {
    pub distinguishable: Vec<usize>,
    pub indistinguishable: Vec<usize>,
}

/// `D_k` / `I_k` partition of the false hypotheses for every agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentifiabilityStructure {
    theta0: usize,
    hypotheses: usize,
    agents: Vec<AgentSets>,
}

impl IdentifiabilityStructure {
    /// Builds the structure from explicit indistinguishable sets; `D_k` is
    /// the complement in `0..hypotheses` minus `theta0`.
    pub fn from_indistinguishable(
        hypotheses: usize,
        theta0: usize,
        sets: &[Vec<usize>],
    ) -> Result<Self> {
        if theta0 >= hypotheses {
            return Err(Error::InvalidScenario(format!(
                "theta0 = {theta0} is not one of {hypotheses} hypotheses"
            )));
        }
        let mut agents = Vec::with_capacity(sets.len());
        for (k, set) in sets.iter().enumerate() {
            let mut member = vec![false; hypotheses];
            for &t in set {
                if t >= hypotheses || t == theta0 || member[t] {
                    return Err(Error::InvalidScenario(format!(
                        "agent {k}: invalid indistinguishable hypothesis {t}"
                    )));
                }
                member[t] = true;
            }
            let (indist, dist): (Vec<usize>, Vec<usize>) = (0..hypotheses)
                .filter(|&t| t != theta0)
                .partition(|&t| member[t]);
            agents.push(AgentSets {
                distinguishable: dist,
                indistinguishable: indist,
            });
        }
        Ok(Self {
            theta0,
            hypotheses,
            agents,
        })
    }

    pub fn theta0(&self) -> usize {
        self.theta0
    }

    pub fn num_hypotheses(&self) -> usize {
        self.hypotheses
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn agent(&self, k: usize) -> &AgentSets {
        &self.agents[k]
    }

    pub fn distinguishable(&self, k: usize) -> &[usize] {
        &self.agents[k].distinguishable
    }

    pub fn indistinguishable(&self, k: usize) -> &[usize] {
        &self.agents[k].indistinguishable
    }

    /// `J_k = |I_k|`.
    pub fn cardinality(&self, k: usize) -> usize {
        self.agents[k].indistinguishable.len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        (0..self.agents.len())
            .map(|k| self.cardinality(k))
            .collect()
    }

    /// A hypothesis indistinguishable at every agent, if any. `None` means
    /// the problem is globally identifiable.
    pub fn shared_indistinguishable(&self) -> Option<usize> {
        let first = self.agents.first()?;
        first
            .indistinguishable
            .iter()
            .copied()
            .find(|t| self.agents.iter().all(|a| a.indistinguishable.contains(t)))
    }

    pub fn is_globally_identifiable(&self) -> bool {
        self.shared_indistinguishable().is_none()
    }
}

/// Classifies every false hypothesis at every agent by whether its KL
/// divergence from the true model vanishes.
pub fn derive_identifiability(
    models: &[LikelihoodFamily],
    theta0: usize,
) -> Result<IdentifiabilityStructure> {
    let hypotheses = models
        .first()
        .map(LikelihoodFamily::num_hypotheses)
        .ok_or_else(|| Error::InvalidScenario("no agents".into()))?;
    let mut sets = Vec::with_capacity(models.len());
    for (k, fam) in models.iter().enumerate() {
        if fam.num_hypotheses() != hypotheses {
            return Err(Error::InvalidScenario(format!(
                "agent {k} has {} hypotheses, expected {hypotheses}",
                fam.num_hypotheses()
            )));
        }
        if theta0 >= hypotheses {
            return Err(Error::InvalidScenario(format!(
                "theta0 = {theta0} out of range"
            )));
        }
        let set = (0..hypotheses)
            .filter(|&t| t != theta0)
            .filter(|&t| match fam.kl_divergence(theta0, t) {
                Ok(kl) => kl <= KL_ZERO_TOL,
                // An infinite divergence is as distinguishable as it gets.
                Err(_) => false,
            })
            .collect();
        sets.push(set);
    }
    IdentifiabilityStructure::from_indistinguishable(hypotheses, theta0, &sets)
}

/// Outcome of the convex-combination check on one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum ConvexCheck {
    /// No convex combination of the distinguishable likelihoods equals the
    /// true one.
    Satisfied,
    /// These weights (over the distinguishable set, in order) reproduce it.
    Violated { weights: Vec<f64> },
    /// Continuous family: declared satisfied by construction.
    NotApplicable,
}

impl ConvexCheck {
    pub fn is_violated(&self) -> bool {
        matches!(self, Self::Violated { .. })
    }
}

/// Decides whether `L_theta0` is a convex combination of `{L_t : t in set}`.
///
/// The minimum of `||sum a_t L_t - L_theta0||^2` over the simplex lies in the
/// relative interior of some face; every face with an affinely independent
/// support is solved exactly as an equality-constrained least-squares
/// problem and the best nonnegative solution is kept.
pub fn check_convex_combination(
    fam: &LikelihoodFamily,
    theta0: usize,
    set: &[usize],
) -> Result<ConvexCheck> {
    let LikelihoodFamily::Discrete { table } = fam else {
        return Ok(ConvexCheck::NotApplicable);
    };
    if set.is_empty() {
        return Ok(ConvexCheck::Satisfied);
    }
    if set.len() > CONVEX_MAX_SET {
        return Err(Error::InvalidModel(format!(
            "convex-combination check supports at most {CONVEX_MAX_SET} hypotheses, got {}",
            set.len()
        )));
    }
    let target = &table[theta0];
    let mut best: Option<(f64, Vec<f64>)> = None;
    for mask in 1u32..(1u32 << set.len()) {
        let support: Vec<usize> = (0..set.len()).filter(|i| mask & (1 << i) != 0).collect();
        let rows: Vec<&[f64]> = support.iter().map(|&i| table[set[i]].as_slice()).collect();
        let Some(alpha) = face_least_squares(&rows, target) else {
            continue;
        };
        if alpha.iter().any(|&a| a < -1e-12) {
            continue;
        }
        let residual = (0..target.len())
            .map(|s| {
                let mix: f64 = rows.iter().zip(&alpha).map(|(r, a)| a * r[s]).sum();
                (mix - target[s]).abs()
            })
            .fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            let mut weights = vec![0.0; set.len()];
            for (&i, &a) in support.iter().zip(&alpha) {
                weights[i] = a.max(0.0);
            }
            best = Some((residual, weights));
        }
    }
    Ok(match best {
        Some((residual, weights)) if residual <= CONVEX_RESIDUAL_TOL => {
            ConvexCheck::Violated { weights }
        }
        _ => ConvexCheck::Satisfied,
    })
}

/// Minimises `||sum a_i rows_i - target||^2` subject to `sum a_i = 1` through
/// its KKT system. `None` if the system is singular.
fn face_least_squares(rows: &[&[f64]], target: &[f64]) -> Option<Vec<f64>> {
    let n = rows.len();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // [G 1; 1^T 0] [a; lambda] = [R^T t; 1]
    let dim = n + 1;
    let mut m = vec![vec![0.0; dim + 1]; dim];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = dot(rows[i], rows[j]);
        }
        m[i][n] = 1.0;
        m[i][dim] = dot(rows[i], target);
        m[n][i] = 1.0;
    }
    m[n][dim] = 1.0;
    let x = solve_dense(m)?;
    Some(x[..n].to_vec())
}

/// Gaussian elimination with partial pivoting on an augmented matrix.
fn solve_dense(mut m: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = m.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for c in col..=n {
                    m[row][c] -= f * m[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = ((row + 1)..n).map(|c| m[row][c] * x[c]).sum();
        x[row] = (m[row][n] - tail) / m[row][row];
    }
    Some(x)
}

/// Draws random indistinguishable sets with the given cardinalities whose
/// common intersection is empty. Rejection sampling, deterministic in `seed`.
pub fn draw_indistinguishable_sets(
    hypotheses: usize,
    theta0: usize,
    cardinalities: &[usize],
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    if theta0 >= hypotheses {
        return Err(Error::InvalidScenario(format!(
            "theta0 = {theta0} out of range"
        )));
    }
    if let Some(&c) = cardinalities.iter().find(|&&c| c >= hypotheses) {
        return Err(Error::InvalidScenario(format!(
            "cardinality {c} exceeds the {} false hypotheses",
            hypotheses - 1
        )));
    }
    let candidates: Vec<usize> = (0..hypotheses).filter(|&t| t != theta0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..SET_DRAW_MAX_ATTEMPTS {
        let sets: Vec<Vec<usize>> = cardinalities
            .iter()
            .map(|&c| {
                let mut s: Vec<usize> = index::sample(&mut rng, candidates.len(), c)
                    .into_iter()
                    .map(|i| candidates[i])
                    .collect();
                s.sort_unstable();
                s
            })
            .collect();
        let shared = sets
            .first()
            .and_then(|first| first.iter().find(|t| sets.iter().all(|s| s.contains(t))));
        if shared.is_none() {
            return Ok(sets);
        }
    }
    Err(Error::IdentifiabilityRetriesExhausted(
        SET_DRAW_MAX_ATTEMPTS,
    ))
}

/// Expands a block pattern such as `[(10, 4), (5, 8), (5, 2)]` into one
/// cardinality per agent.
pub fn expand_cardinality_pattern(pattern: &[(usize, usize)]) -> Vec<usize> {
    pattern
        .iter()
        .flat_map(|&(count, size)| std::iter::repeat_n(size, count))
        .collect()
}
