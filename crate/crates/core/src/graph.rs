//! Network topologies and left-stochastic combination matrices.
//!
//! Entry `(l, k)` of the combination matrix is the weight `a_lk` agent `k`
//! assigns to information coming from neighbour `l`; every column sums to
//! one.

use std::collections::VecDeque;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Column-sum tolerance for a left-stochastic matrix.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Convergence tolerance of the Perron power iteration.
pub const PERRON_TOL: f64 = 1e-12;
/// Acceptance tolerance for `A v = v` on a returned Perron vector.
pub const PERRON_RESIDUAL_TOL: f64 = 1e-10;
pub const PERRON_MAX_ITERATIONS: usize = 1_000_000;
pub const ER_MAX_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    agents: usize,
    /// Row-major, `weights[l * agents + k] = a_lk`.
    weights: Vec<f64>,
    /// Incoming neighbourhoods: `neighbors[k]` lists every `l` with `a_lk > 0`.
    neighbors: Vec<Vec<usize>>,
}

/// Outcome of the strong-connectivity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Connectivity {
    Connected,
    /// No nonzero-weight path leads from `from` to `to`.
    NoPath {
        from: usize,
        to: usize,
    },
    /// Strongly connected, but every self-weight is zero.
    NoSelfLoop,
}

impl Connectivity {
    pub fn is_connected(&self) -> bool {
        matches!(self, Connectivity::Connected)
    }
}

impl Network {
    /// Builds a network from an explicit `K x K` matrix with `matrix[l][k] = a_lk`.
    pub fn from_matrix(matrix: &[Vec<f64>]) -> Result<Self> {
        let agents = matrix.len();
        if agents == 0 {
            return Err(Error::InvalidNetwork(
                "network needs at least one agent".into(),
            ));
        }
        let mut weights = Vec::with_capacity(agents * agents);
        for (l, row) in matrix.iter().enumerate() {
            if row.len() != agents {
                return Err(Error::InvalidNetwork(format!(
                    "row {l} has {} entries, expected {agents}",
                    row.len()
                )));
            }
            weights.extend_from_slice(row);
        }
        Self::from_flat(agents, weights)
    }

    fn from_flat(agents: usize, weights: Vec<f64>) -> Result<Self> {
        for (idx, &w) in weights.iter().enumerate() {
            if !(0.0..=1.0).contains(&w) {
                return Err(Error::InvalidNetwork(format!(
                    "weight a_{}{} = {w} is outside [0, 1]",
                    idx / agents,
                    idx % agents
                )));
            }
        }
        for k in 0..agents {
            let sum: f64 = (0..agents).map(|l| weights[l * agents + k]).sum();
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidNetwork(format!(
                    "column {k} sums to {sum}, not 1"
                )));
            }
        }
        let neighbors = (0..agents)
            .map(|k| {
                (0..agents)
                    .filter(|&l| weights[l * agents + k] > 0.0)
                    .collect()
            })
            .collect();
        Ok(Self {
            agents,
            weights,
            neighbors,
        })
    }

    /// Metropolis weights over a symmetric adjacency matrix. The diagonal of
    /// `adjacency` is ignored: every agent belongs to its own neighbourhood.
    pub fn metropolis(adjacency: &[Vec<bool>]) -> Result<Self> {
        let agents = adjacency.len();
        if agents == 0 {
            return Err(Error::InvalidNetwork(
                "network needs at least one agent".into(),
            ));
        }
        for (i, row) in adjacency.iter().enumerate() {
            if row.len() != agents {
                return Err(Error::InvalidNetwork(format!(
                    "adjacency row {i} has {} entries, expected {agents}",
                    row.len()
                )));
            }
        }
        for i in 0..agents {
            for j in (i + 1)..agents {
                if adjacency[i][j] != adjacency[j][i] {
                    return Err(Error::AsymmetricAdjacency(i, j));
                }
            }
        }
        // |N_k| counts the agent itself.
        let size: Vec<usize> = (0..agents)
            .map(|k| 1 + (0..agents).filter(|&l| l != k && adjacency[l][k]).count())
            .collect();
        let mut weights = vec![0.0; agents * agents];
        for k in 0..agents {
            let mut off_diagonal = 0.0;
            for l in 0..agents {
                if l != k && adjacency[l][k] {
                    let w = 1.0 / size[l].max(size[k]) as f64;
                    weights[l * agents + k] = w;
                    off_diagonal += w;
                }
            }
            weights[k * agents + k] = 1.0 - off_diagonal;
        }
        Self::from_flat(agents, weights)
    }

    /// Undirected Erdos-Renyi draw with Metropolis weights, redrawn until the
    /// result is strongly connected. Deterministic in `seed`.
    pub fn erdos_renyi(agents: usize, p: f64, seed: u64) -> Result<Self> {
        if agents == 0 {
            return Err(Error::InvalidNetwork(
                "network needs at least one agent".into(),
            ));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidNetwork(format!(
                "connection probability {p} is outside (0, 1]"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..ER_MAX_ATTEMPTS {
            let mut adjacency = vec![vec![false; agents]; agents];
            for i in 0..agents {
                for j in (i + 1)..agents {
                    let edge = rng.random_bool(p);
                    adjacency[i][j] = edge;
                    adjacency[j][i] = edge;
                }
            }
            let net = Self::metropolis(&adjacency)?;
            if net.connectivity().is_connected() {
                return Ok(net);
            }
        }
        Err(Error::ConnectivityRetriesExhausted {
            agents,
            p,
            attempts: ER_MAX_ATTEMPTS,
        })
    }

    pub fn num_agents(&self) -> usize {
        self.agents
    }

    /// `a_lk`: the weight agent `k` gives to neighbour `l`.
    pub fn weight(&self, l: usize, k: usize) -> f64 {
        self.weights[l * self.agents + k]
    }

    /// Agents `l` with `a_lk > 0`, in increasing order (includes `k` when its
    /// self-weight is positive).
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    pub fn matrix(&self) -> Vec<Vec<f64>> {
        self.weights
            .chunks(self.agents)
            .map(|r| r.to_vec())
            .collect()
    }

    /// Max absolute deviation of any row sum from one.
    pub fn row_sum_error(&self) -> f64 {
        self.weights
            .chunks(self.agents)
            .map(|r| (r.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        self.row_sum_error() <= STOCHASTIC_TOL
    }

    /// Strong connectivity of the nonzero-weight digraph plus at least one
    /// positive self-weight.
    pub fn connectivity(&self) -> Connectivity {
        let forward = self.reachable(0, false);
        if let Some(to) = forward.iter().position(|r| !r) {
            return Connectivity::NoPath { from: 0, to };
        }
        let backward = self.reachable(0, true);
        if let Some(from) = backward.iter().position(|r| !r) {
            return Connectivity::NoPath { from, to: 0 };
        }
        if (0..self.agents).any(|k| self.weight(k, k) > 0.0) {
            Connectivity::Connected
        } else {
            Connectivity::NoSelfLoop
        }
    }

    /// Breadth-first reachability from `start`; an edge `l -> k` exists when
    /// `a_lk > 0` (information flows from `l` to `k`).
    fn reachable(&self, start: usize, reverse: bool) -> Vec<bool> {
        let mut seen = vec![false; self.agents];
        let mut queue = VecDeque::from([start]);
        seen[start] = true;
        while let Some(u) = queue.pop_front() {
            for w in 0..self.agents {
                let a = if reverse {
                    self.weight(w, u)
                } else {
                    self.weight(u, w)
                };
                if a > 0.0 && !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen
    }

    /// Perron eigenvector by power iteration, renormalised to unit sum at
    /// every step. Requires a primitive matrix.
    pub fn perron_vector(&self) -> Result<PerronVector> {
        let n = self.agents;
        let mut v = vec![1.0 / n as f64; n];
        let mut next = vec![0.0; n];
        let mut residual = f64::INFINITY;
        for _ in 0..PERRON_MAX_ITERATIONS {
            self.apply(&v, &mut next);
            let sum: f64 = next.iter().sum();
            next.iter_mut().for_each(|x| *x /= sum);
            residual = v
                .iter()
                .zip(&next)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            std::mem::swap(&mut v, &mut next);
            if residual <= PERRON_TOL {
                break;
            }
        }
        let check = self.perron_residual(&v);
        if residual > PERRON_TOL || check > PERRON_RESIDUAL_TOL || v.iter().any(|&x| x <= 0.0) {
            return Err(Error::PerronNotConverged {
                iterations: PERRON_MAX_ITERATIONS,
                residual: residual.max(check),
            });
        }
        Ok(PerronVector(v))
    }

    /// `out = A v`.
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (l, o) in out.iter_mut().enumerate() {
            *o = (0..self.agents).map(|k| self.weight(l, k) * v[k]).sum();
        }
    }

    /// `max_l |(A v)_l - v_l|`.
    pub fn perron_residual(&self, v: &[f64]) -> f64 {
        let mut av = vec![0.0; self.agents];
        self.apply(v, &mut av);
        av.iter()
            .zip(v)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Plain-text edge list: a header line with `K`, then one `l k weight`
    /// line per nonzero entry. Weights carry 17 significant digits.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{}\n", self.agents);
        for l in 0..self.agents {
            for k in 0..self.agents {
                let w = self.weight(l, k);
                if w > 0.0 {
                    let _ = writeln!(out, "{l} {k} {w:.16e}");
                }
            }
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge list".into()))?;
        let agents: usize = header
            .parse()
            .map_err(|_| Error::Parse(format!("bad agent count {header:?}")))?;
        if agents == 0 {
            return Err(Error::InvalidNetwork(
                "network needs at least one agent".into(),
            ));
        }
        let mut weights = vec![0.0; agents * agents];
        for line in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [l, k, w] = fields[..] else {
                return Err(Error::Parse(format!("expected `l k weight`, got {line:?}")));
            };
            let parse_idx = |s: &str| -> Result<usize> {
                let i: usize = s
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index {s:?}")))?;
                if i >= agents {
                    return Err(Error::Parse(format!(
                        "index {i} out of range for K={agents}"
                    )));
                }
                Ok(i)
            };
            let (l, k) = (parse_idx(l)?, parse_idx(k)?);
            weights[l * agents + k] = w
                .parse()
                .map_err(|_| Error::Parse(format!("bad weight {w:?}")))?;
        }
        Self::from_flat(agents, weights)
    }
}

/// Positive, unit-sum right eigenvector of the combination matrix at
/// eigenvalue one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerronVector(Vec<f64>);

impl PerronVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn uniform(agents: usize) -> Self {
        Self(vec![1.0 / agents as f64; agents])
    }
}

impl std::ops::Index<usize> for PerronVector {
    type Output = f64;

    fn index(&self, k: usize) -> &f64 {
        &self.0[k]
    }
}
