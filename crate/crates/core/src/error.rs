use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("adjacency matrix is not symmetric at ({0}, {1})")]
    AsymmetricAdjacency(usize, usize),

    #[error("no strongly connected Erdos-Renyi draw (K={agents}, p={p}) in {attempts} attempts")]
    ConnectivityRetriesExhausted {
        agents: usize,
        p: f64,
        attempts: usize,
    },

    #[error(
        "power iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    PerronNotConverged { iterations: usize, residual: f64 },

    #[error("invalid likelihood model: {0}")]
    InvalidModel(String),

    #[error("symbol {symbol} is outside the alphabet of size {alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("observation kind does not match the likelihood family")]
    ObservationKindMismatch,

    #[error("KL divergence D(L_{p} || L_{q}) is infinite (assumption 2 violated)")]
    InfiniteDivergence { p: usize, q: usize },

    #[error("observation has zero likelihood under every hypothesis (agent {agent}, iteration {iteration})")]
    ZeroLikelihood { agent: usize, iteration: usize },

    #[error("transmitted belief {0} is outside (0, 1)")]
    TransmittedOutOfRange(f64),

    #[error("own belief on the transmitted hypothesis is 1; residual split is undefined")]
    DegenerateOwnBelief,

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("assumption {number} violated: {detail}")]
    AssumptionViolated { number: u8, detail: String },

    #[error("Monte Carlo estimate needs at least {min} samples, got {got}")]
    TooFewSamples { got: usize, min: usize },

    #[error("could not draw indistinguishable sets with empty intersection in {0} attempts")]
    IdentifiabilityRetriesExhausted(usize),

    #[error("agent {agent}, iteration {iteration}: {source}")]
    Simulation {
        agent: usize,
        iteration: usize,
        source: Box<Error>,
    },

    #[error("non-finite belief at agent {agent}, iteration {iteration}")]
    NonFiniteBelief { agent: usize, iteration: usize },

    #[error("parse error: {0}")]
    Parse(String),
}
