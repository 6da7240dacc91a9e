//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("parametrization is degenerate: min |z'| = {min_speed:.3e}")]
    Degenerate { min_speed: f64 },
    #[error("curve self-intersects: nodes {i} and {j} at distance {distance:.3e} (limit {limit:.3e})")]
    SelfIntersection {
        i: usize,
        j: usize,
        distance: f64,
        limit: f64,
    },
    #[error("domain is not star-shaped about the chosen center (margin {margin:.3e})")]
    NotStarShaped { margin: f64 },
    #[error("node count {n} is invalid: {reason}")]
    BadNodeCount { n: usize, reason: &'static str },
    #[error("curve file is malformed: {0}")]
    BadFormat(String),
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("field is not mean-zero: defect {defect:.3e} exceeds {limit:.3e}")]
    NotMeanZero { defect: f64, limit: f64 },
    #[error("{what}: no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        what: String,
        iterations: usize,
        residual: f64,
    },
    #[error("{what}: linear system is singular or ill-conditioned")]
    Singular { what: String },
    #[error("source decays too slowly for the exterior grid: rate {rate:.2} < required {required:.2}")]
    DecayTooSlow { rate: f64, required: f64 },
    #[error("evaluation point ({x:.3e}, {y:.3e}) is too close to the interface (distance {distance:.3e})")]
    TooCloseToBoundary { x: f64, y: f64, distance: f64 },
    #[error("evaluation point ({x:.3e}, {y:.3e}) lies on the wrong side of the interface")]
    WrongSide { x: f64, y: f64 },
    #[error("normal traces do not match across the interface: defect {defect:.3e} exceeds {limit:.3e}")]
    TraceMismatch { defect: f64, limit: f64 },
    #[error("field length {got} does not match curve node count {want}")]
    ShapeMismatch { got: usize, want: usize },
    #[error("operator input must be {expected} but was {got}")]
    WrongFieldKind {
        expected: &'static str,
        got: &'static str,
    },
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("time step {dt:.3e} violates the capillary CFL bound; use dt <= {max_dt:.3e}")]
    CflViolation { dt: f64, max_dt: f64 },
    #[error("interface self-approach at t = {time:.6}: distance {distance:.3e} below {limit:.3e}")]
    SelfApproach {
        time: f64,
        distance: f64,
        limit: f64,
    },
    #[error("energy bound exceeded at t = {time:.6}: E = {energy:.6e} > allowed {bound:.6e}")]
    EnergyGrowth { time: f64, energy: f64, bound: f64 },
    #[error("sheet strength recovery stalled (Atwood iteration residual {residual:.3e})")]
    StrengthIteration { residual: f64 },
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("missing required key `{0}`")]
    MissingKey(String),
    #[error("bad value for `{key}`: `{value}` ({reason})")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("line {line}: expected `key = value`")]
    BadLine { line: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Evolve(#[from] EvolveError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
