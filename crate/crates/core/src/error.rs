use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("assignment has length {got}, model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },

    #[error("{n} variables exceed the enumeration cap of {cap}")]
    TooManyVariables { n: usize, cap: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("variable count mismatch: {left} vs {right}")]
    VariableCountMismatch { left: usize, right: usize },

    #[error("unknown reference instance `{0}`")]
    UnknownInstance(String),

    #[error("coupling J[{i}][{j}] = {value} is negative and cannot be realized by a van der Waals interaction")]
    NotEncodable { i: usize, j: usize, value: f64 },

    #[error("hardware limits cannot be met jointly: {0}")]
    LimitsUnsatisfiable(String),

    #[error("coincident atoms {0} and {1}")]
    CoincidentAtoms(usize, usize),

    #[error("time {t} lies outside the protocol window [0, {duration}]")]
    TimeOutOfRange { t: f64, duration: f64 },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("initial Hamiltonian has a degenerate ground state ({count} basis states); choose a different initial global detuning")]
    DegenerateInitialState { count: usize },

    #[error("Hilbert space of {n} atoms exceeds the simulation cap of {cap} atoms")]
    DimensionTooLarge { n: usize, cap: usize },

    #[error("propagation did not converge after {doublings} step doublings (last change {last_change:e})")]
    NotConverged { doublings: usize, last_change: f64 },

    #[error("state norm deviates from one by {0:e}")]
    NormViolation(f64),

    #[error("objective is not finite at the probe point")]
    NonFiniteObjective,

    #[error("spectral gap is zero")]
    ZeroGap,

    #[error("invalid optimization plan: {0}")]
    InvalidPlan(String),
}

pub type Result<T> = std::result::Result<T, Error>;
