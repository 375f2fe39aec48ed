//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, LabError>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("capacity {requested} exceeds limit {limit}")]
    Capacity { requested: u32, limit: u32 },

    #[error("field '{0}' has invalid bit indices (must be strictly increasing and within capacity)")]
    FieldIndices(String),

    #[error("field '{0}' declared twice")]
    DuplicateField(String),

    #[error("unknown field '{0}'")]
    UnknownField(String),

    #[error("vacant cell where a state was required")]
    VacantCell,

    #[error("ring must have at least one cell")]
    EmptyRing,

    #[error("undefined transition for triple ({0:#x}, {1:#x}, {2:#x})")]
    UndefinedTransition(u64, u64, u64),

    #[error("transition table only supported up to {limit} triple bits, got {got}")]
    TableTooLarge { got: u32, limit: u32 },

    #[error("transition matrix row for triple ({0:#x}, {1:#x}, {2:#x}) sums to {3}, expected 1")]
    RowNotNormalized(u64, u64, u64, f64),

    #[error("probability {0} outside [0, 1]")]
    BadProbability(f64),

    #[error("pointer window [{lo}, {hi}] outside state capacity {capacity}")]
    WindowOutOfRange { lo: u32, hi: u32, capacity: u32 },

    #[error("{0}")]
    Parse(String),

    #[error("rule runtime error: {0}")]
    RuleRuntime(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("linear system is singular")]
    SingularSystem,

    #[error("polynomial x^{0} modulus is not irreducible")]
    NotIrreducible(u32),

    #[error("hierarchical code property violated at level {level}: {clause}")]
    HierProperty { level: usize, clause: String },

    #[error("colony layout rejected: {0}")]
    ColonyLayout(String),

    #[error("fault schedule invalid: {0}")]
    FaultSchedule(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
