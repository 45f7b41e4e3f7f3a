use thiserror::Error;

use crate::csp::VariableId;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CspError {
    #[error("unknown variable {0}")]
    UnknownVariable(VariableId),
    #[error("value kind does not match the constraint relation")]
    KindMismatch,
    #[error("value for {0} is not in its domain")]
    ValueNotInDomain(VariableId),
    #[error("assignment is missing variable {0}")]
    PartialAssignment(VariableId),
    #[error("domain product {product} exceeds the brute-force cap {cap}")]
    CapExceeded { product: u128, cap: u128 },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("n = {n} is not divisible by k = {k}")]
    UnevenPartition { n: usize, k: u32 },
    #[error("requested {requested} edges but only {available} distinct pairs exist")]
    InfeasibleEdgeCount { requested: usize, available: usize },
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("target {target} sees no sensor after {attempts} placements")]
    EmptyVisibility { target: usize, attempts: u32 },
    #[error(transparent)]
    Csp(#[from] CspError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("protocol {protocol} cannot run {kind} instances")]
    ProtocolMismatch {
        protocol: &'static str,
        kind: &'static str,
    },
    #[error("initial value for {0} is missing or outside its domain")]
    BadInitialValue(VariableId),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error(transparent)]
    Csp(#[from] CspError),
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config field `{path}`: {msg}")]
    Config { path: String, msg: String },
    #[error("manifest line {line}: {msg}")]
    Manifest { line: usize, msg: String },
    #[error("no trial {index} for cell `{cell}`")]
    UnknownTrial { cell: String, index: usize },
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error(transparent)]
    Gen(#[from] GenError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two paired observations, got {0}")]
    TooFewSamples(usize),
    #[error("empty batch")]
    EmptyBatch,
}
