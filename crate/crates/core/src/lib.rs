//! Deterministic simulation of distributed constraint satisfaction protocols.
//!
//! Two protocols run over the same cycle-based message simulator: APO, where
//! agents mediate over growing partial views and solve subproblems centrally,
//! and AWC, which learns nogoods and reorders agents by priority. The
//! [`harness`] module runs batches of trials and writes CSV results, and
//! [`metrics`] turns those into summary statistics.

pub mod apo;
pub mod awc;
pub mod csp;
pub mod error;
pub mod generators;
pub mod harness;
pub mod metrics;
pub mod sim;
pub mod solvers;

pub use csp::{Assignment, CspInstance, Kind, Value, VariableId, Verdict};
pub use error::{CspError, GenError, HarnessError, SimError, StatsError};
pub use sim::{run_trial, Protocol, SimOptions, SolverChoice, TrialResult, TrialVerdict};
