//! Workbench for level-based runtime analysis of non-elitist genetic
//! algorithms.
//!
//! The crate runs a generational, non-elitist GA on bitstring problems,
//! measures first hitting times of a target level, and evaluates the
//! analytic conditions, thresholds and runtime bounds of the fitness-level
//! method by exact enumeration or Monte Carlo estimation.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod domain;
pub mod engine;
pub mod error;
pub mod harness;
pub mod levels;
pub mod operators;
pub mod problems;
pub mod stats;
pub mod theory;

pub use domain::{
    fitness, gamma_rank, sort_population, BitString, FitnessValue, Individual, Population, Problem,
    RandomStream,
};
pub use engine::{init_population, run_ga, run_ga_prime, Evolution, GaConfig, RunResult};
pub use error::{Error, Result};
pub use levels::{LevelPartition, NeighborhoodSpec, PartitionKind};
pub use operators::{CrossoverOp, MutationOp, PairCrossover, SelectionOp};
