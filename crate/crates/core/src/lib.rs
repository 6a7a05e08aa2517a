//! Energy-aware compression, coding and retransmission for an
//! energy-harvesting sensor.
//!
//! The sensor picks, every slot, how much stored energy to spend. That budget
//! buys a compression level and a coding rate for the pending blocks; the
//! goal is the lowest long-run distortion at the receiver. [`mdp`] solves the
//! problem exactly when the statistics are known, [`rl`] learns it from
//! interaction, and [`sim`] checks both by simulation.

// `!(x > 0.0)` also rejects NaN; index loops are the clearer form for the
// dense linear algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod channel;
pub mod config;
pub mod distortion;
pub mod energy;
pub mod error;
pub mod markov;
pub mod mdp;
pub mod model;
pub mod rl;
pub mod sim;
pub mod tradeoff;

pub use config::{load_config, SystemConfig};
pub use error::{Error, Result};
pub use mdp::{
    evaluate_policy, greedy_policy, rvia_solve, Mdp, Policy, SolveResult, SolverOptions, StateSpace,
    SystemState,
};
pub use model::SystemModel;
pub use sim::{run, SimReport};
