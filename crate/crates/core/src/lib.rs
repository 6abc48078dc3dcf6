//! Fictitious play in potential games under noisy action observations,
//! plus a lookahead variant for stochastic games with signal-based state
//! tracking, and a batch experiment harness around both.

pub mod channel;
pub mod envs;
pub mod error;
pub mod game;
pub mod harness;
pub mod learn;
pub mod lffp;
pub mod posg;
pub mod rng;

pub use channel::{likelihood, ObservationChannel};
pub use error::{Error, Result};
pub use game::{
    gwfp_noise_threshold, BeliefProfile, MixedStrategy, NormalFormGame, PDominanceReport,
    PotentialFunction, PotentialWitness, PureEquilibrium,
};
pub use harness::{
    aggregate_matrix, aggregate_posg, emit_outputs, sweep_matrix, sweep_posg, AggregateRow,
    MatrixAlgo, MatrixSweepParams, PosgAlgo, PosgSweepParams, ResultRow, SweepTables,
};
pub use learn::{
    detect_convergence, precision_estimate, run_fp, ConvergenceVerdict, FilterSpec, FpConfig,
    LearnerState, RunTrace, StepSchedule,
};
pub use lffp::{run_lffp, select_action, v_opt, v_star, xi_schedule, LffpConfig, LffpTrace, StateMode};
pub use posg::{per_state_belief_update, state_belief_update, PerStateBeliefs, Posg, StateBelief};
