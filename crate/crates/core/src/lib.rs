//! Tabular constrained MDPs.
//!
//! - [`mdp`]: the CMDP data model and exact policy evaluation.
//! - [`sampling`]: generative-model sampling, empirical kernels, reward
//!   perturbation and concentration bounds.
//! - [`solver`]: value iteration and the action-gap diagnostic.
//! - [`primal_dual`]: the primal-dual loop with net-rounded multipliers and
//!   its parameter instantiations.
//! - [`lp_oracle`] / [`simplex`]: exact ground truth via the occupancy LP.

pub mod error;
pub mod generate;
pub mod linalg;
pub mod lp_oracle;
pub mod mdp;
pub mod primal_dual;
pub mod sampling;
pub mod simplex;
pub mod solver;

pub use error::{CmdpError, Result};
pub use lp_oracle::{brute_force_small, slater_constant, solve_cmdp_lp, CmdpOptimum, OccupancyMeasure, OracleResult};
pub use mdp::{
    combined_objective, evaluate_mixture, policy_evaluation, validate_spec, CmdpSpec, Kernel, MixturePolicy,
    Objective, TabularPolicy, Table, ValueReport,
};
pub use primal_dual::{
    dual_update, instantiate_relaxed, instantiate_strict, instantiate_theorem1, primal_update, round_to_net,
    run_primal_dual, DualState, PdConfig, PdTrace, Setting, TraceLevel,
};
pub use sampling::{compute_bounds, estimate_kernel, perturb_rewards, BoundInputs, ConcentrationBound, EmpiricalModel, GenerativeModel};
pub use solver::{iota_gap, value_iteration, GapReport, SolveResult};
