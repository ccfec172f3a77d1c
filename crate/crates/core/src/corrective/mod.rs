//! Totally-corrective boosting by column generation.

pub mod boost;
pub mod hinge;
pub mod lp;
pub mod margin;
pub mod master;

pub use margin::{hinge_column, mismatch_column, output_code_column, MarginMatrix, Variant};
pub use master::{
    dual_objective, evaluate_master, kkt_weights, solve_master_exp, solve_master_exp_warm, MasterMethod,
    MasterOptions, MasterSolution,
};
pub use hinge::{hinge_dual_objective, solve_master_hinge, HingeSolution};
pub use boost::{cg_oracle, multiboost, Candidate, CodeSource, CorrectiveConfig, CorrectiveRun, StopReason};
