#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Experiment runner for the multiclass boosters: repeated stratified
//! resplits, theta selection and paired stage-wise / totally-corrective runs.

pub mod config;
pub mod experiment;
pub mod runner;
pub mod theta;

pub use config::{Booster, CodeChoice, DataSpec, ExperimentConfig, Family, ThetaPolicy};
pub use experiment::{run_experiment, run_experiment_on, ExperimentReport, Source, Summary, TrialReport};
pub use runner::{run_booster, RunOptions, RunRecord};
pub use theta::{select_theta_cv, select_theta_sum};
