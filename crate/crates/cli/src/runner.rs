//! One booster on one train/test pair.

use multiboost::coding::{CodingMatrix, ColumnStream};
use multiboost::corrective::{multiboost, CodeSource, CorrectiveConfig, MasterMethod, MasterOptions, StopReason, Variant};
use multiboost::data::Dataset;
use multiboost::ensemble::Ensemble;
use multiboost::evaluate::correlation_trace;
use multiboost::stagewise::{adaboost_ecc, adaboost_mo, StagewiseConfig};
use multiboost::trace::{BoostTrace, DualTrace};
use multiboost::weak::Learner;
use multiboost::{Error, Result};

use crate::config::Booster;

#[derive(Debug, Clone)]
pub struct RunOptions<'a> {
    pub learner: Learner,
    pub rounds: usize,
    /// Required by the totally-corrective boosters.
    pub theta: Option<f64>,
    pub epsilon: f64,
    pub force_rounds: bool,
    pub master: MasterMethod,
    /// Output code of the MO family.
    pub code: &'a CodingMatrix,
    /// Seed of the ECC column stream.
    pub stream_seed: u64,
    /// Record the correlation of every dual weight vector with every column.
    pub correlations: bool,
}

/// Everything kept from one run.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub booster: Booster,
    pub theta: Option<f64>,
    pub ensemble: Ensemble,
    pub trace: BoostTrace,
    pub min_margins: Vec<f64>,
    /// Master-problem trace of totally-corrective runs.
    pub duals: Option<DualTrace>,
    /// Row `t` holds `u^(t) . rho_j` for `j <= t`.
    pub correlations: Option<Vec<Vec<f64>>>,
    pub stop: Option<StopReason>,
}

impl RunRecord {
    pub fn rounds(&self) -> usize {
        self.trace.len()
    }

    /// Training error, test error and minimum margin after `t` rounds, or after
    /// the last round when the run stopped earlier.
    pub fn checkpoint(&self, t: usize) -> Option<(f64, Option<f64>, f64)> {
        let k = t.min(self.trace.len()).checked_sub(1)?;
        let row = self.trace.rows[k];
        Some((row.train_err, row.test_err, self.min_margins[k]))
    }
}

pub fn run_booster(train: &Dataset, test: Option<&Dataset>, booster: Booster, opts: &RunOptions<'_>) -> Result<RunRecord> {
    if booster.is_stagewise() {
        let cfg = StagewiseConfig {
            learner: opts.learner,
            rounds: opts.rounds,
            test,
            record_weights: opts.correlations,
        };
        let run = match booster {
            Booster::AbMo => adaboost_mo(train, opts.code, &cfg)?,
            _ => adaboost_ecc(train, &mut ColumnStream::new(train.num_classes(), opts.stream_seed), &cfg)?,
        };
        let correlations = opts.correlations.then(|| correlation_trace(&run.weights, &run.margins));
        return Ok(RunRecord {
            booster,
            theta: None,
            ensemble: run.ensemble,
            trace: run.trace,
            min_margins: run.min_margins,
            duals: None,
            correlations,
            stop: None,
        });
    }

    let theta = opts
        .theta
        .ok_or_else(|| Error::InvalidArgument(format!("{booster} needs a theta")))?;
    let cfg = CorrectiveConfig {
        learner: opts.learner,
        theta,
        epsilon: opts.epsilon,
        rounds: opts.rounds,
        force_rounds: opts.force_rounds,
        test,
        master: MasterOptions {
            method: opts.master,
            ..MasterOptions::default()
        },
        record_duals: opts.correlations,
    };
    let mut stream;
    let (variant, source) = match booster {
        Booster::TcMo => (Variant::Mo, CodeSource::Fixed(opts.code)),
        Booster::TcHinge => (Variant::Hinge, CodeSource::Fixed(opts.code)),
        _ => {
            stream = ColumnStream::new(train.num_classes(), opts.stream_seed);
            (Variant::Ecc, CodeSource::Stream(&mut stream))
        }
    };
    let run = multiboost(train, variant, source, &cfg)?;
    let correlations = opts.correlations.then(|| correlation_trace(&run.dual_weights, &run.margins));
    Ok(RunRecord {
        booster,
        theta: Some(theta),
        ensemble: run.ensemble,
        trace: run.trace,
        min_margins: run.min_margins,
        duals: Some(run.duals),
        correlations,
        stop: Some(run.stop),
    })
}
