//! Stage-wise AdaBoost.MO and AdaBoost.ECC.

use crate::coding::{CodingMatrix, ColumnStream};
use crate::corrective::margin::{mismatch_column, output_code_column, MarginMatrix};
use crate::data::Dataset;
use crate::ensemble::{scores_error, Ensemble, VoteCache};
use crate::error::{Error, Result};
use crate::oracle::{code_targets, fit_positions, mismatch_weights, position_weights, predict_positions};
use crate::trace::{BoostTrace, TraceRow};
use crate::weak::{BinaryProblem, Learner};

/// Bounds applied to the weighted error before computing a coefficient.
pub const EPSILON_CLAMP: (f64, f64) = (1e-10, 1.0 - 1e-10);

/// `scale * ln((1 - eps) / eps)` with `eps` clamped.
pub fn round_coefficient(epsilon: f64, scale: f64) -> f64 {
    let e = epsilon.clamp(EPSILON_CLAMP.0, EPSILON_CLAMP.1);
    scale * ((1.0 - e) / e).ln()
}

#[derive(Debug, Clone, Copy)]
pub struct StagewiseConfig<'a> {
    pub learner: Learner,
    pub rounds: usize,
    /// Held-out set for the test-error column of the trace.
    pub test: Option<&'a Dataset>,
    /// Keep a copy of the example weights after every update.
    pub record_weights: bool,
}

impl<'a> StagewiseConfig<'a> {
    pub fn new(learner: Learner, rounds: usize) -> Self {
        StagewiseConfig {
            learner,
            rounds,
            test: None,
            record_weights: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StagewiseRun {
    pub ensemble: Ensemble,
    pub trace: BoostTrace,
    /// Margin column of every round on the training rows.
    pub margins: MarginMatrix,
    /// Exponential loss `sum_k exp(-sum_j omega_j rho_kj)` after each round.
    pub losses: Vec<f64>,
    /// Minimum normalized margin after each round.
    pub min_margins: Vec<f64>,
    /// Unnormalized weights right after each round's update (when recorded).
    pub weights: Vec<Vec<f64>>,
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    for x in v.iter_mut() {
        *x /= s;
    }
}

/// Accumulated row margins, loss and minimum normalized margin.
struct MarginState {
    accumulated: Vec<f64>,
    weight_sum: f64,
}

impl MarginState {
    fn new(rows: usize) -> Self {
        MarginState {
            accumulated: vec![0.0; rows],
            weight_sum: 0.0,
        }
    }

    fn add(&mut self, column: &[f64], w: f64) -> (f64, f64) {
        for (a, &p) in self.accumulated.iter_mut().zip(column) {
            *a += w * p;
        }
        self.weight_sum += w;
        let loss = self.accumulated.iter().map(|m| (-m).exp()).sum();
        let min = self.accumulated.iter().copied().fold(f64::INFINITY, f64::min);
        (loss, min / self.weight_sum)
    }
}

/// Error tracking on the training set and an optional test set.
struct ErrorState<'a> {
    train: &'a Dataset,
    test: Option<&'a Dataset>,
    train_votes: VoteCache,
    test_votes: Option<VoteCache>,
    train_scores: Vec<f64>,
    test_scores: Vec<f64>,
}

impl<'a> ErrorState<'a> {
    fn new(train: &'a Dataset, test: Option<&'a Dataset>) -> Self {
        let c = train.num_classes();
        ErrorState {
            train,
            test,
            train_votes: VoteCache::new(train.len(), c),
            test_votes: test.map(|t| VoteCache::new(t.len(), c)),
            train_scores: vec![0.0; train.len() * c],
            test_scores: vec![0.0; test.map_or(0, Dataset::len) * c],
        }
    }

    fn add_round(&mut self, ensemble: &Ensemble, w: f64) -> (f64, Option<f64>) {
        let j = ensemble.len() - 1;
        let c = self.train.num_classes();
        self.train_votes.push_round(ensemble, j, self.train);
        self.train_votes.accumulate_last(&mut self.train_scores, w);
        let train_err = scores_error(&self.train_scores, c, self.train.labels());
        let test_err = match (self.test, self.test_votes.as_mut()) {
            (Some(t), Some(cache)) => {
                cache.push_round(ensemble, j, t);
                cache.accumulate_last(&mut self.test_scores, w);
                Some(scores_error(&self.test_scores, c, t.labels()))
            }
            _ => None,
        };
        (train_err, test_err)
    }
}

fn check_config(train: &Dataset, cfg: &StagewiseConfig<'_>) -> Result<()> {
    if cfg.rounds == 0 {
        return Err(Error::InvalidArgument("at least one round is required".into()));
    }
    if let Some(t) = cfg.test {
        if t.dim() != train.dim() || t.num_classes() != train.num_classes() {
            return Err(Error::DimensionMismatch(
                "test set shape differs from the training set".into(),
            ));
        }
    }
    Ok(())
}

/// AdaBoost.MO with a fixed coding matrix.
pub fn adaboost_mo(train: &Dataset, coding: &CodingMatrix, cfg: &StagewiseConfig<'_>) -> Result<StagewiseRun> {
    check_config(train, cfg)?;
    if coding.classes() != train.num_classes() {
        return Err(Error::DimensionMismatch(format!(
            "code has {} rows, data has {} classes",
            coding.classes(),
            train.num_classes()
        )));
    }
    let (n, len) = (train.len(), coding.len());
    let labels = train.labels();
    let mut ensemble = Ensemble::new_mo(coding.clone(), train.label_codes().to_vec())?;
    let mut margins = MarginMatrix::new(n * len);
    let mut state = MarginState::new(n * len);
    let mut errors = ErrorState::new(train, cfg.test);
    let mut run_trace = BoostTrace::default();
    let (mut losses, mut min_margins, mut recorded) = (Vec::new(), Vec::new(), Vec::new());

    let mut u = vec![1.0 / (n * len) as f64; n * len];
    for t in 0..cfg.rounds {
        normalize(&mut u);
        let hyps = fit_positions(train, coding, cfg.learner, &position_weights(&u, n, len))
            .map_err(|e| e.at_round(t + 1))?;
        let preds = predict_positions(&hyps, train);

        let mut epsilon = 0.0;
        for (i, &y) in labels.iter().enumerate() {
            for (l, p) in preds.iter().enumerate() {
                if coding.get(y, l) != p[i] {
                    epsilon += u[i * len + l];
                }
            }
        }
        let omega = round_coefficient(epsilon, 0.5);

        let column = output_code_column(coding, labels, &preds)?;
        for (uk, &rho) in u.iter_mut().zip(&column) {
            *uk *= (-omega * rho).exp();
        }
        if cfg.record_weights {
            recorded.push(u.clone());
        }

        ensemble.push_output_round(hyps, omega)?;
        let (loss, min_margin) = state.add(&column, omega);
        margins.push(column)?;
        let (train_err, test_err) = errors.add_round(&ensemble, omega);
        run_trace.rows.push(TraceRow {
            iteration: t + 1,
            train_err,
            test_err,
            epsilon,
            omega,
        });
        losses.push(loss);
        min_margins.push(min_margin);
        log::trace!("mo round {}: eps {epsilon:.6} omega {omega:.6} train {train_err:.4}", t + 1);
    }
    Ok(StagewiseRun {
        ensemble,
        trace: run_trace,
        margins,
        losses,
        min_margins,
        weights: recorded,
    })
}

/// AdaBoost.ECC drawing one code column per round from `stream`.
pub fn adaboost_ecc(train: &Dataset, stream: &mut ColumnStream, cfg: &StagewiseConfig<'_>) -> Result<StagewiseRun> {
    check_config(train, cfg)?;
    let classes = train.num_classes();
    if stream.classes() != classes {
        return Err(Error::DimensionMismatch(format!(
            "column stream has {} classes, data has {classes}",
            stream.classes()
        )));
    }
    let n = train.len();
    let rows = n * (classes - 1);
    let labels = train.labels();
    let mut ensemble = Ensemble::new_ecc(classes, train.label_codes().to_vec())?;
    let mut margins = MarginMatrix::new(rows);
    let mut state = MarginState::new(rows);
    let mut errors = ErrorState::new(train, cfg.test);
    let mut run_trace = BoostTrace::default();
    let (mut losses, mut min_margins, mut recorded) = (Vec::new(), Vec::new(), Vec::new());

    let mut u = vec![1.0 / rows as f64; rows];
    for t in 0..cfg.rounds {
        let code = stream.next_column();
        normalize(&mut u);
        let mut d = mismatch_weights(&u, &code, labels);
        // All surviving mass sits on mislabels this column cannot separate.
        if d.iter().all(|&v| v == 0.0) {
            d = vec![1.0; n];
        }
        normalize(&mut d);
        let targets = code_targets(&code, labels);
        let h = BinaryProblem::new(train.features(), &targets, &d)
            .and_then(|p| cfg.learner.train(&p))
            .map_err(|e| e.at_round(t + 1))?;
        let preds = h.predict_all(train.features());

        let mut epsilon = 0.0;
        for i in 0..n {
            if targets[i] != preds[i] {
                epsilon += d[i];
            }
        }
        let omega = round_coefficient(epsilon, 0.25);

        let column = mismatch_column(&code, labels, &preds)?;
        for (uk, &rho) in u.iter_mut().zip(&column) {
            *uk *= (-omega * rho).exp();
        }
        if cfg.record_weights {
            recorded.push(u.clone());
        }

        ensemble.push_column_round(&code, h, omega)?;
        let (loss, min_margin) = state.add(&column, omega);
        margins.push(column)?;
        let (train_err, test_err) = errors.add_round(&ensemble, omega);
        run_trace.rows.push(TraceRow {
            iteration: t + 1,
            train_err,
            test_err,
            epsilon,
            omega,
        });
        losses.push(loss);
        min_margins.push(min_margin);
        log::trace!("ecc round {}: eps {epsilon:.6} omega {omega:.6} train {train_err:.4}", t + 1);
    }
    Ok(StagewiseRun {
        ensemble,
        trace: run_trace,
        margins,
        losses,
        min_margins,
        weights: recorded,
    })
}
