//! The column-generation loop shared by the three corrective boosters.

use crate::coding::{CodingMatrix, ColumnStream};
use crate::data::Dataset;
use crate::ensemble::{Ensemble, VoteCache};
use crate::error::{Error, Result};
use crate::oracle::{
    code_targets, fit_positions, hinge_position_weights, mismatch_weights, position_weights, predict_positions,
};
use crate::trace::{BoostTrace, DualRow, DualTrace, TraceRow};
use crate::weak::{BinaryProblem, Hypothesis, Learner};

use super::hinge::solve_master_hinge;
use super::margin::{hinge_column, mismatch_column, output_code_column, MarginMatrix, Variant};
use super::master::{dual_objective, solve_master_exp_warm, MasterOptions};

/// Where round code columns come from.
#[derive(Debug)]
pub enum CodeSource<'s> {
    Fixed(&'s CodingMatrix),
    Stream(&'s mut ColumnStream),
}

/// Best round found by the oracle under the current duals.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// One hypothesis per code position, or a single one for a drawn column.
    pub hypotheses: Vec<Hypothesis>,
    /// The drawn code column (stream sources only).
    pub code: Option<Vec<i8>>,
    /// Margin column on the training rows.
    pub column: Vec<f64>,
    /// `u . column`.
    pub score: f64,
    /// Weighted error of the hypotheses on the subproblem weights.
    pub epsilon: f64,
}

/// Rescales to a maximum of 1 so that tiny duals stay usable as example weights.
/// All-zero duals (a separated hinge problem) are returned unchanged.
fn rescaled(u: &[f64]) -> Result<Vec<f64>> {
    if u.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument("dual weights must be finite and nonnegative".into()));
    }
    let top = u.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return Ok(u.to_vec());
    }
    Ok(u.iter().map(|v| v / top).collect())
}

fn pooled_error(weights: &[Vec<f64>], targets: &[Vec<i8>], preds: &[Vec<i8>]) -> f64 {
    let mut wrong = 0.0;
    let mut total = 0.0;
    for ((w, t), p) in weights.iter().zip(targets).zip(preds) {
        for i in 0..w.len() {
            total += w[i];
            if t[i] != p[i] {
                wrong += w[i];
            }
        }
    }
    if total > 0.0 {
        wrong / total
    } else {
        0.0
    }
}

/// The round that most violates the dual constraints `u . rho <= r`.
pub fn cg_oracle(
    variant: Variant,
    u: &[f64],
    source: &mut CodeSource<'_>,
    learner: Learner,
    train: &Dataset,
) -> Result<Candidate> {
    let labels = train.labels();
    let n = train.len();
    let weights = rescaled(u)?;
    match (variant, source) {
        (Variant::Mo, CodeSource::Fixed(coding)) => {
            let per_position = position_weights(&weights, n, coding.len());
            let hypotheses = fit_positions(train, coding, learner, &per_position)?;
            let preds = predict_positions(&hypotheses, train);
            let targets: Vec<Vec<i8>> = (0..coding.len())
                .map(|l| code_targets(&coding.column(l), labels))
                .collect();
            let column = output_code_column(coding, labels, &preds)?;
            Ok(Candidate {
                epsilon: pooled_error(&per_position, &targets, &preds),
                score: super::margin::dot(u, &column),
                hypotheses,
                code: None,
                column,
            })
        }
        (Variant::Hinge, CodeSource::Fixed(coding)) => {
            let per_position = hinge_position_weights(&weights, coding, labels);
            let hypotheses = fit_positions(train, coding, learner, &per_position)?;
            let preds = predict_positions(&hypotheses, train);
            let targets: Vec<Vec<i8>> = (0..coding.len())
                .map(|l| code_targets(&coding.column(l), labels))
                .collect();
            let column = hinge_column(coding, labels, &preds)?;
            Ok(Candidate {
                epsilon: pooled_error(&per_position, &targets, &preds),
                score: super::margin::dot(u, &column),
                hypotheses,
                code: None,
                column,
            })
        }
        (Variant::Ecc, CodeSource::Stream(stream)) => {
            let code = stream.next_column();
            let mut d = mismatch_weights(&weights, &code, labels);
            if d.iter().all(|&v| v == 0.0) {
                d = vec![1.0; n];
            }
            let targets = code_targets(&code, labels);
            let h = learner.train(&BinaryProblem::new(train.features(), &targets, &d)?)?;
            let preds = h.predict_all(train.features());
            let column = mismatch_column(&code, labels, &preds)?;
            Ok(Candidate {
                epsilon: pooled_error(&[d], &[targets], &[preds]),
                score: super::margin::dot(u, &column),
                hypotheses: vec![h],
                code: Some(code),
                column,
            })
        }
        (v, _) => Err(Error::InvalidArgument(format!(
            "{v:?} boosting needs a {} code",
            if v == Variant::Ecc { "streamed" } else { "fixed" }
        ))),
    }
}

#[derive(Debug, Clone, Copy)]
pub struct CorrectiveConfig<'a> {
    pub learner: Learner,
    /// l1 budget on the coefficients.
    pub theta: f64,
    /// Stop once no column beats the current dual bound by this much.
    pub epsilon: f64,
    pub rounds: usize,
    /// Keep adding columns up to `rounds` even when the dual bound holds.
    pub force_rounds: bool,
    pub test: Option<&'a Dataset>,
    pub master: MasterOptions,
    /// Keep the dual weights after every master solve.
    pub record_duals: bool,
}

impl<'a> CorrectiveConfig<'a> {
    pub fn new(learner: Learner, theta: f64, rounds: usize) -> Self {
        CorrectiveConfig {
            learner,
            theta,
            epsilon: 1e-5,
            rounds,
            force_rounds: false,
            test: None,
            master: MasterOptions::default(),
            record_duals: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    RoundLimit,
    /// No column violated the dual bound by more than epsilon.
    DualBounded,
    /// The best column had a non-positive score.
    Degenerate,
}

#[derive(Debug, Clone)]
pub struct CorrectiveRun {
    pub ensemble: Ensemble,
    pub trace: BoostTrace,
    pub duals: DualTrace,
    pub margins: MarginMatrix,
    /// Minimum normalized row margin after each round.
    pub min_margins: Vec<f64>,
    /// Dual weights after each master solve (when recorded), divided by
    /// `exp(log_scale)` of the matching dual-trace row.
    pub dual_weights: Vec<Vec<f64>>,
    pub stop: StopReason,
}

impl CorrectiveRun {
    pub fn r_values(&self) -> Vec<f64> {
        self.duals.rows.iter().map(|r| r.r).collect()
    }
}

/// Totally-corrective boosting: MultiBoost.MO, MultiBoost.ECC or the hinge variant.
pub fn multiboost(
    train: &Dataset,
    variant: Variant,
    mut source: CodeSource<'_>,
    cfg: &CorrectiveConfig<'_>,
) -> Result<CorrectiveRun> {
    if !(cfg.theta > 0.0 && cfg.theta.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {}", cfg.theta)));
    }
    if !(cfg.epsilon > 0.0) {
        return Err(Error::InvalidArgument("epsilon must be positive".into()));
    }
    if cfg.rounds == 0 {
        return Err(Error::InvalidArgument("at least one round is required".into()));
    }
    let classes = train.num_classes();
    if let Some(t) = cfg.test {
        if t.dim() != train.dim() || t.num_classes() != classes {
            return Err(Error::DimensionMismatch("test set shape differs from the training set".into()));
        }
    }
    let n = train.len();
    let (mut ensemble, rows) = match &source {
        CodeSource::Fixed(coding) => {
            if coding.classes() != classes {
                return Err(Error::DimensionMismatch(format!(
                    "code has {} rows, data has {classes} classes",
                    coding.classes()
                )));
            }
            (
                Ensemble::new_mo((*coding).clone(), train.label_codes().to_vec())?,
                variant.row_count(n, classes, coding.len()),
            )
        }
        CodeSource::Stream(stream) => {
            if stream.classes() != classes {
                return Err(Error::DimensionMismatch(format!(
                    "column stream has {} classes, data has {classes}",
                    stream.classes()
                )));
            }
            (
                Ensemble::new_ecc(classes, train.label_codes().to_vec())?,
                variant.row_count(n, classes, 0),
            )
        }
    };

    // Duals are kept divided by exp(log_scale), the same units the master reports.
    let mut u = match variant {
        Variant::Hinge => vec![1.0 / classes as f64; rows],
        _ => vec![1.0 / rows as f64; rows],
    };
    let mut r = 0.0;
    let mut log_scale: f64 = 0.0;
    let mut w: Vec<f64> = Vec::new();
    let mut margins = MarginMatrix::new(rows);
    let mut train_votes = VoteCache::new(n, classes);
    let mut test_votes = cfg.test.map(|t| VoteCache::new(t.len(), classes));
    let mut run_trace = BoostTrace::default();
    let mut duals = DualTrace::default();
    let mut min_margins = Vec::new();
    let mut dual_weights = Vec::new();
    let mut stop = StopReason::RoundLimit;

    for t in 0..cfg.rounds {
        let round = t + 1;
        let cand = cg_oracle(variant, &u, &mut source, cfg.learner, train).map_err(|e| e.at_round(round))?;
        // A streamed column that misses the current duals says nothing about
        // the next one, so forced ECC runs keep it and carry on.
        let streamed = matches!(source, CodeSource::Stream(_));
        if !(cand.score > 0.0) && !(cfg.force_rounds && streamed) {
            log::debug!("round {round}: oracle score {} is not positive, stopping", cand.score);
            stop = StopReason::Degenerate;
            break;
        }
        if !cfg.force_rounds && cand.score < r + cfg.epsilon * (-log_scale).exp() {
            log::debug!("round {round}: score {} within {} of r = {r}, stopping", cand.score, cfg.epsilon);
            stop = StopReason::DualBounded;
            break;
        }

        margins.push(cand.column)?;
        match cand.code {
            Some(code) => {
                let h = cand.hypotheses.into_iter().next().expect("one hypothesis");
                ensemble.push_column_round(&code, h, 0.0)?;
            }
            None => ensemble.push_output_round(cand.hypotheses, 0.0)?,
        }

        let previous_scale = log_scale;
        let (primal, dual, gap);
        match variant {
            Variant::Hinge => {
                let s = solve_master_hinge(&margins, classes, cfg.theta).map_err(|e| e.at_round(round))?;
                w = s.w;
                u = s.u;
                r = s.r;
                (primal, dual, gap) = (s.primal_value, s.dual_value, s.gap);
            }
            _ => {
                let s = solve_master_exp_warm(&margins, cfg.theta, &w, &cfg.master).map_err(|e| e.at_round(round))?;
                let scale = (-s.log_scale).exp();
                primal = s.u_scaled.iter().sum();
                // -r theta - sum u ln u + sum u, divided by exp(log_scale)
                dual = dual_objective(&s.u_scaled, s.r_scaled, cfg.theta) - s.log_scale * primal;
                gap = s.gap * scale;
                w = s.w;
                u = s.u_scaled;
                r = s.r_scaled;
                log_scale = s.log_scale;
            }
        }
        ensemble.set_weights(&w)?;

        let j = ensemble.len() - 1;
        train_votes.push_round(&ensemble, j, train);
        let train_err = train_votes.error(&w, train.labels());
        let test_err = match (cfg.test, test_votes.as_mut()) {
            (Some(td), Some(cache)) => {
                cache.push_round(&ensemble, j, td);
                Some(cache.error(&w, td.labels()))
            }
            _ => None,
        };
        let row_margins = margins.apply(&w);
        let wsum: f64 = w.iter().sum();
        min_margins.push(row_margins.iter().copied().fold(f64::INFINITY, f64::min) / wsum);
        run_trace.rows.push(TraceRow {
            iteration: round,
            train_err,
            test_err,
            epsilon: cand.epsilon,
            omega: w[j],
        });
        duals.rows.push(DualRow {
            round,
            score: cand.score * (previous_scale - log_scale).exp(),
            r,
            primal,
            dual,
            gap,
            log_scale,
        });
        if cfg.record_duals {
            dual_weights.push(u.clone());
        }
        log::trace!("{variant:?} round {round}: score {:.6e} r {r:.6e} primal {primal:.6e} train {train_err:.4}", cand.score);
    }

    Ok(CorrectiveRun {
        ensemble,
        trace: run_trace,
        duals,
        margins,
        min_margins,
        dual_weights,
        stop,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coding::{exhaustive_ecoc, one_vs_all};
    use crate::data::Features;
    use crate::stagewise::{adaboost_mo, StagewiseConfig};

    fn toy3() -> Dataset {
        let rows = vec![
            vec![0.0, 0.1],
            vec![0.2, 0.0],
            vec![0.1, 0.3],
            vec![2.0, 2.1],
            vec![2.2, 1.9],
            vec![1.0, 0.2],
            vec![4.1, -0.1],
            vec![3.9, 0.0],
            vec![0.3, 2.0],
        ];
        Dataset::new(Features::from_rows(&rows).unwrap(), vec![0, 0, 0, 1, 1, 2, 2, 2, 1], 3).unwrap()
    }

    #[test]
    fn uniform_duals_reproduce_first_stagewise_round() {
        let d = toy3();
        let code = one_vs_all(3).unwrap();
        let rows = d.len() * 3;
        let u = vec![1.0 / rows as f64; rows];
        let cand = cg_oracle(Variant::Mo, &u, &mut CodeSource::Fixed(&code), Learner::Stump, &d).unwrap();
        let ab = adaboost_mo(&d, &code, &StagewiseConfig::new(Learner::Stump, 1)).unwrap();
        assert_eq!(cand.hypotheses, ab.ensemble.rounds()[0]);
        assert!((cand.epsilon - ab.trace.rows[0].epsilon).abs() < 1e-15);
    }

    #[test]
    fn separable_instance_stops_after_one_round() {
        // x > 0 separates the two classes exactly, so round 1 has all margins +1.
        let rows = vec![vec![-2.0], vec![-1.0], vec![1.0], vec![3.0]];
        let d = Dataset::new(Features::from_rows(&rows).unwrap(), vec![0, 0, 1, 1], 2).unwrap();
        let code = one_vs_all(2).unwrap();
        let run = multiboost(&d, Variant::Mo, CodeSource::Fixed(&code), &CorrectiveConfig::new(Learner::Stump, 1.5, 10))
            .unwrap();
        assert_eq!(run.stop, StopReason::DualBounded);
        assert_eq!(run.ensemble.len(), 1);
        assert_eq!(run.ensemble.weights(), &[1.5]);
        assert!(run.margins.column(0).iter().all(|&p| p == 1.0));
    }

    #[test]
    fn forced_runs_reach_the_round_limit_with_monotone_primal() {
        let d = toy3();
        let code = exhaustive_ecoc(3).unwrap();
        for variant in [Variant::Mo, Variant::Hinge] {
            let mut cfg = CorrectiveConfig::new(Learner::Stump, 2.0, 15);
            cfg.force_rounds = true;
            cfg.record_duals = true;
            let run = multiboost(&d, variant, CodeSource::Fixed(&code), &cfg).unwrap();
            // a separated hinge problem has all-zero duals and stops as degenerate
            match run.stop {
                StopReason::RoundLimit => assert_eq!(run.ensemble.len(), 15),
                StopReason::Degenerate => {
                    assert_eq!(variant, Variant::Hinge);
                    assert_eq!(run.duals.rows.last().unwrap().primal, 0.0);
                }
                StopReason::DualBounded => panic!("forced run stopped on the dual bound"),
            }
            let p = run.duals.primals();
            for pair in p.windows(2) {
                assert!(pair[1] <= pair[0] + 1e-9, "{variant:?}: {pair:?}");
            }
            assert!((run.ensemble.weight_sum() - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn duals_bound_every_past_column() {
        let d = toy3();
        let mut stream = ColumnStream::new(3, 4);
        let mut cfg = CorrectiveConfig::new(Learner::Stump, 3.0, 12);
        cfg.force_rounds = true;
        cfg.record_duals = true;
        let run = multiboost(&d, Variant::Ecc, CodeSource::Stream(&mut stream), &cfg).unwrap();
        for (t, u) in run.dual_weights.iter().enumerate() {
            let r = run.duals.rows[t].r;
            for j in 0..=t {
                assert!(run.margins.correlation(u, j) <= r + 1e-9);
            }
            assert!(run.duals.rows[t].gap <= 1e-6 * (1.0 + run.duals.rows[t].primal));
        }
    }

    #[test]
    fn mismatched_source_is_rejected() {
        let d = toy3();
        let code = one_vs_all(3).unwrap();
        let cfg = CorrectiveConfig::new(Learner::Stump, 1.0, 3);
        assert!(multiboost(&d, Variant::Ecc, CodeSource::Fixed(&code), &cfg).is_err());
        let mut s = ColumnStream::new(3, 1);
        assert!(multiboost(&d, Variant::Mo, CodeSource::Stream(&mut s), &cfg).is_err());
        let bad = CorrectiveConfig::new(Learner::Stump, 0.0, 3);
        assert!(multiboost(&d, Variant::Mo, CodeSource::Fixed(&code), &bad).is_err());
    }
}
