//! Repeated-resplit protocol: split, run every booster, collect checkpoints.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use multiboost::coding::CodingMatrix;
use multiboost::corrective::StopReason;
use multiboost::data::{load_dataset, load_dataset_pair, stratified_split, Dataset, SplitSpec};
use multiboost::evaluate::correlation_csv;
use multiboost::rng::derive_seed;
use multiboost::trace::{series_csv, BoostTrace, DualTrace};
use multiboost::{Error, Result};
use rayon::prelude::*;

use crate::config::{Booster, DataSpec, ExperimentConfig, ThetaPolicy};
use crate::runner::{run_booster, RunOptions, RunRecord};
use crate::theta::{select_theta_cv, select_theta_sum};

/// Loaded data, before per-trial splitting.
#[derive(Debug, Clone)]
pub enum Source {
    Pool(Dataset),
    Fixed(Dataset, Dataset),
}

impl Source {
    pub fn load(cfg: &ExperimentConfig) -> Result<Source> {
        match &cfg.data {
            DataSpec::Pooled(p) => Ok(Source::Pool(load_dataset(p, cfg.format)?)),
            DataSpec::Pair { train, test, keep_split } => {
                let (a, b) = load_dataset_pair(train, test, cfg.format)?;
                if *keep_split {
                    Ok(Source::Fixed(a, b))
                } else {
                    Ok(Source::Pool(a.concat(&b)?))
                }
            }
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Source::Pool(d) | Source::Fixed(d, _) => d.num_classes(),
        }
    }

    fn split(&self, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        match self {
            Source::Pool(d) => stratified_split(d, &SplitSpec::new(fraction, seed)?),
            Source::Fixed(a, b) => Ok((a.clone(), b.clone())),
        }
    }
}

/// Seeds of one trial; all derive from the master seed and the trial index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub trial: u64,
    pub split: u64,
    pub stream: u64,
    pub code: u64,
    pub folds: u64,
}

impl TrialSeeds {
    pub fn new(master: u64, index: usize) -> Self {
        let trial = derive_seed(master, index as u64);
        TrialSeeds {
            trial,
            split: derive_seed(trial, 0),
            stream: derive_seed(trial, 1),
            code: derive_seed(trial, 2),
            folds: derive_seed(trial, 3),
        }
    }
}

/// Errors of one booster at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub booster: Booster,
    pub rounds: usize,
    pub theta: Option<f64>,
    pub train_err: f64,
    pub test_err: f64,
    pub min_margin: f64,
    /// Rounds actually run (may be fewer than `rounds` after a degenerate stop).
    pub completed: usize,
}

/// Per-round series of one run, without the ensemble.
#[derive(Debug, Clone)]
pub struct Curve {
    pub booster: Booster,
    /// Round limit of the run.
    pub rounds: usize,
    pub theta: Option<f64>,
    pub trace: BoostTrace,
    pub min_margins: Vec<f64>,
    pub duals: Option<DualTrace>,
    pub correlations: Option<Vec<Vec<f64>>>,
    pub stop: Option<StopReason>,
}

impl Curve {
    fn from_run(rounds: usize, run: RunRecord) -> Curve {
        Curve {
            booster: run.booster,
            rounds,
            theta: run.theta,
            trace: run.trace,
            min_margins: run.min_margins,
            duals: run.duals,
            correlations: run.correlations,
            stop: run.stop,
        }
    }

    pub fn file_stem(&self) -> String {
        format!("{}_T{}", self.booster.slug(), self.rounds)
    }
}

#[derive(Debug, Clone)]
pub struct TrialReport {
    pub index: usize,
    pub seeds: TrialSeeds,
    pub cells: Vec<Cell>,
    pub curves: Vec<Curve>,
    pub seconds: f64,
    /// Set when a booster failed; the trial then has no cells.
    pub failure: Option<String>,
    pub curve_files: Vec<PathBuf>,
}

impl TrialReport {
    pub fn cell(&self, booster: Booster, rounds: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.booster == booster && c.rounds == rounds)
    }

    pub fn curve(&self, booster: Booster, rounds: usize) -> Option<&Curve> {
        self.curves.iter().find(|c| c.booster == booster && c.rounds == rounds)
    }
}

fn theta_for(
    cfg: &ExperimentConfig,
    booster: Booster,
    t: usize,
    stagewise: &BTreeMap<Booster, RunRecord>,
    train: &Dataset,
    opts: &RunOptions<'_>,
    seeds: &TrialSeeds,
) -> Result<f64> {
    match &cfg.theta {
        ThetaPolicy::Fixed(v) => Ok(*v),
        ThetaPolicy::Sum => {
            let ab = &stagewise[&booster.stagewise_partner()];
            Ok(select_theta_sum(&ab.ensemble.weights()[..t.min(ab.ensemble.len())]))
        }
        ThetaPolicy::Cv { grid, folds } => {
            let opts = RunOptions { rounds: t, ..opts.clone() };
            Ok(select_theta_cv(train, booster, &opts, grid, *folds, seeds.folds)?.theta)
        }
    }
}

fn trial_body(cfg: &ExperimentConfig, source: &Source, seeds: &TrialSeeds) -> Result<(Vec<Cell>, Vec<Curve>)> {
    let (train, test) = source.split(cfg.train_fraction, seeds.split)?;
    let code: CodingMatrix = cfg.code.build(train.num_classes(), seeds.code)?;
    let checkpoints = cfg.checkpoints();
    let t_max = *checkpoints.last().expect("checked by validate");
    let boosters = cfg.booster_set();
    let base = RunOptions {
        learner: cfg.learner,
        rounds: t_max,
        theta: None,
        epsilon: cfg.epsilon,
        force_rounds: cfg.force_rounds,
        master: cfg.master,
        code: &code,
        stream_seed: seeds.stream,
        correlations: cfg.correlations,
    };

    // Stage-wise runs go once to the largest checkpoint; they are also the
    // source of the `sum` theta for their corrective partners.
    let mut stagewise: BTreeMap<Booster, RunRecord> = BTreeMap::new();
    for &b in &boosters {
        let needed = if b.is_stagewise() {
            true
        } else {
            cfg.theta == ThetaPolicy::Sum
        };
        let partner = b.stagewise_partner();
        if needed && !stagewise.contains_key(&partner) {
            stagewise.insert(partner, run_booster(&train, Some(&test), partner, &base)?);
        }
    }

    let mut cells = Vec::new();
    let mut curves = Vec::new();
    for &b in &boosters {
        if b.is_stagewise() {
            let run = &stagewise[&b];
            for &t in &checkpoints {
                let (train_err, test_err, min_margin) = run.checkpoint(t).expect("stage-wise run is non-empty");
                cells.push(Cell {
                    booster: b,
                    rounds: t,
                    theta: None,
                    train_err,
                    test_err: test_err.expect("test set supplied"),
                    min_margin,
                    completed: t.min(run.rounds()),
                });
            }
            continue;
        }
        for &t in &checkpoints {
            let theta = theta_for(cfg, b, t, &stagewise, &train, &base, seeds)?;
            let opts = RunOptions {
                rounds: t,
                theta: Some(theta),
                ..base.clone()
            };
            let run = run_booster(&train, Some(&test), b, &opts)?;
            let (train_err, test_err, min_margin) = run.checkpoint(t).ok_or_else(|| {
                Error::InvalidArgument(format!("{b} stopped before its first round (stop {:?})", run.stop))
            })?;
            cells.push(Cell {
                booster: b,
                rounds: t,
                theta: Some(theta),
                train_err,
                test_err: test_err.expect("test set supplied"),
                min_margin,
                completed: run.rounds(),
            });
            curves.push(Curve::from_run(t, run));
        }
    }
    for (b, run) in stagewise {
        if boosters.contains(&b) {
            curves.push(Curve::from_run(t_max, run));
        }
    }
    curves.sort_by_key(|c| (c.booster, c.rounds));
    Ok((cells, curves))
}

/// Runs trial `index`; a booster failure is returned inside the report.
pub fn run_trial(cfg: &ExperimentConfig, source: &Source, index: usize) -> TrialReport {
    let seeds = TrialSeeds::new(cfg.seed, index);
    let start = Instant::now();
    let outcome = trial_body(cfg, source, &seeds);
    let seconds = start.elapsed().as_secs_f64();
    match outcome {
        Ok((cells, curves)) => TrialReport {
            index,
            seeds,
            cells,
            curves,
            seconds,
            failure: None,
            curve_files: Vec::new(),
        },
        Err(e) => {
            log::error!("trial {index} aborted: {e}");
            TrialReport {
                index,
                seeds,
                cells: Vec::new(),
                curves: Vec::new(),
                seconds,
                failure: Some(e.to_string()),
                curve_files: Vec::new(),
            }
        }
    }
}

/// Mean and sample standard deviation of one (booster, T) cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    pub std: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Option<Stat> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        Some(Stat { mean, std })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub booster: Booster,
    pub valid: usize,
    pub failed: usize,
    /// One entry per checkpoint; `None` when no trial succeeded.
    pub train: Vec<Option<Stat>>,
    pub test: Vec<Option<Stat>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub dataset: String,
    pub checkpoints: Vec<usize>,
    pub rows: Vec<SummaryRow>,
}

pub fn summarize(dataset: &str, cfg: &ExperimentConfig, trials: &[TrialReport]) -> Summary {
    let checkpoints = cfg.checkpoints();
    let failed = trials.iter().filter(|t| t.failure.is_some()).count();
    let rows = cfg
        .booster_set()
        .into_iter()
        .map(|b| {
            let collect = |t: usize, pick: fn(&Cell) -> f64| -> Option<Stat> {
                let v: Vec<f64> = trials.iter().filter_map(|tr| tr.cell(b, t)).map(pick).collect();
                Stat::of(&v)
            };
            SummaryRow {
                booster: b,
                valid: trials.len() - failed,
                failed,
                train: checkpoints.iter().map(|&t| collect(t, |c| c.train_err)).collect(),
                test: checkpoints.iter().map(|&t| collect(t, |c| c.test_err)).collect(),
            }
        })
        .collect();
    Summary {
        dataset: dataset.to_string(),
        checkpoints,
        rows,
    }
}

impl Summary {
    /// Training errors at every checkpoint, then test errors, as mean and std columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("dataset,booster,trials,failed");
        for split in ["train", "test"] {
            for t in &self.checkpoints {
                let _ = write!(out, ",{split}_mean@{t},{split}_std@{t}");
            }
        }
        out.push('\n');
        for row in &self.rows {
            let _ = write!(out, "{},{},{},{}", self.dataset, row.booster, row.valid, row.failed);
            for s in row.train.iter().chain(&row.test) {
                match s {
                    Some(s) => {
                        let _ = write!(out, ",{},{}", s.mean, s.std);
                    }
                    None => out.push_str(",invalid,invalid"),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn row(&self, booster: Booster) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.booster == booster)
    }

    /// Index of checkpoint `t`.
    pub fn column(&self, t: usize) -> Option<usize> {
        self.checkpoints.iter().position(|&c| c == t)
    }
}

pub fn trials_csv(trials: &[TrialReport]) -> String {
    let mut out = String::from("trial,seed,booster,rounds,completed,theta,train_err,test_err,min_margin,status\n");
    for tr in trials {
        if let Some(msg) = &tr.failure {
            let msg = msg.replace([',', '\n'], ";");
            let _ = writeln!(out, "{},{},,,,,,,,failed: {msg}", tr.index, tr.seeds.trial);
            continue;
        }
        for c in &tr.cells {
            let theta = c.theta.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},ok",
                tr.index, tr.seeds.trial, c.booster, c.rounds, c.completed, theta, c.train_err, c.test_err, c.min_margin
            );
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub trials: Vec<TrialReport>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn failures(&self) -> usize {
        self.trials.iter().filter(|t| t.failure.is_some()).count()
    }
}

fn dataset_name(cfg: &ExperimentConfig) -> String {
    let path = match &cfg.data {
        DataSpec::Pooled(p) => p,
        DataSpec::Pair { train, .. } => train,
    };
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "data".into())
}

/// Loads the data, runs every trial (in parallel) and writes the outputs when
/// `cfg.out` is set. Load and configuration errors are returned; booster
/// failures only abort their own trial.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let source = Source::load(cfg)?;
    run_experiment_on(cfg, &source, &dataset_name(cfg))
}

pub fn run_experiment_on(cfg: &ExperimentConfig, source: &Source, dataset: &str) -> Result<ExperimentReport> {
    cfg.validate()?;
    if let Some(out) = &cfg.out {
        std::fs::create_dir_all(out)?;
    }
    let mut trials: Vec<TrialReport> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| {
            let mut report = run_trial(cfg, source, i);
            if let Some(out) = &cfg.out {
                match write_trial_files(out, &report) {
                    Ok(files) => report.curve_files = files,
                    Err(e) => log::error!("trial {i}: could not write curves: {e}"),
                }
            }
            log::info!("trial {i} finished in {:.1}s", report.seconds);
            report
        })
        .collect();
    trials.sort_by_key(|t| t.index);
    let summary = summarize(dataset, cfg, &trials);
    if let Some(out) = &cfg.out {
        write_outputs(out, cfg, &summary, &trials)?;
    }
    Ok(ExperimentReport { trials, summary })
}

fn write_trial_files(out: &Path, report: &TrialReport) -> Result<Vec<PathBuf>> {
    let dir = out.join(format!("trial_{:03}", report.index));
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut write = |name: String, body: String| -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        files.push(path);
        Ok(())
    };
    for c in &report.curves {
        let stem = c.file_stem();
        write(format!("{stem}_curve.csv"), c.trace.to_csv())?;
        write(format!("{stem}_margin.csv"), series_csv("min_margin", &c.min_margins))?;
        if let Some(d) = &c.duals {
            write(format!("{stem}_dual.csv"), d.to_csv())?;
        }
        if let Some(corr) = &c.correlations {
            write(format!("{stem}_correlation.csv"), correlation_csv(corr))?;
        }
    }
    Ok(files)
}

fn write_outputs(out: &Path, cfg: &ExperimentConfig, summary: &Summary, trials: &[TrialReport]) -> Result<()> {
    std::fs::write(out.join("summary.csv"), summary.to_csv())?;
    std::fs::write(out.join("trials.csv"), trials_csv(trials))?;
    let mut manifest = String::new();
    for (k, v) in cfg.manifest_lines() {
        let _ = writeln!(manifest, "{k}={v}");
    }
    for t in trials {
        let _ = writeln!(manifest, "trial.{}.seed={}", t.index, t.seeds.trial);
        let _ = writeln!(manifest, "trial.{}.split_seed={}", t.index, t.seeds.split);
        let _ = writeln!(manifest, "trial.{}.stream_seed={}", t.index, t.seeds.stream);
        let _ = writeln!(manifest, "trial.{}.seconds={:.3}", t.index, t.seconds);
        if let Some(f) = &t.failure {
            let _ = writeln!(manifest, "trial.{}.failure={}", t.index, f.replace('\n', " "));
        }
    }
    std::fs::write(out.join("manifest.txt"), manifest)?;
    Ok(())
}
