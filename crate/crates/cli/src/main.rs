use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multiboost::coding::ColumnStream;
use multiboost::corrective::MasterMethod;
use multiboost::data::{load_dataset, load_dataset_pair, stratified_split, Dataset, Format, SplitSpec};
use multiboost::ensemble::Ensemble;
use multiboost::evaluate::{min_margin, multiclass_error};
use multiboost::rng::derive_seed;
use multiboost::trace::series_csv;
use multiboost::weak::Learner;
use multiboost::Error;
use multiboost_cli::experiment::TrialSeeds;
use multiboost_cli::{
    run_booster, run_experiment, select_theta_cv, select_theta_sum, Booster, CodeChoice, DataSpec, ExperimentConfig,
    RunOptions, ThetaPolicy,
};

#[derive(Parser)]
#[command(name = "multiboost", version, about = "Stage-wise and totally-corrective multiclass boosting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one booster on one split.
    Train(TrainArgs),
    /// Repeated resplits over several boosters.
    Experiment(ExperimentArgs),
    /// Score a saved ensemble on a data file.
    Evaluate(EvaluateArgs),
    /// Print a coding matrix as CSV.
    Codegen(CodegenArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    dataset: PathBuf,
    /// Separate test file; merged with --dataset and resplit unless --keep-split.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    keep_split: bool,
    #[arg(long, default_value = "csv")]
    format: Format,
    #[arg(long, default_value = "stump")]
    learner: Learner,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// sum, cv, or a positive number.
    #[arg(long, default_value = "sum")]
    theta: ThetaPolicy,
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Output code of the MO boosters: auto, ova, exhaustive or random:<L>.
    #[arg(long, default_value = "auto")]
    code: CodeChoice,
    /// Overrides the length of the output code with a random dense code.
    #[arg(long)]
    code_length: Option<usize>,
    #[arg(long, default_value = "newton")]
    master: MasterMethod,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Let totally-corrective boosters stop early once the dual bound holds.
    #[arg(long)]
    early_stop: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn code(&self) -> CodeChoice {
        match self.code_length {
            Some(l) => CodeChoice::Random(l),
            None => self.code,
        }
    }

    fn data_spec(&self) -> DataSpec {
        match &self.test {
            Some(test) => DataSpec::Pair {
                train: self.dataset.clone(),
                test: test.clone(),
                keep_split: self.keep_split,
            },
            None => DataSpec::Pooled(self.dataset.clone()),
        }
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    booster: Booster,
    #[arg(long, default_value_t = 100)]
    rounds: usize,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "AB.MO,TC.MO,AB.ECC,TC.ECC")]
    booster: Vec<Booster>,
    #[arg(long, value_delimiter = ',', default_value = "50,100,500")]
    rounds: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Write dual-weight correlation traces.
    #[arg(long)]
    correlations: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Ensemble written by `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct CodegenArgs {
    #[arg(long)]
    classes: usize,
    /// auto, ova, exhaustive or random:<L>; ignored with --stream.
    #[arg(long, default_value = "auto")]
    code: CodeChoice,
    #[arg(long)]
    code_length: Option<usize>,
    /// Emit this many columns of the random column stream instead.
    #[arg(long)]
    stream: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Failure category, mapped to the process exit code.
enum Failure {
    Config(String),
    Data(String),
    Solver(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_data_error() {
            Failure::Data(e.to_string())
        } else if e.is_solver_error() {
            Failure::Solver(e.to_string())
        } else {
            Failure::Config(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

fn load_data(c: &Common) -> Result<Dataset, Failure> {
    let d = match &c.test {
        Some(t) => {
            let (a, b) = load_dataset_pair(&c.dataset, t, c.format)?;
            a.concat(&b)?
        }
        None => load_dataset(&c.dataset, c.format)?,
    };
    Ok(d)
}

fn train(args: TrainArgs) -> Result<(), Failure> {
    let c = &args.common;
    if args.rounds == 0 {
        return Err(Failure::Config("--rounds must be positive".into()));
    }
    let seeds = TrialSeeds::new(c.seed, 0);
    let (train, test) = match (&c.test, c.keep_split) {
        (Some(t), true) => load_dataset_pair(&c.dataset, t, c.format)?,
        _ => stratified_split(&load_data(c)?, &SplitSpec::new(c.train_fraction, seeds.split)?)?,
    };
    let code = c.code().build(train.num_classes(), seeds.code)?;
    let base = RunOptions {
        learner: c.learner,
        rounds: args.rounds,
        theta: None,
        epsilon: c.epsilon,
        force_rounds: !c.early_stop,
        master: c.master,
        code: &code,
        stream_seed: seeds.stream,
        correlations: false,
    };
    let theta = if args.booster.is_stagewise() {
        None
    } else {
        Some(match &c.theta {
            ThetaPolicy::Fixed(v) => *v,
            ThetaPolicy::Sum => {
                let ab = run_booster(&train, None, args.booster.stagewise_partner(), &base)?;
                select_theta_sum(ab.ensemble.weights())
            }
            ThetaPolicy::Cv { grid, folds } => {
                select_theta_cv(&train, args.booster, &base, grid, *folds, seeds.folds)?.theta
            }
        })
    };
    let run = run_booster(&train, Some(&test), args.booster, &RunOptions { theta, ..base })?;
    let train_err = multiclass_error(&run.ensemble, &train)?;
    let test_err = multiclass_error(&run.ensemble, &test)?;
    let margin = min_margin(&run.ensemble, &train)?;
    println!("booster     {}", args.booster);
    println!("rounds      {}", run.rounds());
    if let Some(t) = theta {
        println!("theta       {t}");
    }
    if let Some(s) = run.stop {
        println!("stop        {s:?}");
    }
    println!("train_err   {train_err}");
    println!("test_err    {test_err}");
    println!("min_margin  {}", margin.min);
    if let Some(out) = &c.out {
        std::fs::create_dir_all(out)?;
        std::fs::write(out.join("ensemble.txt"), run.ensemble.to_string())?;
        std::fs::write(out.join("curve.csv"), run.trace.to_csv())?;
        std::fs::write(out.join("margin.csv"), series_csv("min_margin", &run.min_margins))?;
        std::fs::write(out.join("coding.csv"), run.ensemble.coding().to_csv())?;
        if let Some(d) = &run.duals {
            std::fs::write(out.join("dual.csv"), d.to_csv())?;
        }
    }
    Ok(())
}

fn experiment(args: ExperimentArgs) -> Result<(), Failure> {
    let c = &args.common;
    let mut cfg = ExperimentConfig::new(c.data_spec());
    cfg.format = c.format;
    cfg.boosters = args.booster.clone();
    cfg.learner = c.learner;
    cfg.rounds = args.rounds.clone();
    cfg.trials = args.trials;
    cfg.seed = c.seed;
    cfg.theta = c.theta.clone();
    cfg.epsilon = c.epsilon;
    cfg.force_rounds = !c.early_stop;
    cfg.train_fraction = c.train_fraction;
    cfg.code = c.code();
    cfg.master = c.master;
    cfg.correlations = args.correlations;
    cfg.out = c.out.clone();
    cfg.validate().map_err(|e| Failure::Config(e.to_string()))?;
    let report = run_experiment(&cfg)?;
    print!("{}", report.summary.to_csv());
    if let Some(f) = report.trials.iter().find_map(|t| t.failure.clone()) {
        return Err(Failure::Solver(format!("{} trial(s) failed; first: {f}", report.failures())));
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.model)?;
    let ensemble: Ensemble = text.parse().map_err(|e: Error| Failure::Config(format!("{}: {e}", args.model.display())))?;
    let d = load_dataset(&args.dataset, args.format)?;
    // Map the file's labels onto the ensemble's class order.
    let d = d.relabel(ensemble.label_codes())?;
    println!("examples    {}", d.len());
    println!("error       {}", multiclass_error(&ensemble, &d)?);
    println!("min_margin  {}", min_margin(&ensemble, &d)?.min);
    Ok(())
}

fn codegen(args: CodegenArgs) -> Result<(), Failure> {
    let code = match args.stream {
        Some(len) => {
            let mut stream = ColumnStream::new(args.classes, derive_seed(args.seed, 0));
            let mut m = multiboost::coding::CodingMatrix::empty(args.classes);
            for _ in 0..len {
                m.push_column(&stream.next_column())?;
            }
            m
        }
        None => {
            let choice = match args.code_length {
                Some(l) => CodeChoice::Random(l),
                None => args.code,
            };
            choice.build(args.classes, args.seed)?
        }
    };
    match &args.out {
        Some(p) => std::fs::write(p, code.to_csv())?,
        None => print!("{}", code.to_csv()),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Train(a) => train(a),
        Command::Experiment(a) => experiment(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Codegen(a) => codegen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(m)) => {
            eprintln!("data error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Solver(m)) => {
            eprintln!("solver failure: {m}");
            ExitCode::from(3)
        }
    }
}
