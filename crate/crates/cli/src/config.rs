//! Experiment configuration.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use multiboost::coding::{exhaustive_ecoc, one_vs_all, random_dense_code, CodingMatrix};
use multiboost::corrective::MasterMethod;
use multiboost::data::Format;
use multiboost::weak::Learner;
use multiboost::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Booster {
    AbMo,
    TcMo,
    AbEcc,
    TcEcc,
    TcHinge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Fixed output code.
    Mo,
    /// Streamed random columns.
    Ecc,
}

impl Booster {
    pub const ALL: [Booster; 5] = [Booster::AbMo, Booster::TcMo, Booster::AbEcc, Booster::TcEcc, Booster::TcHinge];

    pub fn family(self) -> Family {
        match self {
            Booster::AbMo | Booster::TcMo | Booster::TcHinge => Family::Mo,
            Booster::AbEcc | Booster::TcEcc => Family::Ecc,
        }
    }

    pub fn is_stagewise(self) -> bool {
        matches!(self, Booster::AbMo | Booster::AbEcc)
    }

    /// Stage-wise booster of the same family, whose weights feed the `sum` theta rule.
    pub fn stagewise_partner(self) -> Booster {
        match self.family() {
            Family::Mo => Booster::AbMo,
            Family::Ecc => Booster::AbEcc,
        }
    }

    /// Name usable in file names.
    pub fn slug(self) -> &'static str {
        match self {
            Booster::AbMo => "ab_mo",
            Booster::TcMo => "tc_mo",
            Booster::AbEcc => "ab_ecc",
            Booster::TcEcc => "tc_ecc",
            Booster::TcHinge => "tc_hinge",
        }
    }
}

impl fmt::Display for Booster {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Booster::AbMo => "AB.MO",
            Booster::TcMo => "TC.MO",
            Booster::AbEcc => "AB.ECC",
            Booster::TcEcc => "TC.ECC",
            Booster::TcHinge => "TC.HINGE",
        })
    }
}

impl FromStr for Booster {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s
            .chars()
            .filter(|c| !matches!(c, '.' | '_' | '-'))
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "abmo" => Ok(Booster::AbMo),
            "tcmo" => Ok(Booster::TcMo),
            "abecc" => Ok(Booster::AbEcc),
            "tcecc" => Ok(Booster::TcEcc),
            "tchinge" => Ok(Booster::TcHinge),
            _ => Err(Error::InvalidArgument(format!("unknown booster {s:?}"))),
        }
    }
}

/// Cross-validation grid used by the `cv` theta policy.
pub const DEFAULT_THETA_GRID: [f64; 16] = [
    2.0, 5.0, 8.0, 10.0, 12.0, 15.0, 20.0, 30.0, 40.0, 45.0, 60.0, 80.0, 100.0, 120.0, 150.0, 200.0,
];

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaPolicy {
    /// Sum of the stage-wise coefficients after the same number of rounds.
    Sum,
    Cv { grid: Vec<f64>, folds: usize },
    Fixed(f64),
}

impl ThetaPolicy {
    pub fn cv_default() -> Self {
        ThetaPolicy::Cv {
            grid: DEFAULT_THETA_GRID.to_vec(),
            folds: 5,
        }
    }
}

impl fmt::Display for ThetaPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaPolicy::Sum => f.write_str("sum"),
            ThetaPolicy::Cv { grid, folds } => {
                let g: Vec<String> = grid.iter().map(|v| v.to_string()).collect();
                write!(f, "cv(k={folds};{})", g.join(";"))
            }
            ThetaPolicy::Fixed(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for ThetaPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sum" => Ok(ThetaPolicy::Sum),
            "cv" => Ok(ThetaPolicy::cv_default()),
            other => {
                let v: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("theta must be sum, cv or a number, got {s:?}")))?;
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidArgument(format!("fixed theta must be positive, got {v}")));
                }
                Ok(ThetaPolicy::Fixed(v))
            }
        }
    }
}

/// Output code for the fixed-code boosters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodeChoice {
    /// One-vs-all for two classes, exhaustive for 3 to 7, random dense beyond.
    Auto,
    OneVsAll,
    Exhaustive,
    /// Random dense code of the given length.
    Random(usize),
}

impl CodeChoice {
    /// Length used for random codes when none is given.
    pub fn default_random_length(classes: usize) -> usize {
        (10.0 * (classes as f64).log2()).ceil() as usize
    }

    pub fn build(self, classes: usize, seed: u64) -> Result<CodingMatrix> {
        match self {
            CodeChoice::Auto => match classes {
                2 => one_vs_all(2),
                3..=7 => exhaustive_ecoc(classes),
                c => random_dense_code(c, Self::default_random_length(c), seed),
            },
            CodeChoice::OneVsAll => one_vs_all(classes),
            CodeChoice::Exhaustive => exhaustive_ecoc(classes),
            CodeChoice::Random(len) => random_dense_code(classes, len, seed),
        }
    }
}

impl fmt::Display for CodeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeChoice::Auto => f.write_str("auto"),
            CodeChoice::OneVsAll => f.write_str("ova"),
            CodeChoice::Exhaustive => f.write_str("exhaustive"),
            CodeChoice::Random(l) => write!(f, "random({l})"),
        }
    }
}

impl FromStr for CodeChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "auto" => Ok(CodeChoice::Auto),
            "ova" | "one-vs-all" => Ok(CodeChoice::OneVsAll),
            "exhaustive" => Ok(CodeChoice::Exhaustive),
            other => match other.strip_prefix("random") {
                Some(rest) => {
                    let len = rest.trim_start_matches([':', '=']);
                    let len: usize = len
                        .parse()
                        .map_err(|_| Error::InvalidArgument(format!("random code needs a length, got {s:?}")))?;
                    Ok(CodeChoice::Random(len))
                }
                None => Err(Error::InvalidArgument(format!("unknown code {s:?}"))),
            },
        }
    }
}

/// Where the train/test pairs come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSpec {
    /// One file, resplit every trial.
    Pooled(PathBuf),
    /// A pre-partitioned pair; merged and resplit unless `keep_split`.
    Pair {
        train: PathBuf,
        test: PathBuf,
        keep_split: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataSpec,
    pub format: Format,
    pub boosters: Vec<Booster>,
    pub learner: Learner,
    /// Checkpoints; the stage-wise runs go to the largest.
    pub rounds: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub theta: ThetaPolicy,
    pub epsilon: f64,
    /// Run totally-corrective boosters for exactly `T` rounds unless degenerate.
    pub force_rounds: bool,
    pub train_fraction: f64,
    pub code: CodeChoice,
    pub master: MasterMethod,
    /// Keep the dual weights of TC.MO runs and write correlation traces.
    pub correlations: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(data: DataSpec) -> Self {
        ExperimentConfig {
            data,
            format: Format::Csv,
            boosters: vec![Booster::AbMo, Booster::TcMo, Booster::AbEcc, Booster::TcEcc],
            learner: Learner::Stump,
            rounds: vec![50, 100, 500],
            trials: 20,
            seed: 0,
            theta: ThetaPolicy::Sum,
            epsilon: 1e-5,
            force_rounds: true,
            train_fraction: 0.7,
            code: CodeChoice::Auto,
            master: MasterMethod::default(),
            correlations: false,
            out: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is required".into()));
        }
        if self.rounds.is_empty() || self.rounds.contains(&0) {
            return Err(Error::InvalidArgument("round checkpoints must be positive".into()));
        }
        if self.boosters.is_empty() {
            return Err(Error::InvalidArgument("no booster selected".into()));
        }
        if let ThetaPolicy::Fixed(v) = self.theta {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("fixed theta must be positive, got {v}")));
            }
        }
        if let ThetaPolicy::Cv { grid, folds } = &self.theta {
            if grid.is_empty() || grid.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return Err(Error::InvalidArgument("theta grid must hold positive values".into()));
            }
            if *folds < 2 {
                return Err(Error::InvalidArgument("cross-validation needs at least 2 folds".into()));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument("epsilon must be positive".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidArgument("train fraction must lie in (0, 1)".into()));
        }
        if let CodeChoice::Random(0) = self.code {
            return Err(Error::InvalidArgument("code length must be positive".into()));
        }
        Ok(())
    }

    /// Sorted, deduplicated checkpoints.
    pub fn checkpoints(&self) -> Vec<usize> {
        let mut r = self.rounds.clone();
        r.sort_unstable();
        r.dedup();
        r
    }

    /// Boosters in canonical order without repeats.
    pub fn booster_set(&self) -> Vec<Booster> {
        let mut b = self.boosters.clone();
        b.sort_unstable();
        b.dedup();
        b
    }

    /// Key-value lines describing the configuration.
    pub fn manifest_lines(&self) -> Vec<(String, String)> {
        let mut kv = Vec::new();
        match &self.data {
            DataSpec::Pooled(p) => kv.push(("dataset".into(), p.display().to_string())),
            DataSpec::Pair { train, test, keep_split } => {
                kv.push(("dataset".into(), train.display().to_string()));
                kv.push(("test".into(), test.display().to_string()));
                kv.push(("keep_split".into(), keep_split.to_string()));
            }
        }
        let boosters: Vec<String> = self.booster_set().iter().map(|b| b.to_string()).collect();
        let rounds: Vec<String> = self.checkpoints().iter().map(|t| t.to_string()).collect();
        kv.push(("format".into(), self.format.to_string()));
        kv.push(("boosters".into(), boosters.join(",")));
        kv.push(("learner".into(), self.learner.to_string()));
        kv.push(("rounds".into(), rounds.join(",")));
        kv.push(("trials".into(), self.trials.to_string()));
        kv.push(("seed".into(), self.seed.to_string()));
        kv.push(("theta".into(), self.theta.to_string()));
        kv.push(("epsilon".into(), self.epsilon.to_string()));
        kv.push(("force_rounds".into(), self.force_rounds.to_string()));
        kv.push(("train_fraction".into(), self.train_fraction.to_string()));
        kv.push(("code".into(), self.code.to_string()));
        kv.push(("master".into(), self.master.to_string()));
        kv
    }
}
