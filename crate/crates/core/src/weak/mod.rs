//! Weighted binary weak learners.
//!
//! Both learners see the same [`BinaryProblem`]: a shared feature matrix,
//! +-1 targets and nonnegative example weights. Every booster in the crate
//! reduces its round to one or more of these problems.

mod lda;
mod stump;

use std::fmt;
use std::str::FromStr;

pub use lda::{train_lda, LdaHypothesis};
pub use stump::{train_stump, Stump};

use crate::data::Features;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct BinaryProblem<'a> {
    features: &'a Features,
    targets: &'a [i8],
    weights: &'a [f64],
    total_weight: f64,
}

impl<'a> BinaryProblem<'a> {
    pub fn new(features: &'a Features, targets: &'a [i8], weights: &'a [f64]) -> Result<Self> {
        let n = features.rows();
        if targets.len() != n || weights.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "{n} rows, {} targets, {} weights",
                targets.len(),
                weights.len()
            )));
        }
        if targets.iter().any(|&t| t != 1 && t != -1) {
            return Err(Error::InvalidArgument("targets must be +1 or -1".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidArgument(
                "weights must be finite and nonnegative".into(),
            ));
        }
        let total_weight: f64 = weights.iter().sum();
        if !(total_weight > 0.0) {
            return Err(Error::InvalidArgument("weights sum to zero".into()));
        }
        Ok(BinaryProblem {
            features,
            targets,
            weights,
            total_weight,
        })
    }

    pub fn features(&self) -> &'a Features {
        self.features
    }

    pub fn targets(&self) -> &'a [i8] {
        self.targets
    }

    pub fn weights(&self) -> &'a [f64] {
        self.weights
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }
}

/// A trained binary predictor `x -> {-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub enum Hypothesis {
    Stump(Stump),
    Lda(LdaHypothesis),
}

impl Hypothesis {
    pub fn predict(&self, x: &[f64]) -> i8 {
        match self {
            Hypothesis::Stump(s) => s.predict(x),
            Hypothesis::Lda(l) => l.predict(x),
        }
    }

    pub fn predict_all(&self, features: &Features) -> Vec<i8> {
        (0..features.rows()).map(|i| self.predict(features.row(i))).collect()
    }

    /// Number of input attributes the hypothesis reads (an upper bound for stumps).
    pub fn input_dim(&self) -> usize {
        match self {
            Hypothesis::Stump(s) => s.feature + 1,
            Hypothesis::Lda(l) => l.direction.len(),
        }
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hypothesis::Stump(s) => write!(f, "stump {} {} {}", s.feature, s.threshold, s.polarity),
            Hypothesis::Lda(l) => {
                write!(f, "lda {} {} {}", l.polarity, l.threshold, l.direction.len())?;
                for v in &l.direction {
                    write!(f, " {v}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |what: &str| Error::Parse {
            line: 0,
            message: format!("{what} in hypothesis {s:?}"),
        };
        let tokens: Vec<&str> = s.split_whitespace().collect();
        let num = |k: usize| -> Result<f64> {
            tokens
                .get(k)
                .and_then(|t| t.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| bad("bad number"))
        };
        let polarity = |k: usize| -> Result<i8> {
            match tokens.get(k).copied() {
                Some("1") | Some("+1") => Ok(1),
                Some("-1") => Ok(-1),
                _ => Err(bad("bad polarity")),
            }
        };
        match tokens.first().copied() {
            Some("stump") if tokens.len() == 4 => Ok(Hypothesis::Stump(Stump {
                feature: tokens[1].parse().map_err(|_| bad("bad feature index"))?,
                threshold: num(2)?,
                polarity: polarity(3)?,
            })),
            Some("lda") if tokens.len() >= 4 => {
                let dim: usize = tokens[3].parse().map_err(|_| bad("bad dimension"))?;
                if tokens.len() != 4 + dim {
                    return Err(bad("wrong direction length"));
                }
                let direction = (0..dim).map(|k| num(4 + k)).collect::<Result<Vec<_>>>()?;
                Ok(Hypothesis::Lda(LdaHypothesis {
                    direction,
                    threshold: num(2)?,
                    polarity: polarity(1)?,
                }))
            }
            _ => Err(bad("unknown hypothesis kind")),
        }
    }
}

/// Base learning algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Learner {
    #[default]
    Stump,
    Lda,
}

impl Learner {
    pub fn train(&self, problem: &BinaryProblem<'_>) -> Result<Hypothesis> {
        match self {
            Learner::Stump => Ok(Hypothesis::Stump(train_stump(problem))),
            Learner::Lda => train_lda(problem).map(Hypothesis::Lda),
        }
    }
}

impl FromStr for Learner {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "stump" | "stumps" => Ok(Learner::Stump),
            "lda" => Ok(Learner::Lda),
            other => Err(Error::InvalidArgument(format!("unknown learner {other:?}"))),
        }
    }
}

impl fmt::Display for Learner {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Learner::Stump => "stump",
            Learner::Lda => "lda",
        })
    }
}

/// Weighted error with weights normalized to sum to one.
pub fn weighted_error(h: &Hypothesis, p: &BinaryProblem<'_>) -> f64 {
    let wrong: f64 = (0..p.len())
        .filter(|&i| h.predict(p.features.row(i)) != p.targets[i])
        .map(|i| p.weights[i])
        .sum();
    wrong / p.total_weight
}

/// Outcome of a one-dimensional threshold search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Cut {
    pub threshold: f64,
    pub polarity: i8,
    /// Unnormalized weighted error.
    pub error: f64,
}

/// Relative margin below which two candidate errors count as tied.
pub(crate) const TIE_TOLERANCE: f64 = 1e-12;

/// Best `x > threshold => polarity` rule along one axis.
///
/// `order` lists example indices sorted by `value`. Candidates are visited
/// in ascending threshold order (below the minimum, every midpoint between
/// distinct values, above the maximum), polarity +1 before -1, and a
/// candidate replaces the incumbent only if it is better by more than the
/// tie tolerance.
pub(crate) fn best_cut(
    order: &[u32],
    value: impl Fn(usize) -> f64,
    targets: &[i8],
    weights: &[f64],
    total: f64,
    incumbent: Option<Cut>,
) -> (Cut, bool) {
    let tol = TIE_TOLERANCE * total;
    let negative: f64 = order
        .iter()
        .map(|&i| i as usize)
        .filter(|&i| targets[i] < 0)
        .map(|i| weights[i])
        .sum();
    let lo = value(order[0] as usize);
    let hi = value(order[order.len() - 1] as usize);

    let mut best = incumbent;
    let mut improved = false;
    let mut consider = |threshold: f64, err_plus: f64| {
        for (polarity, err) in [(1i8, err_plus), (-1i8, total - err_plus)] {
            if best.is_none_or(|b| err < b.error - tol) {
                best = Some(Cut {
                    threshold,
                    polarity,
                    error: err.max(0.0),
                });
                improved = true;
            }
        }
    };

    // Everything to the right of the threshold is predicted +1 under polarity +1.
    let mut err_plus = negative;
    consider(lo - 1.0, err_plus);
    for k in 0..order.len() {
        let i = order[k] as usize;
        if targets[i] > 0 {
            err_plus += weights[i];
        } else {
            err_plus -= weights[i];
        }
        let here = value(i);
        if let Some(&next) = order.get(k + 1) {
            let next = value(next as usize);
            if next > here {
                let mid = here + (next - here) / 2.0;
                consider(if mid < next { mid } else { here }, err_plus);
            }
        }
    }
    consider(hi + 1.0, err_plus);
    (best.expect("at least one candidate"), improved)
}
