//! Weighted ensembles of binary hypotheses decoded through a coding matrix.

use std::fmt;
use std::str::FromStr;

use crate::coding::CodingMatrix;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::weak::Hypothesis;

/// How rounds relate to the coding matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleKind {
    /// Fixed code; every round holds one hypothesis per code position.
    Mo,
    /// Code grows by one column per round; every round holds one hypothesis.
    Ecc,
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EnsembleKind::Mo => "mo",
            EnsembleKind::Ecc => "ecc",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    kind: EnsembleKind,
    coding: CodingMatrix,
    rounds: Vec<Vec<Hypothesis>>,
    weights: Vec<f64>,
    label_codes: Vec<i64>,
}

impl Ensemble {
    /// Empty fixed-code ensemble.
    pub fn new_mo(coding: CodingMatrix, label_codes: Vec<i64>) -> Result<Self> {
        if coding.is_empty() {
            return Err(Error::InvalidArgument("fixed code has no columns".into()));
        }
        Self::check_codes(coding.classes(), &label_codes)?;
        Ok(Ensemble {
            kind: EnsembleKind::Mo,
            coding,
            rounds: Vec::new(),
            weights: Vec::new(),
            label_codes,
        })
    }

    /// Empty growing-code ensemble.
    pub fn new_ecc(classes: usize, label_codes: Vec<i64>) -> Result<Self> {
        Self::check_codes(classes, &label_codes)?;
        Ok(Ensemble {
            kind: EnsembleKind::Ecc,
            coding: CodingMatrix::empty(classes),
            rounds: Vec::new(),
            weights: Vec::new(),
            label_codes,
        })
    }

    fn check_codes(classes: usize, codes: &[i64]) -> Result<()> {
        if classes < 2 {
            return Err(Error::TooFewClasses(classes));
        }
        if codes.len() != classes {
            return Err(Error::DimensionMismatch(format!(
                "{} label codes for {classes} classes",
                codes.len()
            )));
        }
        Ok(())
    }

    pub fn kind(&self) -> EnsembleKind {
        self.kind
    }

    pub fn coding(&self) -> &CodingMatrix {
        &self.coding
    }

    pub fn classes(&self) -> usize {
        self.coding.classes()
    }

    pub fn label_codes(&self) -> &[i64] {
        &self.label_codes
    }

    pub fn rounds(&self) -> &[Vec<Hypothesis>] {
        &self.rounds
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Appends a fixed-code round.
    pub fn push_output_round(&mut self, hypotheses: Vec<Hypothesis>, weight: f64) -> Result<()> {
        if self.kind != EnsembleKind::Mo {
            return Err(Error::InvalidArgument("ensemble grows its code per round".into()));
        }
        if hypotheses.len() != self.coding.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} hypotheses for a code of length {}",
                hypotheses.len(),
                self.coding.len()
            )));
        }
        Self::check_weight(weight)?;
        self.rounds.push(hypotheses);
        self.weights.push(weight);
        Ok(())
    }

    /// Appends a round together with its code column.
    pub fn push_column_round(&mut self, code: &[i8], hypothesis: Hypothesis, weight: f64) -> Result<()> {
        if self.kind != EnsembleKind::Ecc {
            return Err(Error::InvalidArgument("ensemble has a fixed code".into()));
        }
        Self::check_weight(weight)?;
        self.coding.push_column(code)?;
        self.rounds.push(vec![hypothesis]);
        self.weights.push(weight);
        Ok(())
    }

    fn check_weight(w: f64) -> Result<()> {
        if !(w.is_finite() && w >= 0.0) {
            return Err(Error::InvalidArgument(format!("round weight {w} is not a nonnegative number")));
        }
        Ok(())
    }

    /// Replaces every coefficient (used after a corrective re-solve).
    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.rounds.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} rounds",
                weights.len(),
                self.rounds.len()
            )));
        }
        for &w in weights {
            Self::check_weight(w)?;
        }
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    /// The first `t` rounds.
    pub fn truncated(&self, t: usize) -> Ensemble {
        let t = t.min(self.len());
        Ensemble {
            kind: self.kind,
            coding: match self.kind {
                EnsembleKind::Mo => self.coding.clone(),
                EnsembleKind::Ecc => self.coding.truncated(t),
            },
            rounds: self.rounds[..t].to_vec(),
            weights: self.weights[..t].to_vec(),
            label_codes: self.label_codes.clone(),
        }
    }

    /// Unweighted per-class votes of round `j`: `M(c, :) . h(x)` (fixed code)
    /// or `M(c, j) h(x)` (growing code), added into `out`.
    pub fn add_round_votes(&self, j: usize, x: &[f64], out: &mut [i32]) {
        match self.kind {
            EnsembleKind::Mo => {
                for (l, h) in self.rounds[j].iter().enumerate() {
                    let p = i32::from(h.predict(x));
                    for (c, o) in out.iter_mut().enumerate() {
                        *o += i32::from(self.coding.get(c, l)) * p;
                    }
                }
            }
            EnsembleKind::Ecc => {
                let p = i32::from(self.rounds[j][0].predict(x));
                for (c, o) in out.iter_mut().enumerate() {
                    *o += i32::from(self.coding.get(c, j)) * p;
                }
            }
        }
    }

    /// Aggregate class scores `sum_j w_j votes_j(c)`, accumulated in round order.
    pub fn class_scores(&self, x: &[f64]) -> Vec<f64> {
        let classes = self.classes();
        let mut scores = vec![0.0; classes];
        let mut votes = vec![0i32; classes];
        for (j, &w) in self.weights.iter().enumerate() {
            votes.iter_mut().for_each(|v| *v = 0);
            self.add_round_votes(j, x, &mut votes);
            for (s, &v) in scores.iter_mut().zip(&votes) {
                *s += w * f64::from(v);
            }
        }
        scores
    }

    /// Weighted code-position outputs `f_l(x) = sum_j w_j h_l^(j)(x)` of a fixed-code ensemble.
    pub fn position_outputs(&self, x: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.rounds.first().map_or(0, Vec::len)];
        for (round, &w) in self.rounds.iter().zip(&self.weights) {
            for (fl, h) in f.iter_mut().zip(round) {
                *fl += w * f64::from(h.predict(x));
            }
        }
        f
    }

    /// Checks that the ensemble can read examples of `d`.
    pub fn check_compatible(&self, d: &Dataset) -> Result<()> {
        if d.num_classes() != self.classes() {
            return Err(Error::DimensionMismatch(format!(
                "ensemble has {} classes, data has {}",
                self.classes(),
                d.num_classes()
            )));
        }
        let need = self
            .rounds
            .iter()
            .flatten()
            .map(Hypothesis::input_dim)
            .max()
            .unwrap_or(0);
        if need > d.dim() {
            return Err(Error::DimensionMismatch(format!(
                "ensemble reads {need} attributes, data has {}",
                d.dim()
            )));
        }
        Ok(())
    }
}

/// Index of the largest score; ties go to the smallest index.
pub fn argmax_class(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Integer votes of every round on every example, cached so that error
/// curves under changing coefficients cost no hypothesis evaluations.
#[derive(Debug, Clone, Default)]
pub struct VoteCache {
    classes: usize,
    examples: usize,
    rounds: Vec<Vec<i32>>,
}

impl VoteCache {
    pub fn new(examples: usize, classes: usize) -> Self {
        VoteCache {
            classes,
            examples,
            rounds: Vec::new(),
        }
    }

    /// Caches the votes of the ensemble's round `j` on `d`.
    pub fn push_round(&mut self, ensemble: &Ensemble, j: usize, d: &Dataset) {
        let mut votes = vec![0i32; self.examples * self.classes];
        for (i, chunk) in votes.chunks_mut(self.classes).enumerate() {
            ensemble.add_round_votes(j, d.features().row(i), chunk);
        }
        self.rounds.push(votes);
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Class scores of all examples under coefficients `w` (first `w.len()` rounds).
    pub fn scores(&self, w: &[f64]) -> Vec<f64> {
        let mut scores = vec![0.0; self.examples * self.classes];
        for (votes, &wj) in self.rounds.iter().zip(w) {
            accumulate(&mut scores, votes, wj);
        }
        scores
    }

    /// Decoding error of `w` against `labels`.
    pub fn error(&self, w: &[f64], labels: &[usize]) -> f64 {
        scores_error(&self.scores(w), self.classes, labels)
    }

    /// Running scores of a growing ensemble whose existing coefficients never change.
    pub fn accumulate_last(&self, scores: &mut [f64], w: f64) {
        if let Some(votes) = self.rounds.last() {
            accumulate(scores, votes, w);
        }
    }
}

fn accumulate(scores: &mut [f64], votes: &[i32], w: f64) {
    for (s, &v) in scores.iter_mut().zip(votes) {
        *s += w * f64::from(v);
    }
}

/// Fraction of examples whose argmax class differs from the label.
pub fn scores_error(scores: &[f64], classes: usize, labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let wrong = scores
        .chunks(classes)
        .zip(labels)
        .filter(|(s, &y)| argmax_class(s) != y)
        .count();
    wrong as f64 / labels.len() as f64
}

impl fmt::Display for Ensemble {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ensemble {}", self.kind)?;
        write!(f, "labels")?;
        for c in &self.label_codes {
            write!(f, " {c}")?;
        }
        writeln!(f)?;
        writeln!(f, "code {} {}", self.coding.classes(), self.coding.len())?;
        for c in 0..self.coding.classes() {
            let row: Vec<String> = self.coding.row(c).iter().map(i8::to_string).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        writeln!(f, "rounds {}", self.rounds.len())?;
        for (round, w) in self.rounds.iter().zip(&self.weights) {
            writeln!(f, "weight {w}")?;
            for h in round {
                writeln!(f, "{h}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Ensemble {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next = |what: &str| {
            lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                message: format!("ensemble text ends before {what}"),
            })
        };
        let parse_err = |line: usize, message: String| Error::Parse { line, message };

        let (ln, head) = next("header")?;
        let kind = match head {
            "ensemble mo" => EnsembleKind::Mo,
            "ensemble ecc" => EnsembleKind::Ecc,
            other => return Err(parse_err(ln, format!("unknown ensemble header {other:?}"))),
        };

        let (ln, labels) = next("labels")?;
        let label_codes = labels
            .strip_prefix("labels")
            .ok_or_else(|| parse_err(ln, "expected labels".into()))?
            .split_whitespace()
            .map(|t| t.parse::<i64>().map_err(|_| parse_err(ln, format!("bad label {t:?}"))))
            .collect::<Result<Vec<_>>>()?;

        let (ln, code_head) = next("code")?;
        let dims: Vec<usize> = code_head
            .strip_prefix("code")
            .ok_or_else(|| parse_err(ln, "expected code".into()))?
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| parse_err(ln, format!("bad size {t:?}"))))
            .collect::<Result<Vec<_>>>()?;
        let [classes, len] = dims[..] else {
            return Err(parse_err(ln, "code needs class count and length".into()));
        };
        let mut entries = Vec::with_capacity(classes * len);
        for _ in 0..classes {
            let (ln, row) = next("code row")?;
            let vals = row
                .split_whitespace()
                .map(|t| match t {
                    "1" | "+1" => Ok(1i8),
                    "-1" => Ok(-1),
                    _ => Err(parse_err(ln, format!("bad code entry {t:?}"))),
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != len {
                return Err(parse_err(ln, format!("code row has {} entries, expected {len}", vals.len())));
            }
            entries.extend(vals);
        }
        let coding = CodingMatrix::new(classes, len, entries)?;

        let (ln, rounds_head) = next("rounds")?;
        let count: usize = rounds_head
            .strip_prefix("rounds")
            .and_then(|t| t.trim().parse().ok())
            .ok_or_else(|| parse_err(ln, "expected round count".into()))?;
        let per_round = match kind {
            EnsembleKind::Mo => len,
            EnsembleKind::Ecc => 1,
        };
        if kind == EnsembleKind::Ecc && count != len {
            return Err(parse_err(ln, format!("{count} rounds for {len} code columns")));
        }

        let mut ensemble = match kind {
            EnsembleKind::Mo => Ensemble::new_mo(coding.clone(), label_codes)?,
            EnsembleKind::Ecc => Ensemble::new_ecc(classes, label_codes)?,
        };
        for j in 0..count {
            let (ln, wline) = next("weight")?;
            let w: f64 = wline
                .strip_prefix("weight")
                .and_then(|t| t.trim().parse().ok())
                .ok_or_else(|| parse_err(ln, "expected weight".into()))?;
            let mut hyps = Vec::with_capacity(per_round);
            for _ in 0..per_round {
                let (ln, h) = next("hypothesis")?;
                hyps.push(h.parse::<Hypothesis>().map_err(|e| match e {
                    Error::Parse { message, .. } => parse_err(ln, message),
                    other => other,
                })?);
            }
            match kind {
                EnsembleKind::Mo => ensemble.push_output_round(hyps, w)?,
                EnsembleKind::Ecc => {
                    let h = hyps.pop().expect("one hypothesis");
                    ensemble.push_column_round(&coding.column(j), h, w)?
                }
            }
        }
        if let Some((ln, extra)) = lines.next() {
            return Err(parse_err(ln, format!("trailing content {extra:?}")));
        }
        Ok(ensemble)
    }
}
