//! Margin matrices: one row per constraint (example/code-position pairs for
//! the output-code family, example/wrong-class pairs for the mismatch
//! families), one column per boosting round.

use crate::coding::CodingMatrix;
use crate::error::{Error, Result};

/// The three boosting families sharing the column-generation loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Fixed code, one hypothesis per code position, exponential loss.
    Mo,
    /// One fresh random code column per round, exponential loss over mislabels.
    Ecc,
    /// Fixed code, one hypothesis per code position, hinge loss over mislabels.
    Hinge,
}

impl Variant {
    /// Number of constraint rows for `n` examples.
    pub fn row_count(&self, n: usize, classes: usize, code_len: usize) -> usize {
        match self {
            Variant::Mo => n * code_len,
            Variant::Ecc | Variant::Hinge => n * (classes - 1),
        }
    }

    /// Whether rounds consist of one hypothesis per column of a fixed code.
    pub fn uses_fixed_code(&self) -> bool {
        matches!(self, Variant::Mo | Variant::Hinge)
    }
}

/// Column-major `K x t` matrix of per-round margins.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarginMatrix {
    rows: usize,
    columns: Vec<Vec<f64>>,
}

impl MarginMatrix {
    pub fn new(rows: usize) -> Self {
        MarginMatrix {
            rows,
            columns: Vec::new(),
        }
    }

    pub fn from_columns(rows: usize, columns: Vec<Vec<f64>>) -> Result<Self> {
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch(format!(
                "margin columns must have {rows} rows"
            )));
        }
        Ok(MarginMatrix { rows, columns })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn push(&mut self, column: Vec<f64>) -> Result<()> {
        if column.len() != self.rows {
            return Err(Error::DimensionMismatch(format!(
                "margin column has {} rows, expected {}",
                column.len(),
                self.rows
            )));
        }
        self.columns.push(column);
        Ok(())
    }

    /// `P w` for the first `w.len()` columns.
    pub fn apply(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (col, &wj) in self.columns.iter().zip(w) {
            if wj != 0.0 {
                for (o, &p) in out.iter_mut().zip(col) {
                    *o += wj * p;
                }
            }
        }
        out
    }

    /// `u . rho_j`.
    pub fn correlation(&self, u: &[f64], j: usize) -> f64 {
        dot(u, &self.columns[j])
    }

    /// `P^T u`.
    pub fn correlations(&self, u: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|c| dot(u, c)).collect()
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Margins of a fixed-code round: row `(i, l)` holds `M(y_i, l) h_l(x_i)`.
///
/// `predictions[l][i]` is the output of the position-`l` hypothesis on example `i`.
pub fn output_code_column(
    coding: &CodingMatrix,
    labels: &[usize],
    predictions: &[Vec<i8>],
) -> Result<Vec<f64>> {
    check_output_shape(coding, labels, predictions)?;
    let mut col = Vec::with_capacity(labels.len() * coding.len());
    for (i, &y) in labels.iter().enumerate() {
        for (l, preds) in predictions.iter().enumerate() {
            col.push(f64::from(coding.get(y, l) * preds[i]));
        }
    }
    Ok(col)
}

/// Margins of a single-column round: row `(i, c)`, `c != y_i`, holds
/// `(M(y_i) - M(c)) h(x_i)`, one of {-2, 0, +2}.
pub fn mismatch_column(code: &[i8], labels: &[usize], predictions: &[i8]) -> Result<Vec<f64>> {
    if predictions.len() != labels.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} predictions for {} examples",
            predictions.len(),
            labels.len()
        )));
    }
    let classes = code.len();
    let mut col = Vec::with_capacity(labels.len() * (classes - 1));
    for (i, &y) in labels.iter().enumerate() {
        for (c, &bit) in code.iter().enumerate() {
            if c != y {
                col.push(f64::from((code[y] - bit) * predictions[i]));
            }
        }
    }
    Ok(col)
}

/// Margins of a fixed-code round under the hinge family: row `(i, c)`,
/// `c != y_i`, holds `(M(y_i, :) - M(c, :)) . h(x_i)`.
pub fn hinge_column(
    coding: &CodingMatrix,
    labels: &[usize],
    predictions: &[Vec<i8>],
) -> Result<Vec<f64>> {
    check_output_shape(coding, labels, predictions)?;
    let classes = coding.classes();
    let mut col = Vec::with_capacity(labels.len() * (classes - 1));
    for (i, &y) in labels.iter().enumerate() {
        for c in (0..classes).filter(|&c| c != y) {
            let s: i32 = predictions
                .iter()
                .enumerate()
                .map(|(l, p)| i32::from(coding.get(y, l) - coding.get(c, l)) * i32::from(p[i]))
                .sum();
            col.push(f64::from(s));
        }
    }
    Ok(col)
}

fn check_output_shape(coding: &CodingMatrix, labels: &[usize], predictions: &[Vec<i8>]) -> Result<()> {
    if predictions.len() != coding.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} hypotheses for a code of length {}",
            predictions.len(),
            coding.len()
        )));
    }
    if predictions.iter().any(|p| p.len() != labels.len()) {
        return Err(Error::DimensionMismatch(
            "prediction vectors must cover every example".into(),
        ));
    }
    Ok(())
}
