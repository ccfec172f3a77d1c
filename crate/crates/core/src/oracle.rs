//! Weighted binary subproblems shared by the stage-wise and corrective boosters.

use rayon::prelude::*;

use crate::coding::CodingMatrix;
use crate::data::Dataset;
use crate::error::Result;
use crate::weak::{BinaryProblem, Hypothesis, Learner};

/// Targets `M(y_i, column)` for every example.
pub(crate) fn code_targets(code: &[i8], labels: &[usize]) -> Vec<i8> {
    labels.iter().map(|&y| code[y]).collect()
}

/// Trains one hypothesis per code position; `weights[l]` holds the example
/// weights of position `l`. A position whose weights are all zero carries no
/// dual mass, so any hypothesis is optimal there; it is trained on uniform
/// weights to keep the output well defined.
pub(crate) fn fit_positions(
    train: &Dataset,
    coding: &CodingMatrix,
    learner: Learner,
    weights: &[Vec<f64>],
) -> Result<Vec<Hypothesis>> {
    (0..coding.len())
        .into_par_iter()
        .map(|l| {
            let targets = code_targets(&coding.column(l), train.labels());
            let w = &weights[l];
            if w.iter().all(|&v| v == 0.0) {
                let uniform = vec![1.0; w.len()];
                learner.train(&BinaryProblem::new(train.features(), &targets, &uniform)?)
            } else {
                learner.train(&BinaryProblem::new(train.features(), &targets, w)?)
            }
        })
        .collect()
}

/// Splits row-major `(i, l)` weights into one weight vector per position.
pub(crate) fn position_weights(u: &[f64], n: usize, len: usize) -> Vec<Vec<f64>> {
    (0..len)
        .map(|l| (0..n).map(|i| u[i * len + l]).collect())
        .collect()
}

/// `predictions[l][i]`.
pub(crate) fn predict_positions(hypotheses: &[Hypothesis], d: &Dataset) -> Vec<Vec<i8>> {
    hypotheses.iter().map(|h| h.predict_all(d.features())).collect()
}

/// Per-example mislabel mass `d_i = sum_{c != y_i} u_{i,c} [M(c) != M(y_i)]`
/// over mismatch rows `(i, c)`, c ascending.
pub(crate) fn mismatch_weights(u: &[f64], code: &[i8], labels: &[usize]) -> Vec<f64> {
    let classes = code.len();
    let mut d = Vec::with_capacity(labels.len());
    let mut k = 0;
    for &y in labels {
        let mut s = 0.0;
        for (c, &bit) in code.iter().enumerate() {
            if c == y {
                continue;
            }
            if bit != code[y] {
                s += u[k];
            }
            k += 1;
        }
        d.push(s);
    }
    debug_assert_eq!(k, labels.len() * (classes - 1));
    d
}

/// Per-position mislabel mass for a fixed code:
/// `d_{i,l} = sum_{c != y_i} u_{i,c} [M(c, l) != M(y_i, l)]`.
pub(crate) fn hinge_position_weights(u: &[f64], coding: &CodingMatrix, labels: &[usize]) -> Vec<Vec<f64>> {
    (0..coding.len())
        .map(|l| mismatch_weights(u, &coding.column(l), labels))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mismatch_weights_skip_agreeing_classes() {
        // two examples, three classes; rows (0,1),(0,2),(1,0),(1,2)
        let u = [0.1, 0.2, 0.3, 0.4];
        let d = mismatch_weights(&u, &[1, -1, 1], &[0, 1]);
        assert_eq!(d, vec![0.1, 0.3 + 0.4]);
    }

    #[test]
    fn position_weights_transpose() {
        let u = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        assert_eq!(
            position_weights(&u, 2, 3),
            vec![vec![1.0, 4.0], vec![2.0, 5.0], vec![3.0, 6.0]]
        );
    }
}
