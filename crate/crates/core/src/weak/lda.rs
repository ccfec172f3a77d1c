use nalgebra::{DMatrix, DVector};

use super::{best_cut, BinaryProblem};
use crate::error::{Error, Result};

/// Fisher discriminant: `polarity * sign(direction . x - threshold)`, with sign(0) = +1.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaHypothesis {
    pub direction: Vec<f64>,
    pub threshold: f64,
    pub polarity: i8,
}

impl LdaHypothesis {
    pub fn project(&self, x: &[f64]) -> f64 {
        self.direction.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    #[inline]
    pub fn predict(&self, x: &[f64]) -> i8 {
        if self.project(x) - self.threshold >= 0.0 {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

const RIDGE_SCALE: f64 = 1e-6;

/// Weighted Fisher discriminant with a ridge of `1e-6 * trace(S_w) / D`,
/// thresholded at the error-minimizing cut along the projection.
pub fn train_lda(p: &BinaryProblem<'_>) -> Result<LdaHypothesis> {
    let features = p.features();
    let (n, d) = (features.rows(), features.cols());
    let total = p.total_weight();
    let weights: Vec<f64> = p.weights().iter().map(|w| w / total).collect();
    let targets = p.targets();

    let mut mass = [0.0f64; 2];
    let mut means = [DVector::<f64>::zeros(d), DVector::<f64>::zeros(d)];
    for i in 0..n {
        let side = usize::from(targets[i] > 0);
        mass[side] += weights[i];
        means[side] += DVector::from_row_slice(features.row(i)) * weights[i];
    }
    if !(mass[0] > 0.0 && mass[1] > 0.0) {
        return Err(Error::Learner(
            "discriminant needs positive weight on both targets".into(),
        ));
    }
    means[0] /= mass[0];
    means[1] /= mass[1];

    let mut scatter = DMatrix::<f64>::zeros(d, d);
    for i in 0..n {
        let side = usize::from(targets[i] > 0);
        let centered = DVector::from_row_slice(features.row(i)) - &means[side];
        scatter.ger(weights[i], &centered, &centered, 1.0);
    }
    let trace = scatter.trace();
    let mut ridge = if trace > 0.0 {
        RIDGE_SCALE * trace / d as f64
    } else {
        RIDGE_SCALE
    };
    let gap = &means[1] - &means[0];
    let direction = loop {
        let mut regularized = scatter.clone();
        for k in 0..d {
            regularized[(k, k)] += ridge;
        }
        if let Some(chol) = regularized.cholesky() {
            break chol.solve(&gap);
        }
        ridge *= 10.0;
        if !ridge.is_finite() {
            return Err(Error::Learner("within-class scatter is not invertible".into()));
        }
    };
    let direction: Vec<f64> = direction.iter().copied().collect();
    if direction.iter().any(|v| !v.is_finite()) {
        return Err(Error::Learner("non-finite discriminant direction".into()));
    }

    let projected: Vec<f64> = (0..n)
        .map(|i| direction.iter().zip(features.row(i)).map(|(a, b)| a * b).sum())
        .collect();
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by(|&a, &b| projected[a as usize].total_cmp(&projected[b as usize]));
    let (cut, _) = best_cut(&order, |i| projected[i], targets, p.weights(), total, None);
    Ok(LdaHypothesis {
        direction,
        threshold: cut.threshold,
        polarity: cut.polarity,
    })
}
