//! Choosing the l1 budget of the totally-corrective boosters.

use multiboost::data::{kfold_indices, Dataset};
use multiboost::evaluate::multiclass_error;
use multiboost::{Error, Result};

use crate::config::Booster;
use crate::runner::{run_booster, RunOptions};

/// Sum of stage-wise coefficients; falls back to 1 when the sum is not positive.
pub fn select_theta_sum(weights: &[f64]) -> f64 {
    let theta: f64 = weights.iter().sum();
    if theta > 0.0 && theta.is_finite() {
        theta
    } else {
        log::warn!("stage-wise coefficients sum to {theta}; using theta = 1");
        1.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub theta: f64,
    /// Mean validation error of each grid value, in grid order.
    pub mean_errors: Vec<f64>,
    /// Code columns of every candidate's run on the first fold.
    pub columns: Vec<Vec<Vec<i8>>>,
}

/// Index of the lowest error; equal errors go to the smaller theta.
pub fn pick_theta(grid: &[f64], errors: &[f64]) -> Option<usize> {
    (0..grid.len().min(errors.len())).min_by(|&a, &b| {
        errors[a]
            .total_cmp(&errors[b])
            .then(grid[a].total_cmp(&grid[b]))
    })
}

/// k-fold cross-validation over `grid`. Every candidate replays the same
/// column-stream seed, so ECC runs see identical code columns.
pub fn select_theta_cv(
    train: &Dataset,
    booster: Booster,
    opts: &RunOptions<'_>,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<CvReport> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("theta grid is empty".into()));
    }
    if booster.is_stagewise() {
        return Err(Error::InvalidArgument(format!("{booster} has no theta to select")));
    }
    let parts = kfold_indices(train, folds, seed)?;
    let mut totals = vec![0.0; grid.len()];
    let mut columns = vec![Vec::new(); grid.len()];
    for (f, held) in parts.iter().enumerate() {
        let fit: Vec<usize> = (0..train.len()).filter(|i| held.binary_search(i).is_err()).collect();
        let (fit, held) = (train.subset(&fit), train.subset(held));
        for (k, &theta) in grid.iter().enumerate() {
            let run = run_booster(&fit, None, booster, &RunOptions { theta: Some(theta), ..opts.clone() })?;
            totals[k] += multiclass_error(&run.ensemble, &held)?;
            if f == 0 {
                let code = run.ensemble.coding();
                columns[k] = (0..code.len()).map(|j| code.column(j)).collect();
            }
        }
    }
    let mean_errors: Vec<f64> = totals.iter().map(|t| t / parts.len() as f64).collect();
    let best = pick_theta(grid, &mean_errors).expect("grid is non-empty");
    log::debug!("{booster}: cv errors {mean_errors:?}, theta {}", grid[best]);
    Ok(CvReport {
        theta: grid[best],
        mean_errors,
        columns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_coefficients() {
        assert!((select_theta_sum(&[0.5, 0.3]) - 0.8).abs() < 1e-15);
        assert_eq!(select_theta_sum(&[0.0, 0.0]), 1.0);
        assert_eq!(select_theta_sum(&[]), 1.0);
    }

    #[test]
    fn ties_go_to_the_smaller_theta() {
        assert_eq!(pick_theta(&[5.0, 2.0, 8.0], &[0.1, 0.1, 0.3]), Some(1));
        assert_eq!(pick_theta(&[5.0, 2.0, 8.0], &[0.1, 0.2, 0.05]), Some(2));
        assert_eq!(pick_theta(&[3.0], &[0.4]), Some(0));
    }
}
