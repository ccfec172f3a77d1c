//! Restricted master problem of the hinge-loss booster:
//!
//! ```text
//! min  sum_i xi_i
//! s.t. sum_j rho_{(i,c),j} w_j + xi_i >= 1   for every c != y_i
//!      sum_j w_j = theta,  w >= 0,  xi >= 0
//! ```
//!
//! Its dual is `max sum u - r theta` subject to `u . rho_j <= r` and
//! `sum_{c != y_i} u_{i,c} <= 1`; the leftover `u_{i,y_i} = 1 - sum_{c != y_i} u_{i,c}`
//! completes each example's distribution.

use super::lp::{LinearProgram, Relation};
use super::margin::MarginMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct HingeSolution {
    pub w: Vec<f64>,
    /// One hinge slack per example.
    pub slacks: Vec<f64>,
    pub primal_value: f64,
    /// Dual weight of every mismatch row `(i, c)`, `c != y_i`.
    pub u: Vec<f64>,
    /// `u_{i,y_i}` for every example.
    pub u_true: Vec<f64>,
    pub r: f64,
    pub dual_value: f64,
    pub gap: f64,
}

/// `sum u - r theta`, which equals `N - (r theta + sum_i u_{i,y_i})`.
pub fn hinge_dual_objective(u: &[f64], r: f64, theta: f64) -> f64 {
    u.iter().sum::<f64>() - r * theta
}

/// Exact LP optimum for mismatch rows grouped `classes - 1` per example.
pub fn solve_master_hinge(p: &MarginMatrix, classes: usize, theta: f64) -> Result<HingeSolution> {
    let t = p.cols();
    if t == 0 {
        return Err(Error::InvalidArgument("master problem has no columns".into()));
    }
    if classes < 2 {
        return Err(Error::TooFewClasses(classes));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    let per = classes - 1;
    if !p.rows().is_multiple_of(per) {
        return Err(Error::DimensionMismatch(format!(
            "{} rows do not split into groups of {per}",
            p.rows()
        )));
    }
    let n = p.rows() / per;

    let mut objective = vec![0.0; t + n];
    objective[t..].iter_mut().for_each(|c| *c = 1.0);
    let mut lp = LinearProgram::new(objective);
    let mut budget = vec![0.0; t + n];
    budget[..t].iter_mut().for_each(|c| *c = 1.0);
    lp.add_row(budget, Relation::Eq, theta)?;
    for k in 0..p.rows() {
        let mut row = vec![0.0; t + n];
        for (j, r) in row.iter_mut().take(t).enumerate() {
            *r = p.column(j)[k];
        }
        row[t + k / per] = 1.0;
        lp.add_row(row, Relation::Ge, 1.0)?;
    }
    let sol = lp.solve()?;

    let mut w: Vec<f64> = sol.x[..t].to_vec();
    let sum: f64 = w.iter().sum();
    if sum > 0.0 {
        w.iter_mut().for_each(|v| *v *= theta / sum);
    }
    let margins = p.apply(&w);
    let slacks: Vec<f64> = (0..n)
        .map(|i| {
            margins[i * per..(i + 1) * per]
                .iter()
                .map(|m| 1.0 - m)
                .fold(0.0, f64::max)
        })
        .collect();
    let primal_value: f64 = slacks.iter().sum();

    let u: Vec<f64> = sol.duals[1..].iter().map(|&y| y.max(0.0)).collect();
    let r = -sol.duals[0];
    let u_true: Vec<f64> = u.chunks(per).map(|c| 1.0 - c.iter().sum::<f64>()).collect();
    let dual_value = hinge_dual_objective(&u, r, theta);
    let gap = primal_value - dual_value;
    if gap.abs() > 1e-8 * (1.0 + primal_value.abs()) {
        return Err(Error::LinearProgram(format!(
            "primal {primal_value} and dual {dual_value} disagree"
        )));
    }
    Ok(HingeSolution {
        w,
        slacks,
        primal_value,
        u,
        u_true,
        r,
        dual_value,
        gap: gap.max(0.0),
    })
}
