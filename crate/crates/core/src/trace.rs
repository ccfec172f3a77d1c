//! Per-round records and their CSV forms.

use std::fmt::Write as _;

/// One completed boosting round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    /// 1-based round number.
    pub iteration: usize,
    pub train_err: f64,
    /// `None` when no evaluation set was supplied.
    pub test_err: Option<f64>,
    /// Weighted error of the round's hypothesis (pooled over code positions).
    pub epsilon: f64,
    /// Coefficient of the round's hypothesis right after the round.
    pub omega: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoostTrace {
    pub rows: Vec<TraceRow>,
}

impl BoostTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.epsilon).collect()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.omega).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,train_err,test_err,epsilon,omega\n");
        for r in &self.rows {
            let test = r.test_err.map(|e| e.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                r.iteration, r.train_err, test, r.epsilon, r.omega
            );
        }
        out
    }
}

/// Master-problem state after one column-generation round.
///
/// `score`, `r`, `primal`, `dual` and `gap` are divided by `exp(log_scale)`;
/// `log_scale` is 0 for the hinge master.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualRow {
    pub round: usize,
    /// Oracle score `u . rho` of the column added this round, under the previous duals.
    pub score: f64,
    pub r: f64,
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub log_scale: f64,
}

impl DualRow {
    /// Primal value in original units (may overflow to infinity).
    pub fn true_primal(&self) -> f64 {
        self.primal * self.log_scale.exp()
    }

    pub fn log_primal(&self) -> f64 {
        self.log_scale + self.primal.ln()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DualTrace {
    pub rows: Vec<DualRow>,
}

impl DualTrace {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Primal values in original units.
    pub fn primals(&self) -> Vec<f64> {
        self.rows.iter().map(DualRow::true_primal).collect()
    }

    pub fn log_primals(&self) -> Vec<f64> {
        self.rows.iter().map(DualRow::log_primal).collect()
    }

    /// Rounds `t` (1-based) whose primal value exceeds round `t - 1`'s by more
    /// than `tol`; compared in log space when the values are not representable.
    pub fn primal_increases(&self, tol: f64) -> Vec<usize> {
        self.rows
            .windows(2)
            .filter(|w| {
                let (a, b) = (w[0].true_primal(), w[1].true_primal());
                if a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0 {
                    b > a + tol
                } else {
                    w[1].log_primal() > w[0].log_primal() + tol
                }
            })
            .map(|w| w[1].round)
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,score,r,primal,dual,gap,log_scale\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.round, r.score, r.r, r.primal, r.dual, r.gap, r.log_scale
            );
        }
        out
    }
}

/// `round,<name>` CSV of a per-round series, rounds numbered from 1.
pub fn series_csv(name: &str, values: &[f64]) -> String {
    let mut out = format!("round,{name}\n");
    for (t, v) in values.iter().enumerate() {
        let _ = writeln!(out, "{},{v}", t + 1);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boost_trace_csv() {
        let t = BoostTrace {
            rows: vec![
                TraceRow {
                    iteration: 1,
                    train_err: 0.25,
                    test_err: Some(0.5),
                    epsilon: 0.125,
                    omega: 0.75,
                },
                TraceRow {
                    iteration: 2,
                    train_err: 0.0,
                    test_err: None,
                    epsilon: 0.5,
                    omega: 0.0,
                },
            ],
        };
        assert_eq!(
            t.to_csv(),
            "iteration,train_err,test_err,epsilon,omega\n1,0.25,0.5,0.125,0.75\n2,0,,0.5,0\n"
        );
    }

    #[test]
    fn dual_trace_csv() {
        let t = DualTrace {
            rows: vec![DualRow {
                round: 1,
                score: 2.0,
                r: 1.5,
                primal: 3.0,
                dual: 3.0,
                gap: 0.0,
                log_scale: 0.0,
            }],
        };
        assert_eq!(t.to_csv(), "round,score,r,primal,dual,gap,log_scale\n1,2,1.5,3,3,0,0\n");
    }

    #[test]
    fn primal_increases_in_either_scale() {
        let row = |round, primal: f64, log_scale| DualRow {
            round,
            score: 0.0,
            r: 0.0,
            primal,
            dual: 0.0,
            gap: 0.0,
            log_scale,
        };
        let t = DualTrace {
            rows: vec![row(1, 2.0, 0.0), row(2, 1.0, 0.5), row(3, 1.0, 800.0), row(4, 1.0, 799.0), row(5, 2.0, 799.0)],
        };
        // 2 -> e^0.5 falls; e^800 and e^799 overflow and are compared as logs
        assert_eq!(t.primal_increases(1e-9), vec![3, 5]);
        assert_eq!(series_csv("m", &[0.5, -1.0]), "round,m\n1,0.5\n2,-1\n");
    }
}
