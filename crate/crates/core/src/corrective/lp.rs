//! Dense two-phase tableau simplex for small linear programs.
//!
//! Minimizes `c . x` over `x >= 0` subject to linear rows. Entering columns
//! follow the most negative reduced cost; after a run of degenerate pivots
//! the solver switches to Bland's smallest-index rule, which cannot cycle.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, Relation, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// One multiplier per row with `objective = sum_i rhs_i y_i`:
    /// `y_i >= 0` for `Ge` rows, `y_i <= 0` for `Le` rows, free for `Eq` rows.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

const PIVOT_TOL: f64 = 1e-11;
const DEGENERATE_RUN: usize = 50;

impl LinearProgram {
    pub fn new(objective: Vec<f64>) -> Self {
        LinearProgram {
            objective,
            rows: Vec::new(),
        }
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<()> {
        if coeffs.len() != self.vars() {
            return Err(Error::DimensionMismatch(format!(
                "row has {} coefficients for {} variables",
                coeffs.len(),
                self.vars()
            )));
        }
        if coeffs.iter().chain([&rhs]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite LP coefficient".into()));
        }
        self.rows.push((coeffs, relation, rhs));
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    m: usize,
    width: usize,
    /// Row-major `m x (width + 1)`; the last column is the right-hand side.
    a: Vec<f64>,
    basis: Vec<usize>,
    /// Column whose initial coefficient in row `i` is +1 and zero elsewhere.
    unit: Vec<usize>,
    /// Rows multiplied by -1 to make the right-hand side nonnegative.
    flipped: Vec<bool>,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Tableau {
        let n = lp.vars();
        let m = lp.rows.len();
        let mut flipped = Vec::with_capacity(m);
        let mut rels = Vec::with_capacity(m);
        for (_, rel, rhs) in &lp.rows {
            let flip = *rhs < 0.0;
            flipped.push(flip);
            rels.push(match (rel, flip) {
                (Relation::Le, true) => Relation::Ge,
                (Relation::Ge, true) => Relation::Le,
                (r, _) => *r,
            });
        }
        let slacks = rels.iter().filter(|r| **r != Relation::Eq).count();
        let artificials = rels.iter().filter(|r| **r != Relation::Le).count();
        let first_artificial = n + slacks;
        let width = first_artificial + artificials;
        let stride = width + 1;
        let mut a = vec![0.0; m * stride];
        let mut basis = Vec::with_capacity(m);
        let mut unit = Vec::with_capacity(m);
        let (mut next_slack, mut next_art) = (n, first_artificial);
        for (i, (coeffs, _, rhs)) in lp.rows.iter().enumerate() {
            let sign = if flipped[i] { -1.0 } else { 1.0 };
            let row = &mut a[i * stride..(i + 1) * stride];
            for (dst, &c) in row.iter_mut().zip(coeffs) {
                *dst = sign * c;
            }
            row[width] = sign * rhs;
            match rels[i] {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis.push(next_slack);
                    unit.push(next_slack);
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    unit.push(next_art);
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis.push(next_art);
                    unit.push(next_art);
                    next_art += 1;
                }
            }
        }
        Tableau {
            m,
            width,
            a,
            basis,
            unit,
            flipped,
            first_artificial,
            pivots: 0,
        }
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.stride() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width)
    }

    /// Reduced costs `c_j - c_B B^-1 A_j` (and `-c_B B^-1 b` in the last slot).
    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = cost.to_vec();
        z.push(0.0);
        for i in 0..self.m {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.a[i * self.stride()..(i + 1) * self.stride()];
                for (zj, &aij) in z.iter_mut().zip(row) {
                    *zj -= cb * aij;
                }
            }
        }
        z
    }

    fn pivot(&mut self, r: usize, c: usize, z: &mut [f64]) {
        let stride = self.stride();
        let p = self.a[r * stride + c];
        for v in &mut self.a[r * stride..(r + 1) * stride] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.a[r * stride..(r + 1) * stride].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.a[i * stride + c];
            if f != 0.0 {
                for (v, &pr) in self.a[i * stride..(i + 1) * stride].iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                self.a[i * stride + c] = 0.0;
            }
        }
        let f = z[c];
        if f != 0.0 {
            for (v, &pr) in z.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            z[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the reduced-cost row `z` over columns `< limit`.
    fn optimize(&mut self, z: &mut [f64], limit: usize) -> Result<()> {
        let cap = 50_000 + 100 * (self.m + self.width);
        let mut degenerate = 0;
        let mut bland = false;
        for _ in 0..cap {
            let entering = if bland {
                (0..limit).find(|&j| z[j] < -PIVOT_TOL)
            } else {
                (0..limit)
                    .filter(|&j| z[j] < -PIVOT_TOL)
                    .min_by(|&a, &b| z[a].total_cmp(&z[b]).then(a.cmp(&b)))
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let aic = self.at(i, c);
                if aic > PIVOT_TOL {
                    let ratio = self.rhs(i) / aic;
                    let better = match leave {
                        None => true,
                        Some((r, best)) => {
                            ratio < best - 1e-12 * best.abs().max(1.0)
                                || (ratio <= best + 1e-12 * best.abs().max(1.0) && self.basis[i] < self.basis[r])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::LinearProgram("objective is unbounded".into()));
            };
            if ratio <= PIVOT_TOL {
                degenerate += 1;
                if degenerate >= DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate = 0;
            }
            self.pivot(r, c, z);
        }
        Err(Error::LinearProgram(format!("no optimum after {cap} pivots")))
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let n = lp.vars();
        // Phase 1: minimize the sum of artificial variables.
        let mut phase1 = vec![0.0; self.width];
        for c in phase1.iter_mut().skip(self.first_artificial) {
            *c = 1.0;
        }
        let mut z = self.reduced_costs(&phase1);
        self.optimize(&mut z, self.width)?;
        let infeasibility = -z[self.width];
        let scale = 1.0 + (0..self.m).map(|i| self.rhs(i).abs()).fold(0.0, f64::max);
        if infeasibility > 1e-9 * scale {
            return Err(Error::LinearProgram(format!(
                "infeasible (phase-one residual {infeasibility})"
            )));
        }
        // Drive remaining artificials out of the basis where possible.
        for i in 0..self.m {
            if self.basis[i] >= self.first_artificial {
                if let Some(c) = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > 1e-9) {
                    let mut dummy = vec![0.0; self.width + 1];
                    self.pivot(i, c, &mut dummy);
                }
            }
        }

        // Phase 2 on the original objective; artificials may not re-enter.
        let mut cost = vec![0.0; self.width];
        cost[..n].copy_from_slice(&lp.objective);
        let mut z = self.reduced_costs(&cost);
        self.optimize(&mut z, self.first_artificial)?;

        let mut x = vec![0.0; n];
        for i in 0..self.m {
            if self.basis[i] < n {
                x[self.basis[i]] = self.rhs(i).max(0.0);
            }
        }
        let objective = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        // z_unit = c_unit - y_i, and the unit columns carry zero cost.
        let duals = (0..self.m)
            .map(|i| {
                let y = -z[self.unit[i]];
                if self.flipped[i] {
                    -y
                } else {
                    y
                }
            })
            .collect();
        Ok(LpSolution {
            x,
            objective,
            duals,
            pivots: self.pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y s.t. x <= 4, 2y <= 12, 3x + 2y <= 18  ->  (2, 6), value 36
        let mut lp = LinearProgram::new(vec![-3.0, -5.0]);
        lp.add_row(vec![1.0, 0.0], Relation::Le, 4.0).unwrap();
        lp.add_row(vec![0.0, 2.0], Relation::Le, 12.0).unwrap();
        lp.add_row(vec![3.0, 2.0], Relation::Le, 18.0).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
        assert!((s.objective + 36.0).abs() < 1e-12);
        // shadow prices of the textbook problem: (0, 3/2, 1), negated for minimization
        let expected = [0.0, -1.5, -1.0];
        for (y, e) in s.duals.iter().zip(expected) {
            assert!((y - e).abs() < 1e-12, "{:?}", s.duals);
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + 2y s.t. x + y = 3, x - y >= -1, y >= 0.5  -> y = 0.5, x = 2.5
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add_row(vec![1.0, 1.0], Relation::Eq, 3.0).unwrap();
        lp.add_row(vec![1.0, -1.0], Relation::Ge, -1.0).unwrap();
        lp.add_row(vec![0.0, 1.0], Relation::Ge, 0.5).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective - 3.5).abs() < 1e-12);
        let dual_value: f64 = s.duals.iter().zip([3.0, -1.0, 0.5]).map(|(y, b)| y * b).sum();
        assert!((dual_value - s.objective).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![1.0], Relation::Le, 1.0).unwrap();
        lp.add_row(vec![1.0], Relation::Ge, 2.0).unwrap();
        assert!(matches!(lp.solve(), Err(Error::LinearProgram(_))));

        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add_row(vec![1.0, -1.0], Relation::Le, 1.0).unwrap();
        assert!(matches!(lp.solve(), Err(Error::LinearProgram(_))));
    }

    #[test]
    fn degenerate_cycling_example() {
        // Beale's example cycles under the largest-coefficient rule without anti-cycling.
        let mut lp = LinearProgram::new(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_row(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0).unwrap();
        lp.add_row(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0).unwrap();
        lp.add_row(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective + 0.05).abs() < 1e-12, "{}", s.objective);
    }

    /// Objective minimum over all basic feasible points of a bounded 2-3 variable LP.
    fn vertex_minimum(c: &[f64], rows: &[(Vec<f64>, f64)]) -> f64 {
        // rows are `a . x <= b`; nonnegativity added as `-x_j <= 0`
        let n = c.len();
        let mut all: Vec<(Vec<f64>, f64)> = rows.to_vec();
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = -1.0;
            all.push((e, 0.0));
        }
        let mut best = f64::INFINITY;
        let mut pick = vec![0usize; n];
        fn rec(
            start: usize,
            depth: usize,
            pick: &mut Vec<usize>,
            all: &[(Vec<f64>, f64)],
            c: &[f64],
            best: &mut f64,
        ) {
            let n = c.len();
            if depth == n {
                let a = nalgebra::DMatrix::from_fn(n, n, |r, col| all[pick[r]].0[col]);
                let b = nalgebra::DVector::from_fn(n, |r, _| all[pick[r]].1);
                if let Some(x) = a.lu().solve(&b) {
                    let feasible = all
                        .iter()
                        .all(|(row, rhs)| row.iter().zip(x.iter()).map(|(p, q)| p * q).sum::<f64>() <= rhs + 1e-9);
                    if feasible && x.iter().all(|v| v.is_finite()) {
                        let v: f64 = c.iter().zip(x.iter()).map(|(p, q)| p * q).sum();
                        *best = best.min(v);
                    }
                }
                return;
            }
            for i in start..all.len() {
                pick[depth] = i;
                rec(i + 1, depth + 1, pick, all, c, best);
            }
        }
        rec(0, 0, &mut pick, &all, c, &mut best);
        best
    }

    fn small_lp() -> impl Strategy<Value = (Vec<f64>, Vec<(Vec<f64>, f64)>)> {
        (2usize..=3, 1usize..=4).prop_flat_map(|(n, m)| {
            (
                prop::collection::vec(-5i32..=5, n).prop_map(|v| v.into_iter().map(f64::from).collect()),
                prop::collection::vec(
                    (prop::collection::vec(-4i32..=4, n), 0i32..=6).prop_map(|(a, b)| {
                        (a.into_iter().map(f64::from).collect::<Vec<_>>(), f64::from(b))
                    }),
                    m,
                ),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_vertex_enumeration((c, mut rows) in small_lp()) {
            // a box keeps every instance bounded
            let n = c.len();
            rows.push((vec![1.0; n], 10.0));
            let mut lp = LinearProgram::new(c.clone());
            for (a, b) in &rows {
                lp.add_row(a.clone(), Relation::Le, *b).unwrap();
            }
            let s = lp.solve().unwrap();
            let oracle = vertex_minimum(&c, &rows);
            prop_assert!((s.objective - oracle).abs() < 1e-9, "{} vs {}", s.objective, oracle);
            let dual_value: f64 = s.duals.iter().zip(&rows).map(|(y, (_, b))| y * b).sum();
            prop_assert!((dual_value - s.objective).abs() < 1e-9);
            prop_assert!(s.duals.iter().all(|&y| y <= 1e-12));
        }
    }
}
