//! Random small instances and brute-force references for the weak learner
//! and both master problems. Nothing here calls the solvers under test.

#![allow(dead_code, clippy::needless_range_loop)]

use multiboost::corrective::master::MasterSolution;
use multiboost::corrective::MarginMatrix;
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

fn rng(seed: u64) -> Xoshiro256PlusPlus {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

pub struct MasterInstance {
    pub p: MarginMatrix,
    pub theta: f64,
    pub examples: usize,
    pub classes: usize,
    /// Mismatch rows (`classes - 1` per example) rather than code-position rows.
    pub mismatch: bool,
}

/// Margin columns built the way the boosters build them: random labels,
/// a random one-vs-all position or code column, and a random hypothesis.
pub fn master_instance(seed: u64, max_cols: usize, max_theta: f64) -> MasterInstance {
    let mut g = rng(seed);
    let n = g.gen_range(2..=30);
    let classes = g.gen_range(2..=4);
    let t = g.gen_range(1..=max_cols);
    let theta = g.gen_range(0.1..max_theta);
    let mismatch = g.gen_bool(0.5);
    let labels: Vec<usize> = (0..n).map(|_| g.gen_range(0..classes)).collect();
    let mut columns = Vec::with_capacity(t);
    for _ in 0..t {
        let h: Vec<f64> = (0..n).map(|_| if g.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
        if mismatch {
            let code: Vec<f64> = (0..classes).map(|_| if g.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
            let mut col = Vec::with_capacity(n * (classes - 1));
            for i in 0..n {
                for c in (0..classes).filter(|&c| c != labels[i]) {
                    col.push((code[labels[i]] - code[c]) * h[i]);
                }
            }
            columns.push(col);
        } else {
            // one-vs-all code, one position per column
            let pos = g.gen_range(0..classes);
            let mut col = vec![0.0; n * classes];
            for i in 0..n {
                let m = if labels[i] == pos { 1.0 } else { -1.0 };
                col[i * classes + pos] = m * h[i];
            }
            columns.push(col);
        }
    }
    let rows = if mismatch { n * (classes - 1) } else { n * classes };
    MasterInstance {
        p: MarginMatrix::from_columns(rows, columns).unwrap(),
        theta,
        examples: n,
        classes,
        mismatch,
    }
}

fn margins(p: &MarginMatrix, w: &[f64]) -> Vec<f64> {
    let mut m = vec![0.0; p.rows()];
    for (j, &wj) in w.iter().enumerate() {
        for (k, v) in p.column(j).iter().enumerate() {
            m[k] += v * wj;
        }
    }
    m
}

pub fn exp_loss(p: &MarginMatrix, w: &[f64]) -> f64 {
    margins(p, w).iter().map(|m| (-m).exp()).sum()
}

/// Largest violation of the duality suite conditions, or a description of
/// the first failed one.
pub fn check_master(inst: &MasterInstance, s: &MasterSolution) -> Result<(), String> {
    let p = &inst.p;
    let sum: f64 = s.w.iter().sum();
    if s.w.iter().any(|&x| x < 0.0) || (sum - inst.theta).abs() > 1e-9 * inst.theta.max(1.0) {
        return Err(format!("w infeasible: sum {sum} vs theta {}", inst.theta));
    }
    let u: Vec<f64> = margins(p, &s.w).iter().map(|m| (-m).exp()).collect();
    for (a, b) in s.u.iter().zip(&u) {
        if (a - b).abs() > 1e-12 * b.max(1.0) {
            return Err(format!("u {a} differs from exp(-Pw) {b}"));
        }
    }
    let corr: Vec<f64> = (0..p.cols())
        .map(|j| p.column(j).iter().zip(&u).map(|(r, x)| r * x).sum())
        .collect();
    let r = corr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if let Some(c) = corr.iter().find(|&&c| c > s.r + 1e-9) {
        return Err(format!("u . rho = {c} exceeds r = {}", s.r));
    }
    let primal: f64 = u.iter().sum();
    let entropy: f64 = u.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    let dual = -r * inst.theta - entropy + primal;
    let gap = primal - dual;
    if gap > 1e-6 * (1.0 + primal.abs()) {
        return Err(format!("gap {gap} at primal {primal}"));
    }
    Ok(())
}

/// Minimum of the exponential loss over the two-column simplex by a dense
/// grid followed by golden-section refinement of the best bracket.
pub fn grid_master_min(p: &MarginMatrix, theta: f64) -> f64 {
    match p.cols() {
        1 => exp_loss(p, &[theta]),
        2 => {
            let f = |a: f64| exp_loss(p, &[a, theta - a]);
            let steps = 4000;
            let h = theta / steps as f64;
            let best = (0..=steps)
                .min_by(|&i, &j| f(i as f64 * h).total_cmp(&f(j as f64 * h)))
                .unwrap();
            let (mut lo, mut hi) = (((best as f64 - 1.0) * h).max(0.0), ((best as f64 + 1.0) * h).min(theta));
            let ratio = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..200 {
                let a = hi - ratio * (hi - lo);
                let b = lo + ratio * (hi - lo);
                if f(a) <= f(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            f(0.5 * (lo + hi)).min(f(0.0)).min(f(theta))
        }
        t => panic!("grid search takes one or two columns, got {t}"),
    }
}

pub struct HingeInstance {
    pub p: MarginMatrix,
    pub classes: usize,
    pub theta: f64,
}

/// Three mismatch rows: either three two-class examples or one four-class example.
pub fn hinge_instance(seed: u64) -> HingeInstance {
    let mut g = rng(seed);
    let classes = if g.gen_bool(0.5) { 2 } else { 4 };
    let t = g.gen_range(1..=3);
    let values = [-2.0, -1.0, 0.0, 1.0, 2.0];
    let columns = (0..t)
        .map(|_| (0..3).map(|_| values[g.gen_range(0..values.len())]).collect())
        .collect();
    HingeInstance {
        p: MarginMatrix::from_columns(3, columns).unwrap(),
        classes,
        theta: g.gen_range(0.1..5.0),
    }
}

pub fn hinge_loss(p: &MarginMatrix, classes: usize, w: &[f64]) -> f64 {
    let m = margins(p, w);
    m.chunks(classes - 1)
        .map(|group| group.iter().map(|x| 1.0 - x).fold(0.0, f64::max))
        .sum()
}

/// Solve a square system by Gaussian elimination with partial pivoting.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Minimum of the hinge objective over `{w >= 0, sum w = theta}` by
/// evaluating every vertex of the arrangement formed by the kinks of the
/// piecewise-linear objective and the simplex faces.
pub fn hinge_vertex_min(p: &MarginMatrix, classes: usize, theta: f64) -> f64 {
    let t = p.cols();
    let rows: Vec<Vec<f64>> = (0..p.rows()).map(|k| (0..t).map(|j| p.column(j)[k]).collect()).collect();
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for r in &rows {
        planes.push((r.clone(), 1.0));
    }
    let per = classes - 1;
    for g in 0..rows.len() / per {
        for a in 0..per {
            for b in a + 1..per {
                let d = rows[g * per + a].iter().zip(&rows[g * per + b]).map(|(x, y)| x - y).collect();
                planes.push((d, 0.0));
            }
        }
    }
    for j in 0..t {
        let mut e = vec![0.0; t];
        e[j] = 1.0;
        planes.push((e, 0.0));
    }

    let mut best = f64::INFINITY;
    let mut visit = |chosen: &[usize]| {
        let mut a = vec![vec![1.0; t]];
        let mut b = vec![theta];
        for &i in chosen {
            a.push(planes[i].0.clone());
            b.push(planes[i].1);
        }
        if let Some(w) = solve_square(a, b) {
            if w.iter().all(|&x| x >= -1e-9) {
                let w: Vec<f64> = w.into_iter().map(|x| x.max(0.0)).collect();
                best = best.min(hinge_loss(p, classes, &w));
            }
        }
    };
    match t {
        1 => visit(&[]),
        2 => (0..planes.len()).for_each(|i| visit(&[i])),
        3 => {
            for i in 0..planes.len() {
                for j in i + 1..planes.len() {
                    visit(&[i, j]);
                }
            }
        }
        _ => panic!("vertex enumeration takes at most three columns"),
    }
    best
}

pub struct StumpInstance {
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<i8>,
    pub weights: Vec<f64>,
}

/// Small integer-valued features so that ties are common.
pub fn stump_instance(seed: u64) -> StumpInstance {
    let mut g = rng(seed);
    let n = g.gen_range(1..=20);
    let d = g.gen_range(1..=3);
    let rows = (0..n).map(|_| (0..d).map(|_| g.gen_range(0..6) as f64).collect()).collect();
    let targets = (0..n).map(|_| if g.gen_bool(0.5) { 1 } else { -1 }).collect();
    let mut weights: Vec<f64> = (0..n).map(|_| if g.gen_bool(0.2) { 0.0 } else { g.gen::<f64>() }).collect();
    weights[0] += 0.1;
    StumpInstance { rows, targets, weights }
}

/// Smallest weighted error over every feature, every threshold below,
/// between or above the observed values, and both polarities.
pub fn brute_stump_error(inst: &StumpInstance) -> f64 {
    let d = inst.rows[0].len();
    let mut best = f64::INFINITY;
    for f in 0..d {
        let mut values: Vec<f64> = inst.rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let mut cuts = vec![values[0] - 1.0];
        cuts.extend(values.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        cuts.push(values[values.len() - 1] + 1.0);
        for &cut in &cuts {
            for polarity in [1i8, -1] {
                let err: f64 = inst
                    .rows
                    .iter()
                    .zip(&inst.targets)
                    .zip(&inst.weights)
                    .filter(|((r, &y), _)| (if r[f] > cut { polarity } else { -polarity }) != y)
                    .map(|(_, w)| w)
                    .sum();
                best = best.min(err);
            }
        }
    }
    best
}
