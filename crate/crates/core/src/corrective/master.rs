//! Restricted master problem of the exponential-loss boosters:
//!
//! ```text
//! min_w  sum_k exp(-(P w)_k)   s.t.  w >= 0,  sum_j w_j = theta
//! ```
//!
//! and the dual pair `u = exp(-P w)`, `r = max_j u . rho_j` read off the primal optimum.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::margin::{dot, MarginMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MasterMethod {
    /// Active-set projected Newton on the face of positive coefficients.
    #[default]
    Newton,
    /// Entropic mirror descent with backtracking step sizes.
    MirrorDescent,
}

impl std::str::FromStr for MasterMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "newton" => Ok(MasterMethod::Newton),
            "mirror" | "mirror-descent" | "md" => Ok(MasterMethod::MirrorDescent),
            other => Err(Error::InvalidArgument(format!("unknown master method {other:?}"))),
        }
    }
}

impl std::fmt::Display for MasterMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MasterMethod::Newton => "newton",
            MasterMethod::MirrorDescent => "mirror",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    /// Relative duality-gap target.
    pub tol: f64,
    pub max_iter: usize,
    pub method: MasterMethod,
}

impl Default for MasterOptions {
    fn default() -> Self {
        MasterOptions {
            tol: 1e-8,
            max_iter: 100_000,
            method: MasterMethod::Newton,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution {
    /// Nonnegative, sums to theta.
    pub w: Vec<f64>,
    pub primal_value: f64,
    /// `exp(-(P w)_k)` for every row.
    pub u: Vec<f64>,
    /// Largest column correlation `u . rho_j`.
    pub r: f64,
    pub dual_value: f64,
    /// `primal_value - dual_value`, never negative.
    pub gap: f64,
    pub iterations: usize,
    /// `-min_k (P w)_k`; `u = exp(log_scale) * u_scaled`.
    pub log_scale: f64,
    /// Dual weights divided by `exp(log_scale)`, so the largest is 1. These
    /// stay representable when `u` itself overflows or underflows.
    pub u_scaled: Vec<f64>,
    /// `max_j u_scaled . rho_j`.
    pub r_scaled: f64,
}

impl MasterSolution {
    /// `ln(primal_value)`, finite even when the primal value is not representable.
    pub fn log_primal(&self) -> f64 {
        self.log_scale + self.u_scaled.iter().sum::<f64>().ln()
    }
}

/// `-r theta - sum u ln u + sum u`, with `0 ln 0 = 0`.
pub fn dual_objective(u: &[f64], r: f64, theta: f64) -> f64 {
    let entropy: f64 = u.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum();
    let mass: f64 = u.iter().sum();
    -r * theta - entropy + mass
}

/// Dual weights `exp(-(P w)_k)` implied by coefficients `w`.
pub fn kkt_weights(p: &MarginMatrix, w: &[f64]) -> Vec<f64> {
    p.apply(w).into_iter().map(|m| (-m).exp()).collect()
}

/// Objective, duals and gap at a given feasible `w`.
pub fn evaluate_master(p: &MarginMatrix, theta: f64, w: &[f64]) -> MasterSolution {
    let margins = p.apply(w);
    let u: Vec<f64> = margins.iter().map(|m| (-m).exp()).collect();
    let primal_value: f64 = u.iter().sum();
    let r = p
        .correlations(&u)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    // primal - dual = r theta - sum_k u_k m_k; this form avoids cancelling sum u.
    let weighted: f64 = u.iter().zip(&margins).map(|(a, m)| a * m).sum();
    let gap = (r * theta - weighted).max(0.0);
    let dual_value = dual_objective(&u, r, theta);
    let log_scale = -margins.iter().copied().fold(f64::INFINITY, f64::min);
    let u_scaled: Vec<f64> = margins.iter().map(|m| (-m - log_scale).exp()).collect();
    let r_scaled = p
        .correlations(&u_scaled)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
    MasterSolution {
        w: w.to_vec(),
        primal_value,
        u,
        r,
        dual_value,
        gap,
        iterations: 0,
        log_scale,
        u_scaled,
        r_scaled,
    }
}

/// Cold start from uniform coefficients.
pub fn solve_master_exp(p: &MarginMatrix, theta: f64, opts: &MasterOptions) -> Result<MasterSolution> {
    let t = p.cols();
    solve_master_exp_warm(p, theta, &vec![theta / t.max(1) as f64; t], opts)
}

/// Starts from `warm` (rescaled to sum to theta; missing trailing entries are 0).
pub fn solve_master_exp_warm(
    p: &MarginMatrix,
    theta: f64,
    warm: &[f64],
    opts: &MasterOptions,
) -> Result<MasterSolution> {
    let t = p.cols();
    if t == 0 {
        return Err(Error::InvalidArgument("master problem has no columns".into()));
    }
    if !(theta > 0.0 && theta.is_finite()) {
        return Err(Error::InvalidArgument(format!("theta must be positive, got {theta}")));
    }
    if warm.len() > t || warm.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument("bad warm start".into()));
    }

    // Identical columns are interchangeable; optimize over one representative each.
    let (reps, owner) = unique_columns(p);
    let reduced = MarginMatrix::from_columns(p.rows(), reps.iter().map(|&j| p.column(j).to_vec()).collect())?;
    let mut w0 = vec![0.0; reps.len()];
    for (j, &v) in warm.iter().enumerate() {
        w0[owner[j]] += v;
    }
    let s: f64 = w0.iter().sum();
    if s > 0.0 {
        w0.iter_mut().for_each(|v| *v *= theta / s);
    } else {
        w0.iter_mut().for_each(|v| *v = theta / reps.len() as f64);
    }

    let (wr, iterations) = match opts.method {
        MasterMethod::Newton => newton(&reduced, theta, w0, opts)?,
        MasterMethod::MirrorDescent => mirror_descent(&reduced, theta, w0, opts)?,
    };
    let mut w = vec![0.0; t];
    for (k, &j) in reps.iter().enumerate() {
        w[j] = wr[k];
    }
    let mut sol = evaluate_master(p, theta, &w);
    sol.iterations = iterations;
    Ok(sol)
}

fn unique_columns(p: &MarginMatrix) -> (Vec<usize>, Vec<usize>) {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps = Vec::new();
    let mut owner = Vec::with_capacity(p.cols());
    for j in 0..p.cols() {
        let key: Vec<u64> = p.column(j).iter().map(|v| v.to_bits()).collect();
        let k = *seen.entry(key).or_insert_with(|| {
            reps.push(j);
            reps.len() - 1
        });
        owner.push(k);
    }
    (reps, owner)
}

/// Shifted weights `exp(min m - m)` (all at most 1), their sum and the shift.
struct Scaled {
    us: Vec<f64>,
    fs: f64,
    shift: f64,
    g: Vec<f64>,
}

impl Scaled {
    fn at(p: &MarginMatrix, w: &[f64]) -> Scaled {
        let margins = p.apply(w);
        let shift = margins.iter().copied().fold(f64::INFINITY, f64::min);
        let us: Vec<f64> = margins.iter().map(|m| (shift - m).exp()).collect();
        let fs = us.iter().sum();
        let g = p.correlations(&us);
        Scaled {
            us,
            fs,
            shift,
            g,
        }
    }

    /// Frank-Wolfe gap in shifted units.
    fn gap(&self, w: &[f64], theta: f64) -> f64 {
        let gmax = self.g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (theta * gmax - dot(w, &self.g)).max(0.0)
    }

    /// Shifted objective along `m - alpha q`.
    fn value_along(&self, q: &[f64], alpha: f64) -> f64 {
        self.us
            .iter()
            .zip(q)
            .map(|(u, qk)| u * (-alpha * qk).exp())
            .sum()
    }
}

/// Iterations that fail to move before the solver gives up improving.
const STALL_LIMIT: usize = 3;
/// Stalled solves are accepted when the relative gap is within this multiple of the target.
const STALL_SLACK: f64 = 100.0;

fn converged(s: &Scaled, gap: f64, tol: f64) -> bool {
    gap <= tol * s.fs
}

fn finish_stalled(s: &Scaled, gap: f64, tol: f64, it: usize) -> Result<usize> {
    if gap <= STALL_SLACK * tol * s.fs {
        Ok(it)
    } else {
        Err(Error::NonConvergence {
            iterations: it,
            gap: gap * (-s.shift).exp(),
        })
    }
}

fn newton(p: &MarginMatrix, theta: f64, mut w: Vec<f64>, opts: &MasterOptions) -> Result<(Vec<f64>, usize)> {
    let t = p.cols();
    let mut stalls = 0;
    for it in 0..opts.max_iter {
        let s = Scaled::at(p, &w);
        let gap = s.gap(&w, theta);
        if converged(&s, gap, opts.tol) {
            return Ok((w, it));
        }
        if stalls >= STALL_LIMIT {
            return finish_stalled(&s, gap, opts.tol, it).map(|it| (w, it));
        }

        let mean = dot(&w, &s.g) / theta;
        let mut face: Vec<usize> = (0..t).filter(|&j| w[j] > 0.0).collect();
        let entering = (0..t)
            .filter(|&j| w[j] == 0.0 && s.g[j] > mean)
            .max_by(|&a, &b| s.g[a].total_cmp(&s.g[b]).then(b.cmp(&a)));
        if let Some(j) = entering {
            face.push(j);
            face.sort_unstable();
        }

        let mut direction = None;
        while face.len() >= 2 {
            let d = face_direction(p, &s, &face);
            let leaving: Vec<usize> = face
                .iter()
                .zip(&d)
                .filter(|(&j, &dj)| w[j] == 0.0 && dj < 0.0)
                .map(|(&j, _)| j)
                .collect();
            if leaving.is_empty() {
                direction = Some(d);
                break;
            }
            face.retain(|j| !leaving.contains(j));
        }

        let mut step = vec![0.0; t];
        let mut slope = 0.0;
        if let Some(d) = direction {
            for (&j, &dj) in face.iter().zip(&d) {
                step[j] = dj;
            }
            slope = dot(&step, &s.g);
        }
        if !(slope > 0.0) {
            // Frank-Wolfe step toward the best vertex.
            let best = (0..t).max_by(|&a, &b| s.g[a].total_cmp(&s.g[b]).then(b.cmp(&a))).unwrap();
            for j in 0..t {
                step[j] = -w[j];
            }
            step[best] += theta;
            slope = dot(&step, &s.g);
        }

        let alpha_max = step
            .iter()
            .zip(&w)
            .filter(|(d, _)| **d < 0.0)
            .map(|(d, wj)| wj / -d)
            .fold(f64::INFINITY, f64::min)
            .min(1.0);
        let q = p.apply(&step);
        let tiny = slope <= 1e-12 * s.fs;
        let mut alpha = alpha_max;
        let accepted = loop {
            let value = s.value_along(&q, alpha);
            if value <= s.fs - 1e-4 * alpha * slope {
                break true;
            }
            if tiny && value <= s.fs * (1.0 + 1e-14) {
                break true;
            }
            alpha *= 0.5;
            if alpha < 1e-20 {
                break false;
            }
        };
        if !accepted {
            stalls += 1;
            continue;
        }

        let before = w.clone();
        for j in 0..t {
            w[j] += alpha * step[j];
            if w[j] < 0.0 || (alpha == alpha_max && step[j] < 0.0 && w[j] <= 1e-15 * theta) {
                w[j] = 0.0;
            }
        }
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v *= theta / sum);
        if w == before {
            stalls += 1;
        } else {
            stalls = 0;
        }
    }
    let s = Scaled::at(p, &w);
    let gap = s.gap(&w, theta);
    if converged(&s, gap, opts.tol) {
        Ok((w, opts.max_iter))
    } else {
        finish_stalled(&s, gap, opts.tol, opts.max_iter).map(|it| (w, it))
    }
}

/// Newton direction restricted to `face` with the sum constraint:
/// `d = H^-1 (g - mu 1)`, `1' d = 0`, where `H = P_F' diag(u) P_F`.
fn face_direction(p: &MarginMatrix, s: &Scaled, face: &[usize]) -> Vec<f64> {
    let f = face.len();
    let root: Vec<f64> = s.us.iter().map(|u| u.sqrt()).collect();
    let scaled: Vec<Vec<f64>> = face
        .iter()
        .map(|&j| p.column(j).iter().zip(&root).map(|(a, b)| a * b).collect())
        .collect();
    let mut h = DMatrix::<f64>::zeros(f, f);
    for a in 0..f {
        for b in a..f {
            let v = dot(&scaled[a], &scaled[b]);
            h[(a, b)] = v;
            h[(b, a)] = v;
        }
    }
    let trace = h.trace();
    let mut ridge = 1e-12 * (trace / f as f64).max(f64::MIN_POSITIVE) + 1e-300;
    let g = DVector::from_iterator(f, face.iter().map(|&j| s.g[j]));
    let ones = DVector::from_element(f, 1.0);
    loop {
        let mut reg = h.clone();
        for k in 0..f {
            reg[(k, k)] += ridge;
        }
        if let Some(chol) = reg.cholesky() {
            let a = chol.solve(&g);
            let b = chol.solve(&ones);
            let mu = a.sum() / b.sum();
            let d = a - b * mu;
            if d.iter().all(|v| v.is_finite()) {
                return d.iter().copied().collect();
            }
        }
        ridge *= 100.0;
        if !ridge.is_finite() {
            return vec![0.0; f];
        }
    }
}

fn mirror_descent(p: &MarginMatrix, theta: f64, mut w: Vec<f64>, opts: &MasterOptions) -> Result<(Vec<f64>, usize)> {
    let t = p.cols() as f64;
    // Multiplicative updates cannot leave zero; mix in a little uniform mass.
    if w.contains(&0.0) {
        w.iter_mut().for_each(|v| *v = 0.999 * *v + 0.001 * theta / t);
    }
    let mut eta = 1.0;
    let mut stalls = 0;
    for it in 0..opts.max_iter {
        let s = Scaled::at(p, &w);
        let gap = s.gap(&w, theta);
        if converged(&s, gap, opts.tol) {
            return Ok((w, it));
        }
        if stalls >= STALL_LIMIT {
            return finish_stalled(&s, gap, opts.tol, it).map(|it| (w, it));
        }
        let gmax = s.g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut moved = false;
        while eta > 1e-16 {
            let mut next: Vec<f64> = w
                .iter()
                .zip(&s.g)
                .map(|(wj, gj)| wj * (eta * theta * (gj - gmax) / s.fs).exp())
                .collect();
            let sum: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v *= theta / sum);
            let value: f64 = p
                .apply(&next)
                .iter()
                .map(|m| (s.shift - m).exp())
                .sum();
            let decrease: f64 = next.iter().zip(&w).zip(&s.g).map(|((a, b), g)| (a - b) * g).sum();
            if value <= s.fs - 1e-4 * decrease {
                moved = next != w;
                w = next;
                eta *= 1.5;
                break;
            }
            eta *= 0.5;
        }
        if moved {
            stalls = 0;
        } else {
            stalls += 1;
            eta = 1.0;
        }
    }
    let s = Scaled::at(p, &w);
    let gap = s.gap(&w, theta);
    if converged(&s, gap, opts.tol) {
        Ok((w, opts.max_iter))
    } else {
        finish_stalled(&s, gap, opts.tol, opts.max_iter).map(|it| (w, it))
    }
}
