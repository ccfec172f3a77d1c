//! Line-by-line transcriptions of the two stage-wise boosters, kept apart
//! from the library code so the two can be compared round by round.
//! Weights live in plain `N x L` / `N x C` tables; the weak learner is the
//! library's stump.

#![allow(dead_code, clippy::needless_range_loop)]

use multiboost::coding::{one_vs_all, random_dense_code, exhaustive_ecoc, CodingMatrix};
use multiboost::data::{Dataset, Features};
use multiboost::weak::{train_stump, BinaryProblem};

pub struct Round {
    pub epsilon: f64,
    pub omega: f64,
    /// Weights right after the update, flattened row-major.
    pub u: Vec<f64>,
}

fn clamp(e: f64) -> f64 {
    e.clamp(1e-10, 1.0 - 1e-10)
}

/// AdaBoost.MO with coding matrix `m`.
pub fn adaboost_mo(data: &Dataset, m: &CodingMatrix, rounds: usize) -> Vec<Round> {
    let n = data.len();
    let l_len = m.len();
    let y = data.labels();
    let x = data.features();
    let mut u = vec![vec![1.0 / (n * l_len) as f64; l_len]; n];
    let mut out = Vec::new();
    for _t in 0..rounds {
        // a) normalize u
        let mut total = 0.0;
        for i in 0..n {
            for l in 0..l_len {
                total += u[i][l];
            }
        }
        for i in 0..n {
            for l in 0..l_len {
                u[i][l] /= total;
            }
        }
        // b) one hypothesis per column, trained on that column's weights
        let mut h = vec![vec![0i8; n]; l_len];
        for l in 0..l_len {
            let targets: Vec<i8> = (0..n).map(|i| m.get(y[i], l)).collect();
            let weights: Vec<f64> = (0..n).map(|i| u[i][l]).collect();
            let stump = train_stump(&BinaryProblem::new(x, &targets, &weights).unwrap());
            for i in 0..n {
                h[l][i] = stump.predict(x.row(i));
            }
        }
        // c) weighted error
        let mut eps = 0.0;
        for i in 0..n {
            for l in 0..l_len {
                if m.get(y[i], l) != h[l][i] {
                    eps += u[i][l];
                }
            }
        }
        // d) coefficient
        let e = clamp(eps);
        let omega = 0.5 * ((1.0 - e) / e).ln();
        // e) update
        for i in 0..n {
            for l in 0..l_len {
                let agree = f64::from(m.get(y[i], l) * h[l][i]);
                u[i][l] *= (-omega * agree).exp();
            }
        }
        out.push(Round {
            epsilon: eps,
            omega,
            u: u.iter().flatten().copied().collect(),
        });
    }
    out
}

/// AdaBoost.ECC taking its code columns from `columns` in order.
/// The entries `u[i][y_i]` are held at zero so only mislabels carry weight.
pub fn adaboost_ecc(data: &Dataset, columns: &[Vec<i8>], rounds: usize) -> Vec<Round> {
    let n = data.len();
    let c_len = data.num_classes();
    let y = data.labels();
    let x = data.features();
    let mut u = vec![vec![1.0 / (n * (c_len - 1)) as f64; c_len]; n];
    for i in 0..n {
        u[i][y[i]] = 0.0;
    }
    let mut out = Vec::new();
    for t in 0..rounds {
        // a) new column
        let col = &columns[t];
        // b) normalize u
        let mut total = 0.0;
        for i in 0..n {
            for c in 0..c_len {
                total += u[i][c];
            }
        }
        for i in 0..n {
            for c in 0..c_len {
                u[i][c] /= total;
            }
        }
        // c) mislabel mass per example
        let mut d = vec![0.0; n];
        for i in 0..n {
            for c in 0..c_len {
                if col[c] != col[y[i]] {
                    d[i] += u[i][c];
                }
            }
        }
        // d) normalize d
        let mut dsum = 0.0;
        for i in 0..n {
            dsum += d[i];
        }
        for i in 0..n {
            d[i] /= dsum;
        }
        // e) train on the relabelled problem
        let targets: Vec<i8> = (0..n).map(|i| col[y[i]]).collect();
        let stump = train_stump(&BinaryProblem::new(x, &targets, &d).unwrap());
        let h: Vec<i8> = (0..n).map(|i| stump.predict(x.row(i))).collect();
        // f) weighted error
        let mut eps = 0.0;
        for i in 0..n {
            if col[y[i]] != h[i] {
                eps += d[i];
            }
        }
        // g) coefficient
        let e = clamp(eps);
        let omega = 0.25 * ((1.0 - e) / e).ln();
        // h) update
        for i in 0..n {
            for c in 0..c_len {
                if c != y[i] {
                    let rho = f64::from((col[y[i]] - col[c]) * h[i]);
                    u[i][c] *= (-omega * rho).exp();
                }
            }
        }
        // flatten the mislabel entries in class order
        let mut flat = Vec::new();
        for i in 0..n {
            for c in 0..c_len {
                if c != y[i] {
                    flat.push(u[i][c]);
                }
            }
        }
        out.push(Round {
            epsilon: eps,
            omega,
            u: flat,
        });
    }
    out
}

/// Deterministic value in [-1, 1) that looks unrelated to `x`.
fn hash(x: f64) -> f64 {
    let v = (x.sin() * 43758.5453).fract();
    2.0 * v.abs() - 1.0
}

/// Overlapping point clouds; `wobble` varies the instance.
fn cloud(n: usize, classes: usize, wobble: f64) -> Dataset {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let c = i % classes;
        let a = hash(i as f64 * 12.9898 + wobble);
        let b = hash(i as f64 * 78.233 + 2.0 * wobble);
        let angle = std::f64::consts::TAU * c as f64 / classes as f64;
        rows.push(vec![angle.cos() + 1.5 * a, angle.sin() + 1.5 * b, a * b]);
        labels.push(c);
    }
    Dataset::new(Features::from_rows(&rows).unwrap(), labels, classes).unwrap()
}

/// Three fixed instances with the code each uses for MO.
pub fn toy_instances() -> Vec<(&'static str, Dataset, CodingMatrix)> {
    vec![
        ("three-class one-vs-all", cloud(24, 3, 0.3), one_vs_all(3).unwrap()),
        ("four-class exhaustive", cloud(32, 4, 1.1), exhaustive_ecoc(4).unwrap()),
        ("five-class random", cloud(40, 5, 2.7), random_dense_code(5, 8, 11).unwrap()),
    ]
}
