use super::{best_cut, BinaryProblem, Cut};

/// Axis-aligned threshold rule: `polarity` if `x[feature] > threshold`, else `-polarity`.
#[derive(Debug, Clone, PartialEq)]
pub struct Stump {
    pub feature: usize,
    pub threshold: f64,
    pub polarity: i8,
}

impl Stump {
    #[inline]
    pub fn predict(&self, x: &[f64]) -> i8 {
        if x[self.feature] > self.threshold {
            self.polarity
        } else {
            -self.polarity
        }
    }
}

/// Exhaustive minimum-weighted-error stump.
///
/// Ties are resolved toward the smaller feature index, then the smaller
/// threshold, then polarity +1.
pub fn train_stump(p: &BinaryProblem<'_>) -> Stump {
    let features = p.features();
    let mut best: Option<(usize, Cut)> = None;
    for f in 0..features.cols() {
        let (cut, improved) = best_cut(
            features.sorted_order(f),
            |i| features.get(i, f),
            p.targets(),
            p.weights(),
            p.total_weight(),
            best.map(|(_, c)| c),
        );
        if improved {
            best = Some((f, cut));
        }
    }
    let (feature, cut) = best.expect("at least one feature");
    Stump {
        feature,
        threshold: cut.threshold,
        polarity: cut.polarity,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Features;
    use crate::weak::{weighted_error, Hypothesis};
    use proptest::prelude::*;

    /// Independent enumeration: every feature, every threshold between or
    /// beyond the observed values, both polarities; errors by direct count.
    fn enumerate_min_error(rows: &[Vec<f64>], targets: &[i8], weights: &[f64]) -> f64 {
        let total: f64 = weights.iter().sum();
        let mut best = f64::INFINITY;
        for f in 0..rows[0].len() {
            let mut vals: Vec<f64> = rows.iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            let mut thresholds = vec![vals[0] - 1.0, vals[vals.len() - 1] + 1.0];
            for w in vals.windows(2) {
                thresholds.push((w[0] + w[1]) / 2.0);
            }
            for &t in &thresholds {
                for pol in [1i8, -1] {
                    let s = Stump {
                        feature: f,
                        threshold: t,
                        polarity: pol,
                    };
                    let err: f64 = rows
                        .iter()
                        .zip(targets)
                        .zip(weights)
                        .filter(|((r, &y), _)| s.predict(r) != y)
                        .map(|(_, w)| w)
                        .sum();
                    best = best.min(err / total);
                }
            }
        }
        best
    }

    fn fit(rows: &[Vec<f64>], targets: &[i8], weights: &[f64]) -> (Stump, f64) {
        let f = Features::from_rows(rows).unwrap();
        let p = BinaryProblem::new(&f, targets, weights).unwrap();
        let s = train_stump(&p);
        let e = weighted_error(&Hypothesis::Stump(s.clone()), &p);
        (s, e)
    }

    fn column(xs: &[f64]) -> Vec<Vec<f64>> {
        xs.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn separable_line() {
        let (s, e) = fit(&column(&[1.0, 2.0, 3.0, 4.0]), &[-1, -1, 1, 1], &[0.25; 4]);
        assert_eq!(s, Stump { feature: 0, threshold: 2.5, polarity: 1 });
        assert_eq!(e, 0.0);
    }

    #[test]
    fn all_positive_takes_lowest_extreme() {
        let rows = vec![vec![3.0, 1.0], vec![1.0, 0.0], vec![2.0, 5.0]];
        let (s, e) = fit(&rows, &[1, 1, 1], &[1.0, 1.0, 1.0]);
        assert_eq!(e, 0.0);
        assert_eq!(s.feature, 0);
        assert_eq!(s.polarity, 1);
        assert!(s.threshold < 1.0);
    }

    #[test]
    fn weighted_alternating_pattern() {
        let xs = column(&[1.0, 2.0, 3.0, 4.0]);
        let y = [1, -1, 1, -1];
        let w = [0.4, 0.1, 0.1, 0.4];
        let (_, e) = fit(&xs, &y, &w);
        let oracle = enumerate_min_error(&xs, &y, &w);
        // x > 1.5 => -1 misclassifies only the third point
        assert!((oracle - 0.1).abs() < 1e-12, "{oracle}");
        assert!((e - oracle).abs() < 1e-12);
    }

    #[test]
    fn duplicate_values_do_not_split() {
        let xs = column(&[1.0, 1.0, 2.0, 2.0]);
        let (s, e) = fit(&xs, &[-1, 1, 1, 1], &[1.0, 1.0, 1.0, 1.0]);
        assert!((e - 0.25).abs() < 1e-12);
        assert!(s.threshold != 1.0 && s.threshold != 2.0);
    }

    fn problem_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<i8>, Vec<f64>)> {
        (1usize..=20, 1usize..=3).prop_flat_map(|(n, d)| {
            (
                prop::collection::vec(prop::collection::vec(-3i32..=3, d), n)
                    .prop_map(|rows| {
                        rows.into_iter()
                            .map(|r| r.into_iter().map(|v| v as f64 * 0.5).collect())
                            .collect()
                    }),
                prop::collection::vec(prop::bool::ANY.prop_map(|b| if b { 1i8 } else { -1 }), n),
                prop::collection::vec(0.01f64..1.0, n),
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn matches_exhaustive_enumeration((rows, y, w) in problem_strategy()) {
            let (_, e) = fit(&rows, &y, &w);
            let oracle = enumerate_min_error(&rows, &y, &w);
            prop_assert!((e - oracle).abs() < 1e-9, "stump {e} vs oracle {oracle}");
        }

        #[test]
        fn weight_scale_invariant((rows, y, w) in problem_strategy(), alpha in 0.01f64..100.0) {
            let (a, _) = fit(&rows, &y, &w);
            let scaled: Vec<f64> = w.iter().map(|v| v * alpha).collect();
            let (b, _) = fit(&rows, &y, &scaled);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn predict_is_total(x in prop::num::f64::ANY, t in -1e6f64..1e6, pol in prop::bool::ANY) {
            let s = Stump { feature: 0, threshold: t, polarity: if pol { 1 } else { -1 } };
            let out = s.predict(&[x]);
            prop_assert!(out == 1 || out == -1);
        }
    }
}
