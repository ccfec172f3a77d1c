mod support;

use multiboost::corrective::master::{MasterMethod, MasterOptions};
use multiboost::corrective::{solve_master_exp, solve_master_hinge};
use multiboost::data::Features;
use multiboost::weak::{train_stump, weighted_error, BinaryProblem, Hypothesis};
use proptest::prelude::*;
use support::oracles::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn master_solutions_satisfy_duality(seed in any::<u64>()) {
        let inst = master_instance(seed, 10, 10.0);
        let s = solve_master_exp(&inst.p, inst.theta, &MasterOptions::default()).unwrap();
        prop_assert_eq!(check_master(&inst, &s), Ok(()));
    }

    #[test]
    fn mirror_descent_reaches_the_same_optimum(seed in any::<u64>()) {
        let inst = master_instance(seed, 4, 3.0);
        let opts = MasterOptions { method: MasterMethod::MirrorDescent, ..MasterOptions::default() };
        let md = solve_master_exp(&inst.p, inst.theta, &opts).unwrap();
        let nt = solve_master_exp(&inst.p, inst.theta, &MasterOptions::default()).unwrap();
        prop_assert!((md.primal_value - nt.primal_value).abs() <= 1e-6 * (1.0 + nt.primal_value));
    }

    #[test]
    fn master_matches_grid_search(seed in any::<u64>()) {
        let inst = master_instance(seed, 2, 5.0);
        let s = solve_master_exp(&inst.p, inst.theta, &MasterOptions::default()).unwrap();
        let grid = grid_master_min(&inst.p, inst.theta);
        prop_assert!((s.primal_value - grid).abs() <= 1e-4 * (1.0 + grid), "{} vs {}", s.primal_value, grid);
        prop_assert!(s.primal_value <= grid + 1e-9 * (1.0 + grid));
    }

    #[test]
    fn hinge_matches_vertex_enumeration(seed in any::<u64>()) {
        let inst = hinge_instance(seed);
        let s = solve_master_hinge(&inst.p, inst.classes, inst.theta).unwrap();
        let best = hinge_vertex_min(&inst.p, inst.classes, inst.theta);
        prop_assert!((s.primal_value - best).abs() <= 1e-6, "{} vs {}", s.primal_value, best);
        prop_assert!((s.dual_value - best).abs() <= 1e-6);
    }

    #[test]
    fn stump_matches_enumeration(seed in any::<u64>()) {
        let inst = stump_instance(seed);
        let x = Features::from_rows(&inst.rows).unwrap();
        let p = BinaryProblem::new(&x, &inst.targets, &inst.weights).unwrap();
        let h = Hypothesis::Stump(train_stump(&p));
        let brute = brute_stump_error(&inst);
        prop_assert!((weighted_error(&h, &p) * p.total_weight() - brute).abs() <= 1e-12);
    }
}

#[test]
fn grid_oracle_finds_a_known_minimum() {
    // f(a) = exp(-a) + exp(-(2 - a)) on [0, 2] has its minimum 2/e at a = 1
    let p = multiboost::corrective::MarginMatrix::from_columns(2, vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    assert!((grid_master_min(&p, 2.0) - 2.0 / std::f64::consts::E).abs() < 1e-12);
}

#[test]
fn vertex_oracle_finds_a_known_minimum() {
    // rows (1, -1), (-1, 1): slacks 1 - (a - b) and 1 - (b - a) sum to 2 whenever both are active
    let p = multiboost::corrective::MarginMatrix::from_columns(2, vec![vec![1.0, -1.0], vec![-1.0, 1.0]]).unwrap();
    assert!((hinge_vertex_min(&p, 2, 4.0) - 2.0).abs() < 1e-12);
    let q = multiboost::corrective::MarginMatrix::from_columns(1, vec![vec![2.0]]).unwrap();
    assert_eq!(hinge_vertex_min(&q, 2, 0.25), 0.5);
}
