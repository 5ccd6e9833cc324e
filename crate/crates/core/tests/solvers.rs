mod common;

use common::*;
use gridid::solvers::*;
use gridid::{CMat, C64};
use nalgebra::DVector;
use proptest::prelude::*;

fn dense(a: &CMat, b: &[C64]) -> LeastSquares {
    LeastSquares::dense(a.clone(), b.to_vec()).unwrap()
}

fn objective(a: &CMat, b: &[C64], lambda: f64, w: &[f64], x: &[C64]) -> f64 {
    let r = a * DVector::from_column_slice(x) - DVector::from_column_slice(b);
    r.norm_squared() + lambda * x.iter().zip(w).map(|(xi, wi)| wi * xi.norm()).sum::<f64>()
}

#[test]
fn ols_matches_normal_equations() {
    let mut g = rng(11);
    let a = random_cmat(&mut g, 20, 5);
    let b = random_cvec(&mut g, 20);
    let sol = ols(&dense(&a, &b)).unwrap();
    assert!(!sol.rank_deficient);
    let aha = a.adjoint() * &a;
    let ahb = a.adjoint() * DVector::from_column_slice(&b);
    let oracle = aha.lu().solve(&ahb).unwrap();
    assert!(vdiff(&sol.x, oracle.as_slice()) <= 1e-9 * vnorm(oracle.as_slice()));
}

#[test]
fn ols_exact_data_has_tiny_residual() {
    let mut g = rng(12);
    let a = random_cmat(&mut g, 15, 6);
    let x0 = random_cvec(&mut g, 6);
    let b = (&a * DVector::from_column_slice(&x0)).as_slice().to_vec();
    let ls = dense(&a, &b);
    let sol = ols(&ls).unwrap();
    assert!(vnorm(&ls.residual(&sol.x)) <= 1e-10);
}

#[test]
fn ridge_closed_form_and_optimality() {
    let eye = CMat::identity(3, 3);
    let b = vec![C64::new(2.0, -1.0), C64::new(0.5, 0.0), C64::new(0.0, 3.0)];
    let x = ridge(&dense(&eye, &b), 0.25).unwrap();
    for (xi, bi) in x.iter().zip(&b) {
        assert!((xi - bi / 1.25).norm() < 1e-12);
    }
    let mut g = rng(13);
    let a = random_cmat(&mut g, 8, 8);
    let b = random_cvec(&mut g, 8);
    let lambda = 0.3;
    let x = ridge(&dense(&a, &b), lambda).unwrap();
    let lhs = (a.adjoint() * &a + CMat::identity(8, 8) * C64::new(lambda, 0.0)) * DVector::from_column_slice(&x);
    let rhs = a.adjoint() * DVector::from_column_slice(&b);
    assert!((lhs - &rhs).norm() <= 1e-9 * rhs.norm());
    let big = ridge(&dense(&a, &b), 1e12).unwrap();
    assert!(vnorm(&big) < 1e-9);
    assert!(ridge(&dense(&a, &b), 0.0).is_err());
}

#[test]
fn lasso_matches_cone_program() {
    let mut g = rng(14);
    let a = random_cmat(&mut g, 12, 6);
    let b = random_cvec(&mut g, 12);
    let w = vec![1.0; 6];
    let sol = lasso(&dense(&a, &b), 0.1, None, &LassoOptions::default()).unwrap();
    let (oracle, _) = socp_lasso(&a, &b, 0.1, &w);
    assert!((sol.objective - oracle).abs() <= 1e-6 * oracle, "{} vs {oracle}", sol.objective);
    assert!((sol.objective - objective(&a, &b, 0.1, &w, &sol.x)).abs() <= 1e-8 * sol.objective);
}

#[test]
fn lasso_zero_threshold_is_twice_correlation_norm() {
    let mut g = rng(15);
    let a = random_cmat(&mut g, 10, 4);
    let b = random_cvec(&mut g, 10);
    let corr = a.adjoint() * DVector::from_column_slice(&b);
    let lmax = 2.0 * corr.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let at = lasso(&dense(&a, &b), lmax * 1.0001, None, &LassoOptions::default()).unwrap();
    assert!(at.x.iter().all(|z| z.norm() == 0.0));
    let below = lasso(&dense(&a, &b), lmax * 0.9, None, &LassoOptions::default()).unwrap();
    assert!(below.x.iter().any(|z| z.norm() > 0.0));
}

#[test]
fn adaptive_recovers_dominant_entry_better_than_plain() {
    let mut g = rng(16);
    let a = random_cmat(&mut g, 30, 10);
    let mut x0 = vec![C64::new(0.0, 0.0); 10];
    x0[2] = C64::new(1e5, -2e4);
    x0[5] = C64::new(1.5, 0.5);
    x0[7] = C64::new(-0.8, 1.2);
    let b = (&a * DVector::from_column_slice(&x0)).as_slice().to_vec();
    let ls = dense(&a, &b);
    let lambda = 50.0;
    let plain = lasso(&ls, lambda, None, &LassoOptions::default()).unwrap();
    let adapt = adaptive_lasso(&ls, lambda, 1.0, &LassoOptions::default()).unwrap();
    let err = |x: &[C64]| (x[2] - x0[2]).norm() / x0[2].norm();
    assert!(err(&adapt.x) < 1e-2);
    let small = |x: &[C64]| vdiff(x, &x0);
    assert!(small(&adapt.x) < small(&plain.x));
}

#[test]
fn all_zero_initial_estimate_rejected() {
    assert!(adaptive_weights(&[C64::new(0.0, 0.0); 3], 1.0).is_err());
    let w = adaptive_weights(&[C64::new(0.0, 0.0), C64::new(2.0, 0.0)], 1.0).unwrap();
    assert_eq!(w[0], WEIGHT_MAX);
    assert!((w[1] - 0.5).abs() < 1e-15);
}

#[test]
fn converged_solution_is_prox_fixed_point() {
    let mut g = rng(17);
    let a = random_cmat(&mut g, 15, 8);
    let b = random_cvec(&mut g, 15);
    let sol = lasso(&dense(&a, &b), 0.5, None, &LassoOptions::default()).unwrap();
    assert!(sol.converged);
    let x = DVector::from_column_slice(&sol.x);
    let grad = a.adjoint() * (&a * &x - DVector::from_column_slice(&b)) * C64::new(2.0, 0.0);
    let moved: Vec<C64> = (0..8)
        .map(|i| complex_soft_threshold(sol.x[i] - grad[i] * sol.step, sol.step * 0.5))
        .collect();
    assert!(vdiff(&moved, &sol.x) <= 1e-9 * vnorm(&sol.x).max(1.0));
}

#[test]
fn single_point_grid_is_returned() {
    struct Folds {
        a: CMat,
        b: Vec<C64>,
    }
    impl FoldBuilder for Folds {
        fn n_slots(&self) -> usize {
            self.a.nrows()
        }
        fn build(&self, slots: &[usize]) -> gridid::Result<LeastSquares> {
            LeastSquares::dense(self.a.select_rows(slots), slots.iter().map(|&s| self.b[s]).collect())
        }
    }
    let mut g = rng(18);
    let f = Folds {
        a: random_cmat(&mut g, 30, 4),
        b: random_cvec(&mut g, 30),
    };
    let grid = Grid {
        lambdas: vec![0.7],
        gammas: vec![2.0],
    };
    let r = cross_validate(&f, Method::Adaptive, &grid, 3, &LassoOptions::default()).unwrap();
    assert_eq!((r.lambda, r.gamma), (0.7, Some(2.0)));
    let empty = Grid {
        lambdas: vec![],
        gammas: vec![1.0],
    };
    assert!(cross_validate(&f, Method::Lasso, &empty, 3, &LassoOptions::default()).is_err());
}

#[test]
fn noiseless_cv_picks_lowest_decade() {
    struct Folds {
        a: CMat,
        b: Vec<C64>,
    }
    impl FoldBuilder for Folds {
        fn n_slots(&self) -> usize {
            self.a.nrows()
        }
        fn build(&self, slots: &[usize]) -> gridid::Result<LeastSquares> {
            LeastSquares::dense(self.a.select_rows(slots), slots.iter().map(|&s| self.b[s]).collect())
        }
    }
    let mut g = rng(19);
    let a = random_cmat(&mut g, 60, 6);
    let mut x0 = random_cvec(&mut g, 6);
    x0[1] = C64::new(0.0, 0.0);
    let b = (&a * DVector::from_column_slice(&x0)).as_slice().to_vec();
    let r = cross_validate(&Folds { a, b }, Method::Lasso, &Grid::default(), 3, &LassoOptions::default()).unwrap();
    assert!(r.lambda < 1e-4, "selected λ = {}", r.lambda);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phase_rotation_leaves_moduli_unchanged(seed in 0u64..1000, theta in -3.0f64..3.0, lambda in 0.01f64..2.0) {
        let mut g = rng(seed);
        let a = random_cmat(&mut g, 10, 5);
        let b = random_cvec(&mut g, 10);
        let u = C64::from_polar(1.0, theta);
        let a2 = &a * u;
        let b2: Vec<C64> = b.iter().map(|z| z * u).collect();
        let s1 = lasso(&dense(&a, &b), lambda, None, &LassoOptions::default()).unwrap();
        let s2 = lasso(&dense(&a2, &b2), lambda, None, &LassoOptions::default()).unwrap();
        for (p, q) in s1.x.iter().zip(&s2.x) {
            prop_assert!((p.norm() - q.norm()).abs() <= 1e-6 * (1.0 + p.norm()));
        }
    }

    #[test]
    fn reported_objective_matches_recomputation(seed in 0u64..1000, lambda in 0.0f64..3.0) {
        let mut g = rng(seed);
        let a = random_cmat(&mut g, 9, 6);
        let b = random_cvec(&mut g, 9);
        let w: Vec<f64> = (0..6).map(|i| 0.5 + i as f64 * 0.3).collect();
        let s = lasso(&dense(&a, &b), lambda, Some(&w), &LassoOptions::default()).unwrap();
        let obj = objective(&a, &b, lambda, &w, &s.x);
        prop_assert!((s.objective - obj).abs() <= 1e-8 * obj.max(1e-12));
    }

    #[test]
    fn weighted_lasso_agrees_with_cone_oracle(seed in 0u64..1000, lambda in 0.05f64..5.0) {
        let mut g = rng(seed);
        let a = random_cmat(&mut g, 8, 5);
        let b = random_cvec(&mut g, 8);
        let w: Vec<f64> = (0..5).map(|i| 0.2 + (seed as usize + i) as f64 % 3.0).collect();
        let s = lasso(&dense(&a, &b), lambda, Some(&w), &LassoOptions::default()).unwrap();
        let (oracle, _) = socp_lasso(&a, &b, lambda, &w);
        prop_assert!((s.objective - oracle).abs() <= 1e-6 * oracle, "{} vs {}", s.objective, oracle);
    }

    #[test]
    fn objective_never_increases_across_iterations(seed in 0u64..1000, lambda in 0.01f64..1.0) {
        let mut g = rng(seed);
        let a = random_cmat(&mut g, 12, 6);
        let b = random_cvec(&mut g, 12);
        let ls = dense(&a, &b);
        let mut last = f64::INFINITY;
        for it in 1..40 {
            let opts = LassoOptions { max_iter: it, ..Default::default() };
            let s = lasso(&ls, lambda, None, &opts).unwrap();
            prop_assert!(s.objective <= last * (1.0 + 1e-12), "iteration {}: {} > {}", it, s.objective, last);
            last = s.objective;
        }
    }
}
