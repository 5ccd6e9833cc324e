mod common;

use common::*;
use gridid::solvers::LinearOperator;
use gridid::symvec::*;
use gridid::{CMat, C64};
use nalgebra::DVector;
use proptest::prelude::*;

fn vec_col_major(m: &CMat) -> Vec<C64> {
    m.as_slice().to_vec()
}

#[test]
fn f_orders_lower_triangle_by_columns() {
    let a = CMat::from_row_slice(
        3,
        3,
        &[1.0, 2.0, 3.0, 2.0, 4.0, 5.0, 3.0, 5.0, 6.0].map(|x| C64::new(x, -x)),
    );
    let x = f_vec(&a).unwrap();
    let want: Vec<C64> = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0].iter().map(|&x| C64::new(x, -x)).collect();
    assert_eq!(x, want);
    assert_eq!(f_unvec(&x).unwrap(), a);
}

#[test]
fn seven_by_seven_round_trip_is_exact() {
    let mut g = rng(1);
    let a = random_symmetric(&mut g, 7);
    assert_eq!(f_unvec(&f_vec(&a).unwrap()).unwrap(), a);
    assert_eq!(f_vec(&a).unwrap().len(), 28);
}

#[test]
fn duplication_rows_have_a_single_one() {
    for n in 1..7 {
        let q = duplication_matrix(n);
        assert_eq!(q.shape(), (n * n, n * (n + 1) / 2));
        for r in 0..n * n {
            let row: Vec<f64> = q.row(r).iter().copied().collect();
            assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            assert!(row.iter().all(|&x| x == 0.0 || x == 1.0));
        }
    }
}

#[test]
fn hundred_random_symmetric_matrices_satisfy_duplication_identity() {
    let mut g = rng(2);
    for trial in 0..100 {
        let n = 1 + trial % 8;
        let a = random_symmetric(&mut g, n);
        let q = duplication_matrix(n).map(|x| C64::new(x, 0.0));
        let qf = q * DVector::from_vec(f_vec(&a).unwrap());
        assert_eq!(qf.as_slice(), vec_col_major(&a).as_slice());
    }
}

#[test]
fn design_matches_dense_oracle_on_small_sizes() {
    let mut g = rng(3);
    for n in 1..=6 {
        for k in [1, 3, 4, 7] {
            let v = random_cmat(&mut g, n, k);
            let x = random_cvec(&mut g, n * (n + 1) / 2);
            let r = random_cvec(&mut g, n * k);
            let a = dense_design(&v);
            let ax = &a * DVector::from_column_slice(&x);
            let ahr = a.adjoint() * DVector::from_column_slice(&r);
            let fast = design_apply(&v, &x).unwrap();
            let fast_adj = design_adjoint(&v, &r).unwrap();
            assert!(vdiff(&fast, ax.as_slice()) <= 1e-12 * (1.0 + ax.norm()), "apply n={n} k={k}");
            assert!(vdiff(&fast_adj, ahr.as_slice()) <= 1e-12 * (1.0 + ahr.norm()), "adjoint n={n} k={k}");
            let m = SymDesign::new(v.clone()).materialize();
            assert!(frob(&(m - &a)) <= 1e-12 * (1.0 + frob(&a)));
        }
    }
}

#[test]
fn design_of_f_y_is_vec_of_product() {
    let mut g = rng(4);
    let y = random_symmetric(&mut g, 5);
    let v = random_cmat(&mut g, 5, 9);
    let got = design_apply(&v, &f_vec(&y).unwrap()).unwrap();
    let want = vec_col_major(&(&y * &v));
    assert!(vdiff(&got, &want) <= 1e-12 * vnorm(&want));
}

#[test]
fn column_norms_reflect_duplication() {
    let mut g = rng(5);
    let v = random_cmat(&mut g, 4, 6);
    let a = SymDesign::new(v.clone()).materialize();
    let idx = SymIndex::new(4);
    let row_sq = |i: usize| v.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>();
    for (c, (i, j)) in idx.iter().enumerate() {
        let col: f64 = a.column(c).iter().map(|z| z.norm_sqr()).sum();
        let want = if i == j { row_sq(i) } else { row_sq(i) + row_sq(j) };
        assert!((col - want).abs() <= 1e-12 * want);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adjoint_inner_product_identity(seed in 0u64..10_000, n in 1usize..8, k in 1usize..8) {
        let mut g = rng(seed);
        let v = random_cmat(&mut g, n, k);
        let x = random_cvec(&mut g, n * (n + 1) / 2);
        let r = random_cvec(&mut g, n * k);
        let ax = design_apply(&v, &x).unwrap();
        let ahr = design_adjoint(&v, &r).unwrap();
        let lhs: C64 = ax.iter().zip(&r).map(|(p, q)| p.conj() * q).sum();
        let rhs: C64 = x.iter().zip(&ahr).map(|(p, q)| p.conj() * q).sum();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + lhs.norm()));
    }

    #[test]
    fn design_is_linear(seed in 0u64..10_000, n in 1usize..7, k in 1usize..6, al in -2.0f64..2.0, be in -2.0f64..2.0) {
        let mut g = rng(seed);
        let v = random_cmat(&mut g, n, k);
        let m = n * (n + 1) / 2;
        let x = random_cvec(&mut g, m);
        let y = random_cvec(&mut g, m);
        let (a, b) = (C64::new(al, be), C64::new(be, -al));
        let comb: Vec<C64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let lhs = design_apply(&v, &comb).unwrap();
        let ax = design_apply(&v, &x).unwrap();
        let ay = design_apply(&v, &y).unwrap();
        let rhs: Vec<C64> = ax.iter().zip(&ay).map(|(p, q)| a * p + b * q).collect();
        prop_assert!(vdiff(&lhs, &rhs) <= 1e-12 * (1.0 + vnorm(&rhs)));
    }

    #[test]
    fn f_round_trip(seed in 0u64..10_000, n in 0usize..10) {
        let mut g = rng(seed);
        let a = random_symmetric(&mut g, n);
        prop_assert_eq!(f_unvec(&f_vec(&a).unwrap()).unwrap(), a);
    }
}
