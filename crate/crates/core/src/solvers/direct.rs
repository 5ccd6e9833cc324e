use super::LeastSquares;
use crate::linalg::lstsq;
use crate::{CMat, Error, Result, C64};

/// Least-squares solution with its rank diagnostics.
#[derive(Clone, Debug)]
pub struct OlsSolution {
    pub x: Vec<C64>,
    pub rank: usize,
    /// Set when `A` lacks full column rank; `x` is then the minimum-norm solution.
    pub rank_deficient: bool,
}

/// Ordinary least squares through an SVD of the materialized operator.
pub fn ols(ls: &LeastSquares) -> Result<OlsSolution> {
    let a = ls.operator().materialize();
    let (x, rank) = lstsq(&a, ls.rhs())?;
    Ok(OlsSolution {
        x,
        rank,
        rank_deficient: rank < a.ncols(),
    })
}

/// Ridge regression `min ‖A·x − b‖² + λ‖x‖²`, solved as the stacked
/// least-squares problem `[A; √λ·1]·x ≈ [b; 0]` by Householder QR.
pub fn ridge(ls: &LeastSquares, lambda: f64) -> Result<Vec<C64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge λ must be positive, got {lambda}")));
    }
    let a = ls.operator().materialize();
    let (m, n) = a.shape();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut aug = CMat::zeros(m + n, n);
    aug.rows_mut(0, m).copy_from(&a);
    let s = C64::new(lambda.sqrt(), 0.0);
    for j in 0..n {
        aug[(m + j, j)] = s;
    }
    let mut rhs = nalgebra::DVector::zeros(m + n);
    rhs.rows_mut(0, m).copy_from_slice(ls.rhs());
    let qr = aug.qr();
    let qtb = qr.q().adjoint() * rhs;
    let x = qr
        .r()
        .solve_upper_triangular(&qtb)
        .ok_or_else(|| Error::Solver("ridge triangular solve failed".into()))?;
    Ok(x.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_cases() {
        let b = vec![C64::new(1.0, 2.0), C64::new(-3.0, 0.5)];
        let ls = LeastSquares::dense(CMat::identity(2, 2), b.clone()).unwrap();
        let sol = ols(&ls).unwrap();
        assert!(!sol.rank_deficient);
        for (x, y) in sol.x.iter().zip(&b) {
            assert!((x - y).norm() < 1e-14);
        }
        let x = ridge(&ls, 0.5).unwrap();
        for (x, y) in x.iter().zip(&b) {
            assert!((x - y / 1.5).norm() < 1e-14);
        }
        assert!(ridge(&ls, 0.0).is_err());
        assert!(ridge(&ls, -1.0).is_err());
        let big = ridge(&ls, 1e16).unwrap();
        assert!(big.iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn rank_deficient_is_flagged() {
        let a = CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(2.0, 0.0)]);
        let ls = LeastSquares::dense(a, vec![C64::new(1.0, 0.0), C64::new(2.0, 0.0)]).unwrap();
        let sol = ols(&ls).unwrap();
        assert!(sol.rank_deficient);
        assert_eq!(sol.rank, 1);
        // minimum norm splits the weight evenly
        assert!((sol.x[0] - C64::new(0.5, 0.0)).norm() < 1e-12);
        assert!((sol.x[1] - C64::new(0.5, 0.0)).norm() < 1e-12);
    }
}
