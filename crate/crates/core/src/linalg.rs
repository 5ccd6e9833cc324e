//! Small dense complex linear-algebra helpers shared by the solvers and pipelines.

use crate::{CMat, Error, Result, C64};

/// Squared Frobenius norm.
pub fn norm_sq(m: &CMat) -> f64 {
    m.iter().map(|v| v.norm_sqr()).sum()
}

pub fn vec_norm_sq(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum()
}

pub fn vec_norm(x: &[C64]) -> f64 {
    vec_norm_sq(x).sqrt()
}

/// Column-major flattening (`vec`).
pub fn vectorize(m: &CMat) -> Vec<C64> {
    m.as_slice().to_vec()
}

pub fn unvectorize(x: &[C64], rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, x)
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    // work on the smaller Gram side via a thin QR first when very wide
    let core = if m.ncols() > 2 * m.nrows() {
        let qr = m.adjoint().qr();
        qr.r()
    } else if m.nrows() > 2 * m.ncols() {
        m.clone().qr().r()
    } else {
        m.clone()
    };
    let mut s: Vec<f64> = core.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Row-space compression of a `Y·V ≈ I` regression.
///
/// For `K > dim` the data are replaced by `(L, J)` with `V = L·W`, `W` having
/// orthonormal rows and `J = I·Wᴴ`, so that
/// `‖Y·V − I‖²_F = ‖Y·L − J‖²_F + offset` for every `Y`.
pub struct Compressed {
    pub l: CMat,
    pub j: CMat,
    pub offset: f64,
}

pub fn compress_rows(v: &CMat, i: &CMat) -> Compressed {
    let (dim, k) = v.shape();
    if k <= dim {
        return Compressed {
            l: v.clone(),
            j: i.clone(),
            offset: 0.0,
        };
    }
    let qr = v.adjoint().qr();
    let q = qr.q();
    let l = qr.r().adjoint();
    let j = i * &q;
    let offset = (norm_sq(i) - norm_sq(&j)).max(0.0);
    Compressed { l, j, offset }
}

/// Minimum-norm least-squares solution of `A·x ≈ b` via SVD.
/// Returns the solution and the numerical rank used.
pub fn lstsq(a: &CMat, b: &[C64]) -> Result<(Vec<C64>, usize)> {
    let (m, n) = a.shape();
    if b.len() != m {
        return Err(Error::Shape(format!("rhs has {} rows, matrix has {m}", b.len())));
    }
    if n == 0 {
        return Ok((Vec::new(), 0));
    }
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * (m.max(n) as f64) * f64::EPSILON;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank == 0 {
        return Ok((vec![C64::new(0.0, 0.0); n], 0));
    }
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = svd
        .solve(&rhs, tol)
        .map_err(|e| Error::Solver(format!("svd solve failed: {e}")))?;
    Ok((x.iter().copied().collect(), rank))
}

/// Pseudo-inverse of a full-row-rank matrix `M` (`r × k`, `r ≤ k`):
/// `M† = Mᴴ (M Mᴴ)⁻¹`, computed through a QR factorization of `Mᴴ`.
pub fn pinv_full_row_rank(m: &CMat, rel_tol: f64) -> Result<CMat> {
    let (r, k) = m.shape();
    if r == 0 {
        return Ok(CMat::zeros(k, 0));
    }
    if r > k {
        return Err(Error::IllPosed(format!("{r}x{k} matrix cannot have full row rank")));
    }
    let qr = m.adjoint().qr();
    let q = qr.q();
    let rr = qr.r();
    let dmax = (0..r).map(|i| rr[(i, i)].norm()).fold(0.0, f64::max);
    if (0..r).any(|i| rr[(i, i)].norm() <= rel_tol * dmax) || dmax == 0.0 {
        return Err(Error::IllPosed("matrix is rank deficient".into()));
    }
    // M = Rᴴ Qᴴ  ⇒  M† = Q R⁻ᴴ
    let rinv = rr
        .solve_upper_triangular(&CMat::identity(r, r))
        .ok_or_else(|| Error::IllPosed("triangular factor is singular".into()))?;
    Ok(q * rinv.adjoint())
}

/// Solves the square system `A x = b` by LU; `None` if singular.
pub fn solve_square(a: &CMat, b: &CMat) -> Option<CMat> {
    a.clone().lu().solve(b)
}

/// Number of singular values above `tol · σ_max`.
pub fn numerical_rank(m: &CMat, tol: f64) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&v| v > tol * smax).count(),
        _ => 0,
    }
}
