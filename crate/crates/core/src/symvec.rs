//! Lower-triangular parameterization of complex-symmetric matrices.
//!
//! `f(A) = [a₁₁, a₂₁, …, a_N1, a₂₂, …, a_NN]` stacks the lower triangle column by
//! column. The duplication matrix `Q` satisfies `vec(A) = Q·f(A)`, and the
//! regression design `A = (Vᵀ ⊗ 1)·Q` maps `f(Y)` to `vec(Y·V)`. The design is
//! only ever applied matrix-free; its dense form is `dim²·K × (dim²+dim)/2`.

use crate::solvers::LinearOperator;
use crate::{CMat, Error, Result, C64};

/// Position map between `(i, j)`, `i ≥ j`, and `0..(N²+N)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SymIndex {
    n: usize,
}

impl SymIndex {
    pub fn new(n: usize) -> Self {
        SymIndex { n }
    }

    /// Recovers `N` from a parameter-vector length.
    pub fn from_len(len: usize) -> Result<Self> {
        let n = (((8 * len + 1) as f64).sqrt() as usize).saturating_sub(1) / 2;
        for cand in n.saturating_sub(1)..=n + 1 {
            if cand * (cand + 1) / 2 == len {
                return Ok(SymIndex { n: cand });
            }
        }
        Err(Error::Shape(format!("{len} is not a triangular number")))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Position of entry `(i, j)`; order of the pair does not matter.
    pub fn pos(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        j * self.n - j * j.saturating_sub(1) / 2 + (i - j)
    }

    /// `(i, j)` with `i ≥ j` at position `k`.
    pub fn coords(&self, k: usize) -> (usize, usize) {
        let mut j = 0;
        let mut start = 0;
        while start + (self.n - j) <= k {
            start += self.n - j;
            j += 1;
        }
        (j + (k - start), j)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |j| (j..self.n).map(move |i| (i, j)))
    }
}

fn check_symmetric(a: &CMat) -> Result<()> {
    if !a.is_square() {
        return Err(Error::Shape(format!("{}x{} matrix is not square", a.nrows(), a.ncols())));
    }
    let n = a.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let (u, v) = (a[(i, j)], a[(j, i)]);
            let scale = u.norm().max(v.norm()).max(1.0);
            if (u - v).norm() > 1e-12 * scale {
                return Err(Error::InvalidMatrix(format!("matrix is not symmetric at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// `f(A)`: stacks the lower triangle of a symmetric matrix.
pub fn f_vec(a: &CMat) -> Result<Vec<C64>> {
    check_symmetric(a)?;
    let idx = SymIndex::new(a.nrows());
    Ok(idx.iter().map(|(i, j)| a[(i, j)]).collect())
}

/// Inverse of [`f_vec`].
pub fn f_unvec(x: &[C64]) -> Result<CMat> {
    let idx = SymIndex::from_len(x.len())?;
    Ok(unvec_with(&idx, x))
}

pub(crate) fn unvec_with(idx: &SymIndex, x: &[C64]) -> CMat {
    let n = idx.dim();
    let mut a = CMat::zeros(n, n);
    for (k, (i, j)) in idx.iter().enumerate() {
        a[(i, j)] = x[k];
        a[(j, i)] = x[k];
    }
    a
}

/// `Qᵀ·vec(M)` for a square `M`: off-diagonal positions collect `M_ij + M_ji`.
pub fn fold(m: &CMat) -> Vec<C64> {
    let idx = SymIndex::new(m.nrows());
    idx.iter()
        .map(|(i, j)| if i == j { m[(i, i)] } else { m[(i, j)] + m[(j, i)] })
        .collect()
}

/// The binary duplication matrix `Q` (`N² × (N²+N)/2`), with `vec(A) = Q·f(A)`.
pub fn duplication_matrix(n: usize) -> nalgebra::DMatrix<f64> {
    let idx = SymIndex::new(n);
    let mut q = nalgebra::DMatrix::zeros(n * n, idx.len());
    for col in 0..n {
        for row in 0..n {
            q[(row + col * n, idx.pos(row, col))] = 1.0;
        }
    }
    q
}

/// `A·x = vec(f⁻¹(x)·V)` without forming `Q` or the Kronecker product.
pub fn design_apply(v: &CMat, x: &[C64]) -> Result<Vec<C64>> {
    let idx = SymIndex::new(v.nrows());
    if x.len() != idx.len() {
        return Err(Error::Shape(format!(
            "coefficient vector has {} entries, expected {}",
            x.len(),
            idx.len()
        )));
    }
    let y = unvec_with(&idx, x);
    Ok((y * v).as_slice().to_vec())
}

/// `Aᴴ·r = Qᵀ·vec(R·Vᴴ)` where `r = vec(R)`.
pub fn design_adjoint(v: &CMat, r: &[C64]) -> Result<Vec<C64>> {
    let (dim, k) = v.shape();
    if r.len() != dim * k {
        return Err(Error::Shape(format!(
            "residual has {} entries, expected {}",
            r.len(),
            dim * k
        )));
    }
    let rm = CMat::from_column_slice(dim, k, r);
    Ok(fold(&(rm * v.adjoint())))
}

/// The symmetric regression design `x ↦ vec(f⁻¹(x)·V)` as a linear operator.
#[derive(Clone, Debug)]
pub struct SymDesign {
    v: CMat,
    idx: SymIndex,
}

impl SymDesign {
    pub fn new(v: CMat) -> Self {
        let idx = SymIndex::new(v.nrows());
        SymDesign { v, idx }
    }

    pub fn data(&self) -> &CMat {
        &self.v
    }
}

impl LinearOperator for SymDesign {
    fn shape(&self) -> (usize, usize) {
        (self.v.nrows() * self.v.ncols(), self.idx.len())
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let y = unvec_with(&self.idx, x);
        (y * &self.v).as_slice().to_vec()
    }

    fn adjoint(&self, r: &[C64]) -> Vec<C64> {
        let (dim, k) = self.v.shape();
        let rm = CMat::from_column_slice(dim, k, r);
        fold(&(rm * self.v.adjoint()))
    }
}
