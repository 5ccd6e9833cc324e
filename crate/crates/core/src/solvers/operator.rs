use crate::linalg::{compress_rows, vec_norm_sq};
use crate::symvec::SymDesign;
use crate::{CMat, Error, Result, C64};

/// A complex linear map given by its action and the action of its adjoint.
pub trait LinearOperator: Send + Sync {
    /// `(rows, cols)`.
    fn shape(&self) -> (usize, usize);
    fn apply(&self, x: &[C64]) -> Vec<C64>;
    fn adjoint(&self, r: &[C64]) -> Vec<C64>;

    /// Dense matrix, column by column. Intended for small problems.
    fn materialize(&self) -> CMat {
        let (m, n) = self.shape();
        let mut a = CMat::zeros(m, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e[j] = C64::new(1.0, 0.0);
            let col = self.apply(&e);
            a.column_mut(j).copy_from_slice(&col);
            e[j] = C64::new(0.0, 0.0);
        }
        a
    }
}

/// An explicit dense matrix.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    a: CMat,
}

impl DenseOperator {
    pub fn new(a: CMat) -> Self {
        DenseOperator { a }
    }

    pub fn matrix(&self) -> &CMat {
        &self.a
    }
}

impl LinearOperator for DenseOperator {
    fn shape(&self) -> (usize, usize) {
        self.a.shape()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let x = nalgebra::DVector::from_column_slice(x);
        (&self.a * x).as_slice().to_vec()
    }

    fn adjoint(&self, r: &[C64]) -> Vec<C64> {
        let r = nalgebra::DVector::from_column_slice(r);
        (self.a.adjoint() * r).as_slice().to_vec()
    }

    fn materialize(&self) -> CMat {
        self.a.clone()
    }
}

/// A least-squares data term `‖A·x − b‖² + offset`.
///
/// The constant `offset` lets a compressed problem report the same loss as the
/// uncompressed one it stands for.
pub struct LeastSquares {
    op: Box<dyn LinearOperator>,
    b: Vec<C64>,
    offset: f64,
}

impl LeastSquares {
    pub fn new(op: Box<dyn LinearOperator>, b: Vec<C64>) -> Result<Self> {
        if op.shape().0 != b.len() {
            return Err(Error::Shape(format!(
                "operator has {} rows, right-hand side has {}",
                op.shape().0,
                b.len()
            )));
        }
        Ok(LeastSquares { op, b, offset: 0.0 })
    }

    pub fn dense(a: CMat, b: Vec<C64>) -> Result<Self> {
        Self::new(Box::new(DenseOperator::new(a)), b)
    }

    /// `‖f⁻¹(x)·V − T‖²_F` over symmetric coefficient vectors `x`, with the
    /// data compressed to `dim` columns whenever `K > dim`.
    pub fn symmetric_fit(v: &CMat, target: &CMat) -> Result<Self> {
        if v.shape() != target.shape() {
            return Err(Error::Shape(format!(
                "voltage data {:?} and target {:?} differ in shape",
                v.shape(),
                target.shape()
            )));
        }
        let c = compress_rows(v, target);
        let b = c.j.as_slice().to_vec();
        Ok(LeastSquares {
            op: Box::new(SymDesign::new(c.l)),
            b,
            offset: c.offset,
        })
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn operator(&self) -> &dyn LinearOperator {
        self.op.as_ref()
    }

    pub fn rhs(&self) -> &[C64] {
        &self.b
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn n_coef(&self) -> usize {
        self.op.shape().1
    }

    pub fn residual(&self, x: &[C64]) -> Vec<C64> {
        let mut r = self.op.apply(x);
        for (ri, bi) in r.iter_mut().zip(&self.b) {
            *ri -= bi;
        }
        r
    }

    /// `‖A·x − b‖² + offset`.
    pub fn loss(&self, x: &[C64]) -> f64 {
        vec_norm_sq(&self.residual(x)) + self.offset
    }
}
