use serde::Serialize;

use super::fit::fit_sparse;
use super::wellposed::identify_wellposed;
use super::{FitDiagnostics, Hyper, IdentifyOptions};
use crate::linalg::{norm_sq, pinv_full_row_rank};
use crate::netmodel::{AdmittanceMatrix, Terminal, TerminalIndex};
use crate::phasors::PhasorDataset;
use crate::solvers::{
    adaptive_lasso, lasso, FoldBuilder, LeastSquares, LinearOperator, Method, SparseSolution,
};
use crate::symvec::{fold, unvec_with, SymIndex};
use crate::{CMat, Error, Result, C64};

const PINV_TOL: f64 = 1e-12;

/// Split of the terminals into a linearly independent basis and the rest.
#[derive(Clone, Debug, Serialize)]
pub struct BasisSelection {
    /// Basis rows, ascending.
    pub basis: Vec<usize>,
    /// Remaining rows, ascending.
    pub dependent: Vec<usize>,
    /// `dependent` followed by `basis`.
    pub permutation: Vec<usize>,
    /// `|R_ii|` in pivot order, including the first rejected pivot if any.
    pub r_diag: Vec<f64>,
}

/// Householder QR with column pivoting on `Vᵀ`; pivots with
/// `|R_ii| > ε·|R_11|` form the basis. Ties pick the lower row index.
pub fn select_basis(v: &CMat, eps: f64) -> Result<BasisSelection> {
    let mut a = v.transpose();
    let (m, n) = a.shape();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut r_diag = Vec::new();
    let mut basis = Vec::new();
    let mut r11 = 0.0;
    for k in 0..m.min(n) {
        let mut best = k;
        let mut best_norm = -1.0;
        for j in k..n {
            let nj: f64 = a.view((k, j), (m - k, 1)).iter().map(|z| z.norm_sqr()).sum();
            if nj > best_norm || (nj == best_norm && perm[j] < perm[best]) {
                best = j;
                best_norm = nj;
            }
        }
        a.swap_columns(k, best);
        perm.swap(k, best);
        let norm = best_norm.sqrt();
        if k == 0 {
            if norm == 0.0 {
                return Err(Error::InvalidData("voltage matrix is identically zero".into()));
            }
            r11 = norm;
        }
        r_diag.push(norm);
        if norm <= eps * r11 {
            break;
        }
        basis.push(perm[k]);
        // reflect column k onto alpha·e₁
        let x0 = a[(k, k)];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        let mut hv: Vec<C64> = (k..m).map(|r| a[(r, k)]).collect();
        hv[0] -= alpha;
        let beta: f64 = hv.iter().map(|z| z.norm_sqr()).sum();
        if beta > 0.0 {
            for j in k..n {
                let s: C64 = hv.iter().enumerate().map(|(r, h)| h.conj() * a[(k + r, j)]).sum();
                let f = s * (2.0 / beta);
                for (r, h) in hv.iter().enumerate() {
                    a[(k + r, j)] -= h * f;
                }
            }
        }
    }
    basis.sort_unstable();
    let dependent: Vec<usize> = (0..n).filter(|r| basis.binary_search(r).is_err()).collect();
    let permutation = dependent.iter().chain(basis.iter()).copied().collect();
    Ok(BasisSelection {
        basis,
        dependent,
        permutation,
        r_diag,
    })
}

/// `X = V₁·V₂†`, so that `V₁ = X·V₂` on consistent data.
pub fn estimate_basis_coeff(v1: &CMat, v2: &CMat) -> Result<CMat> {
    if v1.ncols() != v2.ncols() {
        return Err(Error::Shape(format!("{} vs {} time slots", v1.ncols(), v2.ncols())));
    }
    if v1.nrows() == 0 {
        return Ok(CMat::zeros(0, v2.nrows()));
    }
    let pinv = pinv_full_row_rank(v2, PINV_TOL)?;
    Ok(v1 * pinv)
}

/// `C = I₂·V₂† − (V₂†)ᵀ·I₁ᵀ·X`.
fn constraint_rhs(x: &CMat, v2: &CMat, i1: &CMat, i2: &CMat) -> Result<CMat> {
    let pinv = pinv_full_row_rank(v2, PINV_TOL)?;
    Ok(i2 * &pinv - pinv.transpose() * i1.transpose() * x)
}

/// The map `[f(Y₁₁); f(Y₂₂)] ↦ vec(−Xᵀ·Y₁₁·X + Y₂₂)`.
#[derive(Clone, Debug)]
pub struct StackedConstraint {
    x: CMat,
    i1: SymIndex,
    i2: SymIndex,
}

impl StackedConstraint {
    pub fn new(x: CMat) -> Self {
        let (n1, r) = x.shape();
        StackedConstraint {
            x,
            i1: SymIndex::new(n1),
            i2: SymIndex::new(r),
        }
    }

    fn split(&self, z: &[C64]) -> (CMat, CMat) {
        let p1 = self.i1.len();
        (unvec_with(&self.i1, &z[..p1]), unvec_with(&self.i2, &z[p1..]))
    }
}

impl LinearOperator for StackedConstraint {
    fn shape(&self) -> (usize, usize) {
        let r = self.x.ncols();
        (r * r, self.i1.len() + self.i2.len())
    }

    fn apply(&self, z: &[C64]) -> Vec<C64> {
        let (y11, y22) = self.split(z);
        let m = y22 - self.x.transpose() * y11 * &self.x;
        m.as_slice().to_vec()
    }

    fn adjoint(&self, r: &[C64]) -> Vec<C64> {
        let k = self.x.ncols();
        let m = CMat::from_column_slice(k, k, r);
        let g11 = -(self.x.conjugate() * &m * self.x.adjoint());
        let mut out = fold(&g11);
        out.extend(fold(&m));
        out
    }
}

fn stacked_problem(x: &CMat, c: &CMat) -> Result<LeastSquares> {
    LeastSquares::new(Box::new(StackedConstraint::new(x.clone())), c.as_slice().to_vec())
}

fn split_solution(x: &CMat, z: &[C64]) -> (CMat, CMat) {
    StackedConstraint::new(x.clone()).split(z)
}

/// Sparse joint estimate of `Y₁₁` and `Y₂₂` from `−Xᵀ·Y₁₁·X + Y₂₂ = C` with
/// fixed hyperparameters. With no dependent rows `Y₂₂` is `C` symmetrized.
pub fn recover_y22_y11(
    x: &CMat,
    c: &CMat,
    opts: &IdentifyOptions,
) -> Result<(CMat, CMat, Option<SparseSolution>)> {
    let r = x.ncols();
    if c.shape() != (r, r) {
        return Err(Error::Shape(format!("C is {:?}, expected {r}x{r}", c.shape())));
    }
    if x.nrows() == 0 {
        let y22 = (c + c.transpose()).map(|z| z * 0.5);
        return Ok((CMat::zeros(0, 0), y22, None));
    }
    let lambda = match opts.lambda {
        Hyper::Value(l) => l,
        Hyper::Auto => {
            return Err(Error::InvalidParameter(
                "λ must be fixed here; lowrank_identify cross-validates it".into(),
            ))
        }
    };
    let ls = stacked_problem(x, c)?;
    let sol = match opts.method {
        Method::Lasso => lasso(&ls, lambda, None, &opts.lasso)?,
        Method::Adaptive => {
            let gamma = match opts.gamma {
                Hyper::Value(g) => g,
                Hyper::Auto => 1.0,
            };
            adaptive_lasso(&ls, lambda, gamma, &opts.lasso)?
        }
    };
    let (y11, y22) = split_solution(x, &sol.x);
    Ok((y11, y22, Some(sol)))
}

/// Least-squares `Y₁₂` from `I₂ = (Y₁₂ᵀ·X + Y₂₂)·V₂`.
pub fn recover_y12(x: &CMat, y22: &CMat, i2: &CMat, v2: &CMat) -> Result<CMat> {
    let (n1, r) = x.shape();
    if y22.shape() != (r, r) || v2.nrows() != r || i2.shape() != v2.shape() {
        return Err(Error::Shape("inconsistent block shapes".into()));
    }
    if n1 == 0 {
        return Ok(CMat::zeros(0, r));
    }
    // (X·V₂)ᵀ·Y₁₂ = (I₂ − Y₂₂·V₂)ᵀ
    let a = (x * v2).transpose();
    let b = (i2 - y22 * v2).transpose();
    let (m, n) = a.shape();
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * (m.max(n) as f64) * f64::EPSILON;
    svd.solve(&b, tol).map_err(|e| Error::Solver(format!("Y12 least squares failed: {e}")))
}

/// Result of a low-rank partitioned identification.
#[derive(Clone, Debug, Serialize)]
pub struct PartialIdentification {
    #[serde(skip)]
    pub index: TerminalIndex,
    pub rank: usize,
    pub basis: Vec<usize>,
    pub dependent: Vec<usize>,
    pub permutation: Vec<usize>,
    #[serde(skip)]
    pub x: CMat,
    #[serde(skip)]
    pub c: CMat,
    #[serde(skip)]
    pub y11: CMat,
    #[serde(skip)]
    pub y12: CMat,
    #[serde(skip)]
    pub y22: CMat,
    pub trusted_y11: bool,
    pub trusted_y12: bool,
    pub trusted_y22: bool,
    /// `‖V₁ − X·V₂‖_F / ‖V₁‖_F` on the data used.
    pub basis_residual: f64,
    pub fit: FitDiagnostics,
}

impl PartialIdentification {
    /// Terminals of the trusted `Y₂₂` block.
    pub fn trusted_terminals(&self) -> Vec<Terminal> {
        self.basis.iter().map(|&r| self.index.terminal(r)).collect()
    }

    /// The trusted block indexed by its own terminals.
    pub fn y22_matrix(&self) -> Result<AdmittanceMatrix> {
        AdmittanceMatrix::new(self.index.select(&self.basis), self.y22.clone())
    }

    /// All blocks placed back at their original rows and columns.
    pub fn assemble_full(&self) -> Result<AdmittanceMatrix> {
        let n = self.index.len();
        let mut y = CMat::zeros(n, n);
        for (a, &ra) in self.dependent.iter().enumerate() {
            for (b, &rb) in self.dependent.iter().enumerate() {
                y[(ra, rb)] = self.y11[(a, b)];
            }
            for (b, &rb) in self.basis.iter().enumerate() {
                y[(ra, rb)] = self.y12[(a, b)];
                y[(rb, ra)] = self.y12[(a, b)];
            }
        }
        for (a, &ra) in self.basis.iter().enumerate() {
            for (b, &rb) in self.basis.iter().enumerate() {
                y[(ra, rb)] = self.y22[(a, b)];
            }
        }
        AdmittanceMatrix::new(self.index.clone(), y)
    }
}

/// Stacked constraint problem rebuilt from a subset of time slots with `X` held fixed.
struct LowRankFolds<'a> {
    x: &'a CMat,
    v2: CMat,
    i1: CMat,
    i2: CMat,
}

impl FoldBuilder for LowRankFolds<'_> {
    fn n_slots(&self) -> usize {
        self.v2.ncols()
    }

    fn build(&self, slots: &[usize]) -> Result<LeastSquares> {
        let c = constraint_rhs(
            self.x,
            &self.v2.select_columns(slots),
            &self.i1.select_columns(slots),
            &self.i2.select_columns(slots),
        )?;
        stacked_problem(self.x, &c)
    }
}

/// Identifies the block of `Y` that the data determine despite a rank-deficient
/// voltage matrix. Full-rank data reduce to [`identify_wellposed`].
pub fn lowrank_identify(ds: &PhasorDataset, opts: &IdentifyOptions) -> Result<PartialIdentification> {
    if ds.slots() < 2 {
        return Err(Error::IllPosed(format!("{} time slot(s) is not enough data", ds.slots())));
    }
    let sel = select_basis(ds.v(), opts.rank_tol)?;
    let n = ds.dim();
    let r = sel.basis.len();
    if r == n {
        let (y, fit) = identify_wellposed(ds, opts)?;
        return Ok(PartialIdentification {
            index: ds.index().clone(),
            rank: r,
            basis: sel.basis,
            dependent: Vec::new(),
            permutation: sel.permutation,
            x: CMat::zeros(0, n),
            c: CMat::zeros(0, 0),
            y11: CMat::zeros(0, 0),
            y12: CMat::zeros(0, n),
            y22: y.into_matrix(),
            trusted_y11: false,
            trusted_y12: false,
            trusted_y22: true,
            basis_residual: 0.0,
            fit,
        });
    }
    let v1 = ds.v().select_rows(&sel.dependent);
    let v2 = ds.v().select_rows(&sel.basis);
    let i1 = ds.i().select_rows(&sel.dependent);
    let i2 = ds.i().select_rows(&sel.basis);
    let x = estimate_basis_coeff(&v1, &v2)?;
    let basis_residual = (norm_sq(&(&v1 - &x * &v2)) / norm_sq(&v1).max(f64::MIN_POSITIVE)).sqrt();
    let c = constraint_rhs(&x, &v2, &i1, &i2)?;
    let folds = LowRankFolds {
        x: &x,
        v2: v2.clone(),
        i1,
        i2: i2.clone(),
    };
    let (sol, fit) = fit_sparse(&folds, opts)?;
    let (y11, y22) = split_solution(&x, &sol.x);
    let y12 = recover_y12(&x, &y22, &i2, &v2)?;
    Ok(PartialIdentification {
        index: ds.index().clone(),
        rank: r,
        basis: sel.basis,
        dependent: sel.dependent,
        permutation: sel.permutation,
        x,
        c,
        y11,
        y12,
        y22,
        trusted_y11: false,
        trusted_y12: false,
        trusted_y22: true,
        basis_residual,
        fit,
    })
}
