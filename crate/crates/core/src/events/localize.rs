use serde::Serialize;

use crate::linalg::{lstsq, norm_sq, numerical_rank};
use crate::netmodel::{AdmittanceMatrix, Terminal};
use crate::phasors::PhasorDataset;
use crate::solvers::{adaptive_weights, initial_estimate, lasso, LassoOptions, LeastSquares, LinearOperator};
use crate::symvec::{f_unvec, SymDesign, SymIndex};
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Debug)]
pub struct LocalizeOptions {
    /// `λ` as a fraction of the smallest `λ` that zeroes the weighted solution.
    pub lambda_rel: f64,
    pub gamma: f64,
    /// Entries below `support_tol · max|ΔŶ|` are dropped from the support.
    pub support_tol: f64,
    /// Largest relative Ohm's-law residual accepted for a model update.
    pub residual_tol: f64,
    pub lasso: LassoOptions,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions {
            lambda_rel: 1e-6,
            gamma: 1.0,
            support_tol: 1e-3,
            residual_tol: 1e-6,
            lasso: LassoOptions::default(),
        }
    }
}

/// Estimated admittance change over a post-event window.
#[derive(Clone, Debug, Serialize)]
pub struct Localization {
    #[serde(skip)]
    pub delta: AdmittanceMatrix,
    /// Changed entries `(row, col)` with row ≥ col in terminal order.
    pub support: Vec<(Terminal, Terminal)>,
    pub values: Vec<C64>,
    /// `‖(Y₀ + ΔŶ)·V − I‖_F / ‖I‖_F` on the window.
    pub residual: f64,
    /// Whether `residual ≤ residual_tol`.
    pub passed: bool,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub window: usize,
}

/// Weighted lasso on `ΔY·V ≈ I − Y₀·V` over the window's slots.
pub fn localize(y0: &AdmittanceMatrix, window: &PhasorDataset, opts: &LocalizeOptions) -> Result<Localization> {
    if y0.index() != window.index() {
        return Err(Error::Shape(format!(
            "model has {} terminals, window has {} (or they differ)",
            y0.dim(),
            window.dim()
        )));
    }
    let v = window.v();
    let i = window.i();
    let target = i - y0.matrix() * v;
    let dim = y0.dim();
    let scale = norm_sq(i).sqrt().max(f64::MIN_POSITIVE);
    let finish = |delta: CMat, lambda: f64, iterations: usize, converged: bool| -> Result<Localization> {
        let idx = SymIndex::new(dim);
        let dmax = idx.iter().map(|(r, c)| delta[(r, c)].norm()).fold(0.0, f64::max);
        let mut kept = CMat::zeros(dim, dim);
        let mut support = Vec::new();
        let mut values = Vec::new();
        for (r, c) in idx.iter() {
            let d = delta[(r, c)];
            if dmax > 0.0 && d.norm() > opts.support_tol * dmax {
                kept[(r, c)] = d;
                kept[(c, r)] = d;
                support.push((window.index().terminal(r), window.index().terminal(c)));
                values.push(d);
            }
        }
        let residual = norm_sq(&((y0.matrix() + &kept) * v - i)).sqrt() / scale;
        Ok(Localization {
            delta: AdmittanceMatrix::new(window.index().clone(), kept)?,
            support,
            values,
            residual,
            passed: residual <= opts.residual_tol,
            lambda,
            iterations,
            converged,
            window: window.slots(),
        })
    };
    if norm_sq(&target).sqrt() <= 1e-14 * scale {
        return finish(CMat::zeros(dim, dim), 0.0, 0, true);
    }
    let (basis, whitened) = whiten(v, &target);
    let ls = LeastSquares::symmetric_fit(&basis, &whitened)?;
    let init = initial_estimate(&ls)?;
    let w = adaptive_weights(&init.x, opts.gamma)?;
    let corr = ls.operator().adjoint(ls.rhs());
    let lambda_max = corr.iter().zip(&w).map(|(g, wi)| 2.0 * g.norm() / wi).fold(0.0, f64::max);
    let lambda = opts.lambda_rel * lambda_max;
    let mut lo = opts.lasso.clone();
    if lo.x0.is_none() {
        lo.x0 = Some(init.x);
    }
    let sol = lasso(&ls, lambda, Some(&w), &lo)?;
    let x = debias(&ls, &sol.x, opts.support_tol)?;
    finish(f_unvec(&x)?, lambda, sol.iterations, sol.converged)
}

/// Least-squares refit restricted to the coefficients above
/// `support_tol · max|x|`, removing the shrinkage the penalty leaves on them.
fn debias(ls: &LeastSquares, x: &[C64], support_tol: f64) -> Result<Vec<C64>> {
    let xmax = x.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let support: Vec<usize> = (0..x.len()).filter(|&j| xmax > 0.0 && x[j].norm() > support_tol * xmax).collect();
    if support.is_empty() {
        return Ok(x.to_vec());
    }
    let (rows, cols) = ls.operator().shape();
    let mut design = CMat::zeros(rows, support.len());
    let mut unit = vec![C64::new(0.0, 0.0); cols];
    for (c, &j) in support.iter().enumerate() {
        unit[j] = C64::new(1.0, 0.0);
        design.set_column(c, &nalgebra::DVector::from_vec(ls.operator().apply(&unit)));
        unit[j] = C64::new(0.0, 0.0);
    }
    let (fit, _) = lstsq(&design, ls.rhs())?;
    let mut out = vec![C64::new(0.0, 0.0); cols];
    for (&j, v) in support.iter().zip(fit) {
        out[j] = v;
    }
    Ok(out)
}

/// Rewrites `ΔY·V = T` as `ΔY·U = T·W·Σ⁻¹` over the numerically nonzero
/// singular triplets of `V`. Exact solutions are unchanged while the design
/// gets orthonormal columns, which FISTA needs on strongly correlated windows.
fn whiten(v: &CMat, target: &CMat) -> (CMat, CMat) {
    let svd = v.clone().svd(true, true);
    let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let tol = smax * 1e-12 * v.nrows().max(v.ncols()) as f64;
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] > tol)
        .collect();
    let basis = CMat::from_fn(v.nrows(), keep.len(), |r, c| u[(r, keep[c])]);
    let whitened = CMat::from_fn(target.nrows(), keep.len(), |r, c| {
        let k = keep[c];
        let mut acc = C64::new(0.0, 0.0);
        for t in 0..target.ncols() {
            acc += target[(r, t)] * vt[(k, t)].conj();
        }
        acc / svd.singular_values[k]
    });
    (basis, whitened)
}

/// Window length for localizing `s` changed lower-triangle entries in a
/// `dim`-terminal model: `max(ceil((2s+1)/dim)·margin, dim, 2)`.
///
/// The first term counts equations against the `2s` needed for uniqueness of an
/// `s`-sparse solution. Exact spark computation is intractable, and load-driven
/// windows are so correlated that this count alone falls well short in
/// practice, so the window is also made long enough to determine every
/// coefficient of the symmetric parameterization.
pub fn samples_needed(s: usize, dim: usize, margin: usize) -> usize {
    let dim = dim.max(1);
    let sparse = (2 * s.max(1) + 1).div_ceil(dim) * margin.max(1);
    sparse.max(dim).max(2)
}

/// Numerical rank of the dense design on a window and whether it reaches `2s`
/// (necessary for every `2s` columns to be independent). `None` when the
/// design is too large to materialize.
pub fn design_rank_check(v: &CMat, s: usize) -> Option<(usize, bool)> {
    let design = SymDesign::new(v.clone());
    let (rows, cols) = design.shape();
    if cols > 2000 || rows * cols > 4_000_000 {
        return None;
    }
    let rank = numerical_rank(&design.materialize(), 1e-10);
    Some((rank, rank >= (2 * s).min(cols)))
}
