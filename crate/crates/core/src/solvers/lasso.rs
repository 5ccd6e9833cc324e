use serde::Serialize;

use super::{ols, ridge, LeastSquares, LinearOperator};
use crate::linalg::{vec_norm, vec_norm_sq};
use crate::{Error, Result, C64};

/// Upper cap on adaptive weights (stands in for `1/0`).
pub const WEIGHT_MAX: f64 = 1e12;
/// Lower floor on adaptive weights.
pub const WEIGHT_MIN: f64 = 1e-12;

const RIDGE_INIT_LAMBDA: f64 = 1e-6;
const STALL_WINDOW: usize = 10;

/// Settings for the accelerated proximal-gradient solver.
#[derive(Clone, Debug)]
pub struct LassoOptions {
    pub max_iter: usize,
    /// Relative tolerance on the prox fixed-point residual.
    pub tol: f64,
    /// Relative objective decrease over a 10-iteration window counted as a
    /// stall; a stall resets momentum but never ends the run.
    pub stall_tol: f64,
    pub power_iters: usize,
    pub monotone_restart: bool,
    /// Starting point; zero when absent.
    pub x0: Option<Vec<C64>>,
}

impl Default for LassoOptions {
    fn default() -> Self {
        LassoOptions {
            max_iter: 50_000,
            tol: 1e-10,
            stall_tol: 1e-14,
            power_iters: 20,
            monotone_restart: true,
            x0: None,
        }
    }
}

/// Lasso solution with solver diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct SparseSolution {
    pub x: Vec<C64>,
    pub lambda: f64,
    pub gamma: Option<f64>,
    pub weights: Vec<f64>,
    /// `‖A·x − b‖² + λ·Σ wᵢ|xᵢ|` at the returned `x`.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final step size `1/L`.
    pub step: f64,
    /// `‖x − prox(x − step·∇f(x))‖` at the returned `x`.
    pub fixed_point_residual: f64,
    pub restarts: usize,
}

/// Phase-preserving shrinkage: `0` if `|z| ≤ τ`, else `z·(1 − τ/|z|)`.
pub fn complex_soft_threshold(z: C64, tau: f64) -> C64 {
    let m = z.norm();
    if m <= tau {
        C64::new(0.0, 0.0)
    } else {
        z * (1.0 - tau / m)
    }
}

fn penalty(x: &[C64], w: &[f64]) -> f64 {
    x.iter().zip(w).map(|(xi, wi)| wi * xi.norm()).sum()
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `2·λ_max(AᴴA)` by power iteration from a fixed start vector.
fn lipschitz_estimate(op: &dyn LinearOperator, iters: usize) -> f64 {
    let n = op.shape().1;
    let mut v: Vec<C64> = (0..n)
        .map(|j| C64::new(1.0 + 0.37 * ((j * 7919) % 13) as f64, 0.21 * ((j * 104_729) % 11) as f64))
        .collect();
    let mut est = 0.0;
    for _ in 0..iters.max(1) {
        let nv = vec_norm(&v);
        if nv == 0.0 || !nv.is_finite() {
            break;
        }
        v.iter_mut().for_each(|z| *z /= nv);
        let w = op.adjoint(&op.apply(&v));
        est = vec_norm(&w);
        v = w;
    }
    2.0 * est
}

struct Problem<'a> {
    ls: &'a LeastSquares,
    lambda: f64,
    w: &'a [f64],
}

impl Problem<'_> {
    fn smooth(&self, ax: &[C64]) -> f64 {
        ax.iter().zip(self.ls.rhs()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
    }

    fn objective(&self, x: &[C64], ax: &[C64]) -> f64 {
        self.smooth(ax) + self.ls.offset() + self.lambda * penalty(x, self.w)
    }

    fn gradient(&self, ax: &[C64]) -> Vec<C64> {
        let r = sub(ax, self.ls.rhs());
        self.ls.operator().adjoint(&r).into_iter().map(|g| g * 2.0).collect()
    }

    fn prox_step(&self, y: &[C64], g: &[C64], lip: f64) -> Vec<C64> {
        y.iter()
            .zip(g)
            .zip(self.w)
            .map(|((yi, gi), wi)| complex_soft_threshold(yi - gi / lip, self.lambda * wi / lip))
            .collect()
    }

    fn fixed_point_residual(&self, x: &[C64], ax: &[C64], lip: f64) -> f64 {
        let g = self.gradient(ax);
        vec_norm(&sub(x, &self.prox_step(x, &g, lip)))
    }
}

fn validate(ls: &LeastSquares, lambda: f64, w: &[f64]) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("λ must be finite and ≥ 0, got {lambda}")));
    }
    if w.len() != ls.n_coef() {
        return Err(Error::Shape(format!("{} weights for {} coefficients", w.len(), ls.n_coef())));
    }
    if w.iter().any(|&wi| !(wi > 0.0 && wi.is_finite())) {
        return Err(Error::InvalidParameter("weights must be positive and finite".into()));
    }
    Ok(())
}

/// Weighted lasso `min ‖A·x − b‖² + λ·Σ wᵢ|xᵢ|` by FISTA with monotone and
/// gradient restarts. Unit weights when `weights` is `None`.
pub fn lasso(
    ls: &LeastSquares,
    lambda: f64,
    weights: Option<&[f64]>,
    opts: &LassoOptions,
) -> Result<SparseSolution> {
    let n = ls.n_coef();
    let unit;
    let w = match weights {
        Some(w) => w,
        None => {
            unit = vec![1.0; n];
            &unit
        }
    };
    validate(ls, lambda, w)?;
    let prob = Problem { ls, lambda, w };
    let op = ls.operator();

    let mut x = match &opts.x0 {
        Some(x0) if x0.len() == n => x0.clone(),
        Some(x0) => {
            return Err(Error::Shape(format!("start point has {} entries, expected {n}", x0.len())))
        }
        None => vec![C64::new(0.0, 0.0); n],
    };
    let mut ax = op.apply(&x);
    let mut f_x = prob.objective(&x, &ax);

    let mut lip = 1.05 * lipschitz_estimate(op, opts.power_iters);
    if n == 0 || lip == 0.0 || !lip.is_finite() {
        if !lip.is_finite() {
            return Err(Error::Solver(format!("Lipschitz estimate failed ({lip})")));
        }
        // A = 0: the penalty alone decides, and zero minimizes it
        let x = vec![C64::new(0.0, 0.0); n];
        let ax = op.apply(&x);
        return Ok(SparseSolution {
            objective: prob.objective(&x, &ax),
            x,
            lambda,
            gamma: None,
            weights: w.to_vec(),
            iterations: 0,
            converged: true,
            step: f64::INFINITY,
            fixed_point_residual: 0.0,
            restarts: 0,
        });
    }

    let mut y = x.clone();
    let mut ay = ax.clone();
    let mut t = 1.0f64;
    let mut history: Vec<f64> = vec![f_x];
    let mut restarts = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut momentum_free = true;

    while iterations < opts.max_iter {
        iterations += 1;
        let g = prob.gradient(&ay);
        let (x_new, ax_new) = loop {
            let cand = prob.prox_step(&y, &g, lip);
            let acand = op.apply(&cand);
            let d2 = vec_norm_sq(&sub(&cand, &y));
            let ad2 = vec_norm_sq(&sub(&acand, &ay));
            if ad2 <= 0.5 * lip * d2 * (1.0 + 1e-12) {
                break (cand, acand);
            }
            lip *= 1.5;
            if !lip.is_finite() {
                return Err(Error::Solver(format!(
                    "step-size backtracking diverged after {iterations} iterations (objective {f_x:e})"
                )));
            }
        };
        let f_new = prob.objective(&x_new, &ax_new);
        if !f_new.is_finite() {
            return Err(Error::Solver(format!(
                "objective became non-finite at iteration {iterations} (L = {lip:e})"
            )));
        }

        // a rise after a plain proximal step is roundoff in f, not a bad
        // step; keep it and let the fixed-point test decide
        if opts.monotone_restart && f_new > f_x && !momentum_free {
            y.clone_from(&x);
            ay.clone_from(&ax);
            t = 1.0;
            restarts += 1;
            momentum_free = true;
            continue;
        }

        // gradient-based restart when the momentum points uphill
        let uphill: f64 = y
            .iter()
            .zip(&x_new)
            .zip(&x)
            .map(|((yi, xn), xo)| ((yi - xn).conj() * (xn - xo)).re)
            .sum();
        if uphill > 0.0 {
            t = 1.0;
        }
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let beta = (t - 1.0) / t_new;
        momentum_free = beta == 0.0;
        for k in 0..n {
            y[k] = x_new[k] + (x_new[k] - x[k]) * beta;
        }
        for k in 0..ay.len() {
            ay[k] = ax_new[k] + (ax_new[k] - ax[k]) * beta;
        }
        t = t_new;
        x = x_new;
        ax = ax_new;
        f_x = f_new;
        history.push(f_x);

        let scale = vec_norm(&x).max(1.0);
        if iterations % STALL_WINDOW == 0 {
            if prob.fixed_point_residual(&x, &ax, lip) <= opts.tol * scale {
                converged = true;
                break;
            }
            let h = history.len();
            if h > STALL_WINDOW {
                let old = history[h - 1 - STALL_WINDOW];
                if old - f_x <= opts.stall_tol * f_x.abs() {
                    // the objective has flattened below what f can resolve;
                    // drop momentum and keep iterating on plain steps
                    t = 1.0;
                }
            }
        }
    }

    let fpr = prob.fixed_point_residual(&x, &ax, lip);
    Ok(SparseSolution {
        objective: prob.objective(&x, &ax),
        x,
        lambda,
        gamma: None,
        weights: w.to_vec(),
        iterations,
        converged,
        step: 1.0 / lip,
        fixed_point_residual: fpr,
        restarts,
    })
}

/// Which estimator produced the adaptive-lasso weights.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialKind {
    Ols,
    /// Ridge with `λ = 1e-6`, used when `A` lacks full column rank.
    Ridge,
}

#[derive(Clone, Debug)]
pub struct InitialEstimate {
    pub x: Vec<C64>,
    pub kind: InitialKind,
    pub rank: usize,
}

/// OLS when `A` has full column rank, otherwise ridge with `λ = 1e-6`.
pub fn initial_estimate(ls: &LeastSquares) -> Result<InitialEstimate> {
    let sol = ols(ls)?;
    if !sol.rank_deficient {
        return Ok(InitialEstimate {
            x: sol.x,
            kind: InitialKind::Ols,
            rank: sol.rank,
        });
    }
    Ok(InitialEstimate {
        x: ridge(ls, RIDGE_INIT_LAMBDA)?,
        kind: InitialKind::Ridge,
        rank: sol.rank,
    })
}

/// `wᵢ = 1/|x̂ᵢ|^γ`, clamped to `[WEIGHT_MIN, WEIGHT_MAX]`.
pub fn adaptive_weights(xhat: &[C64], gamma: f64) -> Result<Vec<f64>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!("γ must be positive, got {gamma}")));
    }
    if xhat.iter().all(|z| z.norm() == 0.0) {
        return Err(Error::IllPosed("initial estimate is identically zero".into()));
    }
    Ok(xhat
        .iter()
        .map(|z| {
            let m = z.norm();
            if m == 0.0 {
                WEIGHT_MAX
            } else {
                m.powf(-gamma).clamp(WEIGHT_MIN, WEIGHT_MAX)
            }
        })
        .collect())
}

/// Adaptive lasso from a precomputed initial estimate, warm-started at it
/// unless `opts.x0` says otherwise.
pub fn adaptive_lasso_with_initial(
    ls: &LeastSquares,
    lambda: f64,
    gamma: f64,
    init: &InitialEstimate,
    opts: &LassoOptions,
) -> Result<SparseSolution> {
    let w = adaptive_weights(&init.x, gamma)?;
    let mut o = opts.clone();
    if o.x0.is_none() {
        o.x0 = Some(init.x.clone());
    }
    let mut sol = lasso(ls, lambda, Some(&w), &o)?;
    sol.gamma = Some(gamma);
    Ok(sol)
}

/// Adaptive lasso: weights from OLS (or ridge when rank deficient), then a
/// weighted lasso solve.
pub fn adaptive_lasso(
    ls: &LeastSquares,
    lambda: f64,
    gamma: f64,
    opts: &LassoOptions,
) -> Result<SparseSolution> {
    let init = initial_estimate(ls)?;
    adaptive_lasso_with_initial(ls, lambda, gamma, &init, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CMat;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(complex_soft_threshold(c(3.0, 4.0), 5.0), c(0.0, 0.0));
        assert!((complex_soft_threshold(c(3.0, 4.0), 2.5) - c(1.5, 2.0)).norm() < 1e-15);
        assert_eq!(complex_soft_threshold(c(-0.3, 7.0), 0.0), c(-0.3, 7.0));
    }

    #[test]
    fn large_lambda_gives_zero() {
        let a = CMat::from_fn(6, 3, |i, j| c((i + 2 * j) as f64 * 0.3 - 1.0, (i * j) as f64 * 0.1));
        let b: Vec<C64> = (0..6).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let ls = LeastSquares::dense(a.clone(), b.clone()).unwrap();
        let atb = a.adjoint() * nalgebra::DVector::from_column_slice(&b);
        let lam = 2.0 * atb.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let sol = lasso(&ls, lam * 1.0001, None, &LassoOptions::default()).unwrap();
        assert!(sol.x.iter().all(|z| z.norm() == 0.0));
        assert!(sol.converged);
    }

    #[test]
    fn zero_lambda_matches_ols() {
        let a = CMat::from_fn(9, 4, |i, j| c(((i * 5 + j * 3) % 7) as f64 - 3.0, ((i + j) % 3) as f64));
        let b: Vec<C64> = (0..9).map(|k| c((k % 4) as f64, -(k as f64) * 0.5)).collect();
        let ls = LeastSquares::dense(a, b).unwrap();
        let o = ols(&ls).unwrap();
        let s = lasso(&ls, 0.0, None, &LassoOptions::default()).unwrap();
        for (p, q) in o.x.iter().zip(&s.x) {
            assert!((p - q).norm() < 1e-8, "{p} vs {q}");
        }
    }

    #[test]
    fn invalid_inputs() {
        let ls = LeastSquares::dense(CMat::identity(2, 2), vec![c(1.0, 0.0); 2]).unwrap();
        let o = LassoOptions::default();
        assert!(lasso(&ls, -1.0, None, &o).is_err());
        assert!(lasso(&ls, 1.0, Some(&[1.0, 0.0]), &o).is_err());
        assert!(lasso(&ls, 1.0, Some(&[1.0]), &o).is_err());
        assert!(adaptive_weights(&[c(0.0, 0.0); 3], 1.0).is_err());
        assert!(adaptive_weights(&[c(1.0, 0.0)], 0.0).is_err());
    }

    #[test]
    fn zero_initial_entry_gets_capped_weight() {
        let w = adaptive_weights(&[c(2.0, 0.0), c(0.0, 0.0)], 1.0).unwrap();
        assert_eq!(w, vec![0.5, WEIGHT_MAX]);
        let ls = LeastSquares::dense(CMat::identity(2, 2), vec![c(2.0, 0.0), c(0.5, 0.0)]).unwrap();
        let init = InitialEstimate {
            x: vec![c(2.0, 0.0), c(0.0, 0.0)],
            kind: InitialKind::Ols,
            rank: 2,
        };
        let s = adaptive_lasso_with_initial(&ls, 0.1, 1.0, &init, &LassoOptions::default()).unwrap();
        assert_eq!(s.x[1], c(0.0, 0.0));
        assert!((s.x[0] - c(2.0 - 0.025, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn small_gamma_matches_plain_lasso() {
        let a = CMat::from_fn(8, 3, |i, j| c(((i * 3 + j) % 5) as f64 - 2.0, ((i * j) % 4) as f64 * 0.5));
        let b: Vec<C64> = (0..8).map(|k| c(1.0 + k as f64 * 0.2, (k % 3) as f64)).collect();
        let ls = LeastSquares::dense(a, b).unwrap();
        let o = LassoOptions::default();
        let plain = lasso(&ls, 0.3, None, &o).unwrap();
        let ad = adaptive_lasso(&ls, 0.3, 1e-9, &o).unwrap();
        for (p, q) in plain.x.iter().zip(&ad.x) {
            assert!((p - q).norm() < 1e-6);
        }
    }
}
