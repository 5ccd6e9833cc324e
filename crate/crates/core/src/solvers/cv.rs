use rayon::prelude::*;
use serde::Serialize;

use super::{adaptive_lasso_with_initial, initial_estimate, lasso, LassoOptions, LeastSquares, Method};
use crate::{Error, Result};

/// Hyperparameter grids.
#[derive(Clone, Debug, Serialize)]
pub struct Grid {
    pub lambdas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl Grid {
    /// 30 log-spaced points from `1e-5` to `1e5`.
    pub fn default_lambdas() -> Vec<f64> {
        (0..30).map(|k| 10f64.powf(-5.0 + 10.0 * k as f64 / 29.0)).collect()
    }

    pub fn default_gammas() -> Vec<f64> {
        vec![0.5, 1.0, 2.0]
    }
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            lambdas: Self::default_lambdas(),
            gammas: Self::default_gammas(),
        }
    }
}

/// Builds the regression restricted to a subset of time slots.
pub trait FoldBuilder: Sync {
    fn n_slots(&self) -> usize;
    fn build(&self, slots: &[usize]) -> Result<LeastSquares>;
}

#[derive(Clone, Debug, Serialize)]
pub struct CvPoint {
    pub lambda: f64,
    pub gamma: Option<f64>,
    /// Mean held-out loss over folds.
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CvResult {
    pub lambda: f64,
    pub gamma: Option<f64>,
    pub points: Vec<CvPoint>,
}

fn fold_slots(n: usize, folds: usize, f: usize) -> (Vec<usize>, Vec<usize>) {
    let lo = f * n / folds;
    let hi = (f + 1) * n / folds;
    let val: Vec<usize> = (lo..hi).collect();
    let train: Vec<usize> = (0..lo).chain(hi..n).collect();
    (train, val)
}

/// Held-out losses along `lambdas` (in the given order) for one fold and `γ`.
fn fold_path(
    train: &LeastSquares,
    val: &LeastSquares,
    method: Method,
    lambdas: &[f64],
    gamma: Option<f64>,
    opts: &LassoOptions,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; lambdas.len()];
    match (method, gamma) {
        (Method::Adaptive, Some(g)) => {
            let init = initial_estimate(train)?;
            for (k, &lam) in lambdas.iter().enumerate() {
                let sol = adaptive_lasso_with_initial(train, lam, g, &init, opts)?;
                out[k] = val.loss(&sol.x);
            }
        }
        _ => {
            // descending path with warm starts
            let mut order: Vec<usize> = (0..lambdas.len()).collect();
            order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));
            let mut o = opts.clone();
            for k in order {
                let sol = lasso(train, lambdas[k], None, &o)?;
                out[k] = val.loss(&sol.x);
                o.x0 = Some(sol.x);
            }
        }
    }
    Ok(out)
}

/// K-fold cross-validation over contiguous blocks of time slots.
///
/// Returns the grid point with the smallest mean held-out loss; ties go to the
/// smallest `λ`, then the smallest `γ`. `γ` is ignored for plain lasso.
pub fn cross_validate(
    builder: &dyn FoldBuilder,
    method: Method,
    grid: &Grid,
    folds: usize,
    opts: &LassoOptions,
) -> Result<CvResult> {
    if grid.lambdas.is_empty() || (method == Method::Adaptive && grid.gammas.is_empty()) {
        return Err(Error::InvalidParameter("hyperparameter grid is empty".into()));
    }
    let gammas: Vec<Option<f64>> = match method {
        Method::Lasso => vec![None],
        Method::Adaptive => grid.gammas.iter().map(|&g| Some(g)).collect(),
    };
    if grid.lambdas.len() * gammas.len() == 1 {
        return Ok(CvResult {
            lambda: grid.lambdas[0],
            gamma: gammas[0],
            points: Vec::new(),
        });
    }
    let n = builder.n_slots();
    if folds < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 folds, got {folds}")));
    }
    if folds > n {
        return Err(Error::InvalidParameter(format!("{folds} folds but only {n} time slots")));
    }

    let problems: Vec<(LeastSquares, LeastSquares)> = (0..folds)
        .into_par_iter()
        .map(|f| {
            let (train, val) = fold_slots(n, folds, f);
            Ok((builder.build(&train)?, builder.build(&val)?))
        })
        .collect::<Result<_>>()?;

    let tasks: Vec<(usize, Option<f64>)> = (0..folds)
        .flat_map(|f| gammas.iter().map(move |&g| (f, g)))
        .collect();
    let losses: Vec<Vec<f64>> = tasks
        .par_iter()
        .map(|&(f, g)| {
            let (train, val) = &problems[f];
            fold_path(train, val, method, &grid.lambdas, g, opts)
        })
        .collect::<Result<_>>()?;

    let mut points = Vec::with_capacity(grid.lambdas.len() * gammas.len());
    for (gi, &g) in gammas.iter().enumerate() {
        for (li, &lam) in grid.lambdas.iter().enumerate() {
            let total: f64 = (0..folds).map(|f| losses[f * gammas.len() + gi][li]).sum();
            points.push(CvPoint {
                lambda: lam,
                gamma: g,
                error: total / folds as f64,
            });
        }
    }

    let mut order: Vec<&CvPoint> = points.iter().collect();
    order.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.gamma.unwrap_or(0.0).total_cmp(&b.gamma.unwrap_or(0.0)))
    });
    let best = order
        .into_iter()
        .filter(|p| p.error.is_finite())
        .fold(None::<&CvPoint>, |best, p| match best {
            Some(b) if b.error <= p.error => Some(b),
            _ => Some(p),
        })
        .ok_or_else(|| Error::Solver("no grid point produced a finite validation loss".into()))?;
    Ok(CvResult {
        lambda: best.lambda,
        gamma: best.gamma,
        points: points.clone(),
    })
}
