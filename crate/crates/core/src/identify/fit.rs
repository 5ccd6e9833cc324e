use serde::Serialize;

use crate::solvers::{
    adaptive_lasso_with_initial, cross_validate, initial_estimate, lasso, CvPoint, FoldBuilder,
    Grid, InitialKind, LassoOptions, LeastSquares, Method, SparseSolution,
};
use crate::{CMat, Error, Result};

/// A hyperparameter that is either fixed or chosen by cross-validation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Hyper {
    Auto,
    Value(f64),
}

impl Hyper {
    /// `"auto"` or a number.
    pub fn parse(s: &str) -> Result<Hyper> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Hyper::Auto);
        }
        s.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(Hyper::Value)
            .ok_or_else(|| Error::InvalidParameter(format!("expected 'auto' or a number, got {s:?}")))
    }
}

#[derive(Clone, Debug)]
pub struct IdentifyOptions {
    pub method: Method,
    pub lambda: Hyper,
    pub gamma: Hyper,
    pub folds: usize,
    pub grid: Grid,
    /// Relative singular-value threshold for rank decisions and basis selection.
    pub rank_tol: f64,
    pub lasso: LassoOptions,
}

impl Default for IdentifyOptions {
    fn default() -> Self {
        IdentifyOptions {
            method: Method::Adaptive,
            lambda: Hyper::Auto,
            gamma: Hyper::Auto,
            folds: 3,
            grid: Grid::default(),
            rank_tol: 1e-8,
            lasso: LassoOptions::default(),
        }
    }
}

impl IdentifyOptions {
    pub fn with_method(method: Method) -> Self {
        IdentifyOptions {
            method,
            ..Default::default()
        }
    }
}

/// How a sparse fit was obtained.
#[derive(Clone, Debug, Serialize)]
pub struct FitDiagnostics {
    pub method: Method,
    pub lambda: f64,
    pub gamma: Option<f64>,
    pub cv_performed: bool,
    pub cv: Vec<CvPoint>,
    pub initial_estimator: Option<InitialKind>,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub fixed_point_residual: f64,
}

/// `‖f⁻¹(x)·V − T‖²` restricted to subsets of time slots.
pub(crate) struct SymFitFolds<'a> {
    pub v: &'a CMat,
    pub target: &'a CMat,
}

impl FoldBuilder for SymFitFolds<'_> {
    fn n_slots(&self) -> usize {
        self.v.ncols()
    }

    fn build(&self, slots: &[usize]) -> Result<LeastSquares> {
        LeastSquares::symmetric_fit(&self.v.select_columns(slots), &self.target.select_columns(slots))
    }
}

/// Chooses `(λ, γ)` (cross-validating whatever is `Auto`), then fits on all slots.
pub(crate) fn fit_sparse(
    builder: &dyn FoldBuilder,
    opts: &IdentifyOptions,
) -> Result<(SparseSolution, FitDiagnostics)> {
    let all: Vec<usize> = (0..builder.n_slots()).collect();
    let full = builder.build(&all)?;
    let method = opts.method;
    let needs_cv = matches!(opts.lambda, Hyper::Auto) || (method == Method::Adaptive && matches!(opts.gamma, Hyper::Auto));
    let grid = Grid {
        lambdas: match opts.lambda {
            Hyper::Auto => opts.grid.lambdas.clone(),
            Hyper::Value(l) => vec![l],
        },
        gammas: match opts.gamma {
            Hyper::Auto => opts.grid.gammas.clone(),
            Hyper::Value(g) => vec![g],
        },
    };
    let (lambda, gamma, cv) = if needs_cv {
        let r = cross_validate(builder, method, &grid, opts.folds, &opts.lasso)?;
        (r.lambda, r.gamma, r.points)
    } else {
        let gamma = (method == Method::Adaptive).then(|| grid.gammas[0]);
        (grid.lambdas[0], gamma, Vec::new())
    };
    let (sol, initial) = match method {
        Method::Lasso => (lasso(&full, lambda, None, &opts.lasso)?, None),
        Method::Adaptive => {
            let init = initial_estimate(&full)?;
            let g = gamma.unwrap_or(1.0);
            (adaptive_lasso_with_initial(&full, lambda, g, &init, &opts.lasso)?, Some(init.kind))
        }
    };
    let diag = FitDiagnostics {
        method,
        lambda,
        gamma: if method == Method::Adaptive { gamma } else { None },
        cv_performed: needs_cv && !cv.is_empty(),
        cv,
        initial_estimator: initial,
        iterations: sol.iterations,
        converged: sol.converged,
        objective: sol.objective,
        fixed_point_residual: sol.fixed_point_residual,
    };
    Ok((sol, diag))
}
