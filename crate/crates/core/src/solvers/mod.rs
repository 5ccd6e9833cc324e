//! Complex-valued regression solvers: OLS, ridge, (weighted) lasso, adaptive
//! lasso and time-slot cross-validation over `(λ, γ)` grids.

mod cv;
mod direct;
mod lasso;
mod operator;

pub use cv::{cross_validate, CvPoint, CvResult, FoldBuilder, Grid};
pub use direct::{ols, ridge, OlsSolution};
pub use lasso::{
    adaptive_lasso, adaptive_lasso_with_initial, adaptive_weights, complex_soft_threshold,
    initial_estimate, lasso, InitialEstimate, InitialKind, LassoOptions, SparseSolution,
    WEIGHT_MAX, WEIGHT_MIN,
};
pub use operator::{DenseOperator, LeastSquares, LinearOperator};

use serde::{Deserialize, Serialize};

/// Sparse-regression penalty family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Lasso,
    Adaptive,
}

impl Method {
    pub fn parse(s: &str) -> Option<Method> {
        match s {
            "lasso" => Some(Method::Lasso),
            "adaptive" => Some(Method::Adaptive),
            _ => None,
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Lasso => "lasso",
            Method::Adaptive => "adaptive",
        })
    }
}
