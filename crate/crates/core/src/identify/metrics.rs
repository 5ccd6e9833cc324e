use serde::{Deserialize, Serialize};

use crate::netmodel::{AdmittanceMatrix, Terminal};
use crate::{CMat, Error, Result};

/// `M1 = Σ|Ŷᵢⱼ − Yᵢⱼ|`, `M2 = ‖Ŷ − Y‖_F`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub m1: f64,
    pub m2: f64,
}

pub fn error_metrics(est: &CMat, truth: &CMat) -> Result<Metrics> {
    if est.shape() != truth.shape() {
        return Err(Error::Shape(format!("{:?} vs {:?}", est.shape(), truth.shape())));
    }
    let (mut m1, mut m2) = (0.0, 0.0);
    for (a, b) in est.iter().zip(truth.iter()) {
        let d = a - b;
        m1 += d.norm();
        m2 += d.norm_sqr();
    }
    Ok(Metrics { m1, m2: m2.sqrt() })
}

/// Metrics over the block spanned by `terminals` (the whole matrix when `None`).
/// Both matrices must index the same terminals.
pub fn block_metrics(
    est: &AdmittanceMatrix,
    truth: &AdmittanceMatrix,
    terminals: Option<&[Terminal]>,
) -> Result<Metrics> {
    if est.index() != truth.index() {
        return Err(Error::Shape("estimate and truth index different terminals".into()));
    }
    match terminals {
        None => error_metrics(est.matrix(), truth.matrix()),
        Some(t) => error_metrics(est.restrict(t)?.matrix(), truth.restrict(t)?.matrix()),
    }
}
