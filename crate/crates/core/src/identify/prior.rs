use serde::Serialize;

use crate::netmodel::AdmittanceMatrix;
use crate::phasors::PhasorDataset;
use crate::solvers::{ridge, LeastSquares};
use crate::symvec::f_unvec;
use crate::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct PriorDiagnostics {
    pub lambda: f64,
    /// Frobenius norm of the estimated prior error `Ψ̂`.
    pub psi_norm: f64,
}

/// Corrects an approximate model `Ỹ = Y + Ψ`: estimates `Ψ` by ridge regression
/// on `Ψ·V ≈ Ỹ·V − I` and returns `Ỹ − Ψ̂`.
pub fn refine_with_prior(
    ds: &PhasorDataset,
    prior: &AdmittanceMatrix,
    lambda: f64,
) -> Result<(AdmittanceMatrix, PriorDiagnostics)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("ridge λ must be positive, got {lambda}")));
    }
    if prior.index() != ds.index() {
        return Err(Error::Shape(format!(
            "prior covers {} terminals, data covers {} (or the terminals differ)",
            prior.dim(),
            ds.dim()
        )));
    }
    let target = prior.matrix() * ds.v() - ds.i();
    let ls = LeastSquares::symmetric_fit(ds.v(), &target)?;
    let psi = f_unvec(&ridge(&ls, lambda)?)?;
    let psi_norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let y = AdmittanceMatrix::new(ds.index().clone(), prior.matrix() - psi)?;
    Ok((y, PriorDiagnostics { lambda, psi_norm }))
}
