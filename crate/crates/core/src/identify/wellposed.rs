use super::fit::{fit_sparse, SymFitFolds};
use super::{FitDiagnostics, IdentifyOptions};
use crate::netmodel::AdmittanceMatrix;
use crate::phasors::PhasorDataset;
use crate::symvec::f_unvec;
use crate::{Error, Result};

/// Identifies the full admittance matrix from data whose voltage matrix has
/// full row rank, by (adaptive) lasso on `vec(Y·V) ≈ vec(I)` over `f(Y)`.
pub fn identify_wellposed(
    ds: &PhasorDataset,
    opts: &IdentifyOptions,
) -> Result<(AdmittanceMatrix, FitDiagnostics)> {
    if ds.slots() < 2 {
        return Err(Error::IllPosed(format!(
            "{} time slot(s) cannot determine a {}-terminal admittance matrix",
            ds.slots(),
            ds.dim()
        )));
    }
    let rank = ds.numerical_rank(opts.rank_tol);
    if rank < ds.dim() {
        return Err(Error::RankDeficient { rank, dim: ds.dim() });
    }
    let folds = SymFitFolds {
        v: ds.v(),
        target: ds.i(),
    };
    let (sol, diag) = fit_sparse(&folds, opts)?;
    let y = AdmittanceMatrix::new(ds.index().clone(), f_unvec(&sol.x)?)?;
    Ok((y, diag))
}
