//! Admittance identification pipelines and error metrics.

mod fit;
mod lowrank;
mod metrics;
mod prior;
mod wellposed;

pub use fit::{FitDiagnostics, Hyper, IdentifyOptions};
pub use lowrank::{
    estimate_basis_coeff, lowrank_identify, recover_y12, recover_y22_y11, select_basis,
    BasisSelection, PartialIdentification, StackedConstraint,
};
pub use metrics::{block_metrics, error_metrics, Metrics};
pub use prior::{refine_with_prior, PriorDiagnostics};
pub use wellposed::identify_wellposed;
