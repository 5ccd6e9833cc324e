//! Online detection of admittance changes and sparse localization of the change.

mod detector;
mod localize;
mod whiteness;

pub use detector::{prediction_error, DetectOutcome, Detector, DetectorConfig, Threshold};
pub use localize::{design_rank_check, localize, samples_needed, Localization, LocalizeOptions};
pub use whiteness::{turning_point_test, Whiteness};
