use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Outcome of a turning-point whiteness test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Whiteness {
    pub n: usize,
    pub turning_points: usize,
    /// `(T − 2(n−2)/3) / sqrt((16n − 29)/90)`.
    pub z: f64,
    pub white: bool,
}

/// Counts local extrema `T` and compares the standardized count with the
/// two-sided normal quantile at level `alpha`.
pub fn turning_point_test(series: &[f64], alpha: f64) -> Result<Whiteness> {
    let n = series.len();
    if n < 20 {
        return Err(Error::InvalidParameter(format!("turning point test needs n ≥ 20, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("α must lie in (0, 1), got {alpha}")));
    }
    let t = series
        .windows(3)
        .filter(|w| (w[1] > w[0] && w[1] > w[2]) || (w[1] < w[0] && w[1] < w[2]))
        .count();
    let nf = n as f64;
    let mean = 2.0 * (nf - 2.0) / 3.0;
    let var = (16.0 * nf - 29.0) / 90.0;
    let z = (t as f64 - mean) / var.sqrt();
    let q = Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - alpha / 2.0);
    Ok(Whiteness {
        n,
        turning_points: t,
        z,
        white: z.abs() <= q,
    })
}
