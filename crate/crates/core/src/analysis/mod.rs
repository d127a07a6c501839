//! Condition proportions, linear probability models and the income join.

mod design;
mod income;
mod ols;
mod summary;

pub use design::{build_design, Design, DesignRow, Factor};
pub use income::{join_income, quintile_bins, IncomeJoin, QuintileBinning, TractMatch, TractPolygon};
pub use ols::{ols_fit, Covariance, Matrix, RegressionResult};
pub use summary::{summarize_city, CitySummary, SummaryColumn};

use crate::{Error, Result};

/// Expected number of incidents on a journey when each image covers
/// `capture_km` of road and shows an incident with probability `rate`.
pub fn expected_incidents(rate: f64, journey_km: f64, capture_km: f64) -> Result<f64> {
    if !(capture_km > 0.0) || !capture_km.is_finite() {
        return Err(Error::OutOfRange("capture length must be positive"));
    }
    if !rate.is_finite() || !journey_km.is_finite() {
        return Err(Error::OutOfRange("rate and journey length must be finite"));
    }
    Ok(rate * journey_km / capture_km)
}
