//! Imagery query outcomes and the coverage estimate derived from them.

use alloc::string::String;
use core::fmt;
use core::str::FromStr;

use libm::sqrt;

use crate::geo::GeoPoint;
use crate::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959964;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryStatus {
    Ok,
    ZeroResults,
    RequestDenied,
    /// Gave up after retries. Carries the HTTP status, or 0 when no response
    /// was received at all.
    TransportError(u16),
}

impl QueryStatus {
    pub fn is_usable(&self) -> bool {
        matches!(self, QueryStatus::Ok | QueryStatus::ZeroResults)
    }
}

impl fmt::Display for QueryStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QueryStatus::Ok => f.write_str("OK"),
            QueryStatus::ZeroResults => f.write_str("ZERO_RESULTS"),
            QueryStatus::RequestDenied => f.write_str("REQUEST_DENIED"),
            QueryStatus::TransportError(code) => write!(f, "TRANSPORT_ERROR({code})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown query status `{0}`")]
pub struct UnknownStatus(pub String);

impl FromStr for QueryStatus {
    type Err = UnknownStatus;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "OK" => Ok(QueryStatus::Ok),
            "ZERO_RESULTS" => Ok(QueryStatus::ZeroResults),
            "REQUEST_DENIED" => Ok(QueryStatus::RequestDenied),
            other => other
                .strip_prefix("TRANSPORT_ERROR(")
                .and_then(|rest| rest.strip_suffix(')'))
                .and_then(|code| code.parse().ok())
                .map(QueryStatus::TransportError)
                .ok_or_else(|| UnknownStatus(String::from(other))),
        }
    }
}

/// Imagery capture date as reported by the metadata endpoint (`YYYY-MM`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct YearMonth {
    pub year: u16,
    pub month: u8,
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (y, m) = s.split_once('-').ok_or(Error::OutOfRange("capture date must be YYYY-MM"))?;
        let year = y.parse().map_err(|_| Error::OutOfRange("capture year"))?;
        let month: u8 = m.parse().map_err(|_| Error::OutOfRange("capture month"))?;
        if !(1..=12).contains(&month) {
            return Err(Error::OutOfRange("capture month"));
        }
        Ok(YearMonth { year, month })
    }
}

/// Outcome of querying imagery at one sampled point.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryRecord {
    pub segment_id: String,
    pub location: GeoPoint,
    pub status: QueryStatus,
    pub pano_id: Option<String>,
    pub capture_date: Option<YearMonth>,
    pub image_path: Option<String>,
    /// ISO-8601 UTC timestamp.
    pub queried_at: String,
}

impl QueryRecord {
    /// Pano ids and image paths only accompany `OK`.
    pub fn is_consistent(&self) -> bool {
        self.status == QueryStatus::Ok || (self.pano_id.is_none() && self.image_path.is_none())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoverageEstimate {
    pub successes: usize,
    pub total: usize,
    pub proportion: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Wilson score interval for `successes` out of `total` trials.
pub fn wilson_interval(successes: usize, total: usize, z: f64) -> Result<(f64, f64)> {
    if total == 0 {
        return Err(Error::InsufficientData("Wilson interval needs at least one trial"));
    }
    if successes > total {
        return Err(Error::OutOfRange("successes exceed trials"));
    }
    let n = total as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    let low = if successes == 0 { 0.0 } else { (centre - half).clamp(0.0, p) };
    let high = if successes == total { 1.0 } else { (centre + half).clamp(p, 1.0) };
    Ok((low, high))
}

/// Share of `OK` among usable (`OK` or `ZERO_RESULTS`) records, with a 95%
/// Wilson interval. Transport errors and denied requests are not evidence
/// about imagery and are left out of both counts.
pub fn estimate_coverage<'a, I>(records: I) -> Result<CoverageEstimate>
where
    I: IntoIterator<Item = &'a QueryRecord>,
{
    let (mut successes, mut total) = (0usize, 0usize);
    for r in records {
        if r.status.is_usable() {
            total += 1;
            if r.status == QueryStatus::Ok {
                successes += 1;
            }
        }
    }
    if total == 0 {
        return Err(Error::InsufficientData("no usable query records"));
    }
    let (ci_low, ci_high) = wilson_interval(successes, total, Z_95)?;
    Ok(CoverageEstimate {
        successes,
        total,
        proportion: successes as f64 / total as f64,
        ci_low,
        ci_high,
    })
}
