//! Census-tract income join and quintile binning.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geo::{point_in_polygon, BoundingBox, GeoPoint, PolygonRing};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct TractPolygon {
    pub tract_id: String,
    /// One entry per polygon of a (multi)polygon.
    pub shapes: Vec<PolygonRing>,
    pub per_capita_income: f64,
}

impl TractPolygon {
    pub fn new(tract_id: impl Into<String>, shapes: Vec<PolygonRing>, per_capita_income: f64) -> Result<Self> {
        if shapes.is_empty() {
            return Err(Error::InvalidRing("tract has no polygons"));
        }
        if !per_capita_income.is_finite() || per_capita_income < 0.0 {
            return Err(Error::OutOfRange("per capita income must be finite and non-negative"));
        }
        Ok(Self {
            tract_id: tract_id.into(),
            shapes,
            per_capita_income,
        })
    }

    pub fn bbox(&self) -> BoundingBox {
        let mut bb = self.shapes[0].bbox();
        for s in &self.shapes[1..] {
            bb = bb.union(&s.bbox());
        }
        bb
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.shapes.iter().any(|s| point_in_polygon(p, s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TractMatch {
    pub segment_id: String,
    pub tract_id: String,
    pub income: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IncomeJoin {
    /// In input order.
    pub matched: Vec<TractMatch>,
    pub unmatched: Vec<String>,
    /// Points that fell in more than one tract; the first tract was used.
    pub multiple_matches: usize,
}

/// Assigns each point to the first tract containing it.
pub fn join_income(points: &[(String, GeoPoint)], tracts: &[TractPolygon]) -> IncomeJoin {
    let boxes: Vec<BoundingBox> = tracts.iter().map(TractPolygon::bbox).collect();
    let mut out = IncomeJoin::default();
    for (segment_id, p) in points {
        let mut hits = tracts
            .iter()
            .zip(&boxes)
            .filter(|(_, bb)| bb.contains(*p))
            .map(|(t, _)| t)
            .filter(|t| t.contains(*p));
        match hits.next() {
            Some(t) => {
                if hits.next().is_some() {
                    out.multiple_matches += 1;
                }
                out.matched.push(TractMatch {
                    segment_id: segment_id.clone(),
                    tract_id: t.tract_id.clone(),
                    income: t.per_capita_income,
                });
            }
            None => out.unmatched.push(segment_id.clone()),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuintileBinning {
    /// Strictly ascending 20th/40th/60th/80th percentiles.
    pub cut_points: [f64; 4],
    pub bin_labels: [String; 5],
}

impl QuintileBinning {
    /// Bin index 0..5; a value equal to a cut point goes to the lower bin.
    pub fn bin_of(&self, value: f64) -> usize {
        self.cut_points.iter().take_while(|&&c| value > c).count()
    }

    pub fn label_of(&self, value: f64) -> &str {
        &self.bin_labels[self.bin_of(value)]
    }

    /// Human-readable income range of a bin.
    pub fn describe(&self, bin: usize) -> String {
        match bin {
            0 => format!("<= {}", self.cut_points[0]),
            4 => format!("> {}", self.cut_points[3]),
            b => format!("({}, {}]", self.cut_points[b - 1], self.cut_points[b]),
        }
    }
}

/// Empirical percentile with linear interpolation between order statistics
/// at rank `(n - 1) p`.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quintile_bins(incomes: &[f64]) -> Result<QuintileBinning> {
    if incomes.iter().any(|v| !v.is_finite()) {
        return Err(Error::OutOfRange("incomes must be finite"));
    }
    let mut sorted = incomes.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() < 5 {
        return Err(Error::TooFewDistinct(distinct.len()));
    }
    let cut_points = [0.2, 0.4, 0.6, 0.8].map(|p| percentile(&sorted, p));
    if cut_points.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InsufficientData("income distribution too concentrated for distinct quintile cuts"));
    }
    Ok(QuintileBinning {
        cut_points,
        bin_labels: ["q1", "q2", "q3", "q4", "q5"].map(String::from),
    })
}
