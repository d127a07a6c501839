//! Dummy-coded design matrices for categorical factors.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use super::ols::Matrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Factor {
    RoadClass,
    City,
    IncomeQuintile,
}

impl Factor {
    pub fn name(&self) -> &'static str {
        match self {
            Factor::RoadClass => "road_class",
            Factor::City => "city",
            Factor::IncomeQuintile => "income_quintile",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "road_class" => Some(Factor::RoadClass),
            "city" => Some(Factor::City),
            "income_quintile" => Some(Factor::IncomeQuintile),
            _ => None,
        }
    }

    /// Baseline used when the caller names none. Cities have no natural
    /// baseline and fall back to the first level in sorted order.
    pub fn default_baseline(&self) -> Option<&'static str> {
        match self {
            Factor::RoadClass => Some("tertiary"),
            Factor::IncomeQuintile => Some("q1"),
            Factor::City => None,
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One observation: its factor levels and 0/1 (or real) outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow {
    pub levels: BTreeMap<Factor, String>,
    pub outcome: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactorCoding {
    pub factor: Factor,
    pub baseline: String,
    /// Levels with their own dummy column, in column order.
    pub levels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    /// `"(intercept)"` followed by `"factor=level"` for every dummy.
    pub names: Vec<String>,
    pub matrix: Matrix,
    pub response: Vec<f64>,
    pub coding: Vec<FactorCoding>,
}

impl Design {
    /// Encodes a new observation with this design's coding.
    pub fn encode(&self, levels: &BTreeMap<Factor, String>) -> Result<Vec<f64>> {
        let mut x = vec![1.0];
        for coding in &self.coding {
            let level = levels.get(&coding.factor).ok_or_else(|| Error::MissingFactor {
                factor: coding.factor.to_string(),
                row: 0,
            })?;
            if *level != coding.baseline && !coding.levels.contains(level) {
                return Err(Error::UnseenLevel {
                    factor: coding.factor.to_string(),
                    level: level.clone(),
                });
            }
            x.extend(coding.levels.iter().map(|l| if l == level { 1.0 } else { 0.0 }));
        }
        Ok(x)
    }
}

/// Intercept plus one dummy per non-baseline level, ordered by factor (as
/// given) then level (sorted).
pub fn build_design(rows: &[DesignRow], factors: &[Factor], baselines: &BTreeMap<Factor, String>) -> Result<Design> {
    let mut coding = Vec::with_capacity(factors.len());
    for &factor in factors {
        let mut observed = BTreeSet::new();
        for (i, row) in rows.iter().enumerate() {
            let level = row.levels.get(&factor).ok_or_else(|| Error::MissingFactor {
                factor: factor.to_string(),
                row: i,
            })?;
            observed.insert(level.clone());
        }
        let baseline = match baselines.get(&factor) {
            Some(b) => b.clone(),
            None => match factor.default_baseline() {
                Some(b) => b.to_string(),
                None => observed
                    .iter()
                    .next()
                    .cloned()
                    .ok_or(Error::InsufficientData("no rows to build a design from"))?,
            },
        };
        if !observed.contains(&baseline) {
            return Err(Error::UnseenLevel {
                factor: factor.to_string(),
                level: baseline,
            });
        }
        let levels: Vec<String> = observed.into_iter().filter(|l| *l != baseline).collect();
        if levels.is_empty() {
            // a single-level factor is collinear with the intercept
            return Err(Error::RankDeficient {
                column: format!("{factor}={baseline}"),
            });
        }
        coding.push(FactorCoding { factor, baseline, levels });
    }

    let mut names = vec![String::from("(intercept)")];
    for c in &coding {
        names.extend(c.levels.iter().map(|l| format!("{}={}", c.factor, l)));
    }
    let mut design = Design {
        matrix: Matrix::zeros(rows.len(), names.len()),
        names,
        response: rows.iter().map(|r| r.outcome).collect(),
        coding,
    };
    for (i, row) in rows.iter().enumerate() {
        let x = design.encode(&row.levels)?;
        for (j, v) in x.into_iter().enumerate() {
            design.matrix.set(i, j, v);
        }
    }
    Ok(design)
}
