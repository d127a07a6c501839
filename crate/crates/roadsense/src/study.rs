//! Tables and regression inputs built from consensus labels and plans.

use std::collections::{BTreeMap, HashMap};

use anyhow::{bail, Context};
use roadsense_core::analysis::{
    join_income, quintile_bins, CitySummary, DesignRow, Factor, QuintileBinning, RegressionResult, SummaryColumn,
    TractPolygon,
};
use roadsense_core::labels::{Attribute, ConsensusLabel};
use roadsense_core::segment::RoadSegment;

use crate::tables::Table;

fn ratio(p: Option<f64>) -> String {
    p.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"))
}

/// One row per city; proportion columns in the condition-table order.
pub fn summary_table(summaries: &[CitySummary]) -> Table {
    let mut t = Table::new(
        ["city", "n_images"]
            .into_iter()
            .chain(SummaryColumn::ALL.iter().map(SummaryColumn::title)),
    );
    for s in summaries {
        let mut row = vec![s.city.clone(), s.n_images.to_string()];
        row.extend(SummaryColumn::ALL.iter().map(|&c| ratio(s.proportion(c))));
        t.push(row);
    }
    t
}

/// Unresolved verdict counts, which the proportions leave out.
pub fn unresolved_table(summaries: &[CitySummary]) -> Table {
    let mut t = Table::new(["city"].into_iter().chain(SummaryColumn::ALL.iter().map(SummaryColumn::title)));
    for s in summaries {
        let mut row = vec![s.city.clone()];
        row.extend(SummaryColumn::ALL.iter().map(|&c| s.unresolved(c).to_string()));
        t.push(row);
    }
    t
}

pub fn regression_table(fit: &RegressionResult) -> Table {
    let mut t = Table::new(["term", "estimate", "std_error"]);
    for ((name, est), se) in fit.coefficient_names.iter().zip(&fit.estimates).zip(&fit.standard_errors) {
        t.push(vec![name.clone(), format!("{est:.4}"), format!("{se:.4}")]);
    }
    t
}

/// Space-aligned rendering: first column left-aligned, the rest right-aligned.
pub fn render_text(table: &Table) -> String {
    let cols = table.header.len();
    let width = |c: usize| {
        table
            .rows
            .iter()
            .map(|r| r[c].chars().count())
            .chain([table.header[c].chars().count()])
            .max()
            .unwrap_or(0)
    };
    let widths: Vec<usize> = (0..cols).map(width).collect();
    let line = |cells: &[String]| {
        let mut out = String::new();
        for (c, cell) in cells.iter().enumerate() {
            if c == 0 {
                out.push_str(&format!("{cell:<w$}", w = widths[0]));
            } else {
                out.push_str(&format!("  {cell:>w$}", w = widths[c]));
            }
        }
        out.trim_end().to_string() + "\n"
    };
    let mut out = line(&table.header);
    for row in &table.rows {
        out.push_str(&line(row));
    }
    out
}

/// Regression rows plus an account of what was left out.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RegressionInput {
    pub rows: Vec<DesignRow>,
    /// Outcome unresolved or not applicable.
    pub dropped_unresolved: usize,
    /// Labelled segments missing from the plan they were paired with.
    pub dropped_unplanned: usize,
    /// Segments outside every tract (income models only).
    pub dropped_no_tract: usize,
    pub binning: Option<QuintileBinning>,
}

/// A city's consensus labels with the plan that produced its images.
pub struct LabelledSample<'a> {
    pub consensus: &'a [ConsensusLabel],
    pub plan: &'a [RoadSegment],
}

/// How income quintile cut points are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuintileBasis {
    /// One income per analysed segment.
    #[default]
    Segments,
    /// One income per distinct tract that contains an analysed segment.
    Tracts,
}

/// Joins labels to their segments and codes the requested factors.
/// Observations with an unresolved outcome are dropped listwise.
pub fn regression_rows(
    samples: &[LabelledSample<'_>],
    outcome: Attribute,
    factors: &[Factor],
    tracts: Option<&[TractPolygon]>,
    basis: QuintileBasis,
) -> anyhow::Result<RegressionInput> {
    let mut input = RegressionInput::default();
    let mut joined: Vec<(&RoadSegment, f64)> = Vec::new();
    for sample in samples {
        let by_id: HashMap<&str, &RoadSegment> = sample.plan.iter().map(|s| (s.segment_id.as_str(), s)).collect();
        for label in sample.consensus {
            let Some(y) = label.verdict(outcome).as_bool() else {
                input.dropped_unresolved += 1;
                continue;
            };
            match by_id.get(label.segment_id.as_str()) {
                Some(seg) => joined.push((seg, if y { 1.0 } else { 0.0 })),
                None => input.dropped_unplanned += 1,
            }
        }
    }

    let mut quintile: Option<Vec<Option<String>>> = None;
    if factors.contains(&Factor::IncomeQuintile) {
        let Some(tracts) = tracts else {
            bail!("the income_quintile factor needs tract polygons (--tracts)");
        };
        let points: Vec<(String, _)> = joined
            .iter()
            .enumerate()
            .map(|(i, (seg, _))| (i.to_string(), seg.start))
            .collect();
        let join = join_income(&points, tracts);
        if join.multiple_matches > 0 {
            log::warn!("{} points fell in more than one tract; the first was used", join.multiple_matches);
        }
        let incomes: Vec<f64> = match basis {
            QuintileBasis::Segments => join.matched.iter().map(|m| m.income).collect(),
            QuintileBasis::Tracts => join
                .matched
                .iter()
                .map(|m| (m.tract_id.as_str(), m.income))
                .collect::<BTreeMap<_, _>>()
                .into_values()
                .collect(),
        };
        let binning = quintile_bins(&incomes).context("binning tract incomes into quintiles")?;
        let mut levels = vec![None; joined.len()];
        for m in &join.matched {
            let i: usize = m.segment_id.parse().expect("index keys");
            levels[i] = Some(binning.label_of(m.income).to_string());
        }
        input.dropped_no_tract = join.unmatched.len();
        input.binning = Some(binning);
        quintile = Some(levels);
    }

    for (i, (seg, y)) in joined.iter().enumerate() {
        let mut levels = BTreeMap::new();
        for f in factors {
            let level = match f {
                Factor::RoadClass => seg.highway_class.to_string(),
                Factor::City => seg.city.clone(),
                Factor::IncomeQuintile => match &quintile.as_ref().expect("computed above")[i] {
                    Some(q) => q.clone(),
                    None => break,
                },
            };
            levels.insert(*f, level);
        }
        if levels.len() == factors.len() {
            input.rows.push(DesignRow { levels, outcome: *y });
        }
    }
    Ok(input)
}

#[cfg(test)]
mod tests {
    use super::*;
    use roadsense_core::analysis::summarize_city;
    use roadsense_core::labels::Verdict;
    use roadsense_core::{GeoPoint, HighwayClass, PolygonRing};

    fn seg(id: &str, class: HighwayClass, lat: f64) -> RoadSegment {
        let p = GeoPoint::new(lat, 0.5).unwrap();
        RoadSegment {
            segment_id: id.into(),
            way_id: 1,
            index: 0,
            geometry: None,
            start: p,
            end: p,
            length_m: 500.0,
            highway_class: class,
            city: "c".into(),
        }
    }

    fn label(id: &str, potholes: Verdict) -> ConsensusLabel {
        ConsensusLabel {
            segment_id: id.into(),
            verdicts: [potholes, Verdict::No, Verdict::No, Verdict::NotApplicable, Verdict::No, Verdict::No],
            n_workers: 1,
        }
    }

    #[test]
    fn text_rendering_is_aligned() {
        let mut t = Table::new(["city", "potholes"]);
        t.push(vec!["jakarta".into(), "0.230".into()]);
        assert_eq!(render_text(&t), "city     potholes\njakarta     0.230\n");
    }

    #[test]
    fn summary_columns_in_table_order() {
        let s = summarize_city(&[label("a", Verdict::Yes)], "x").unwrap();
        let t = summary_table(&[s]);
        assert_eq!(
            t.header[2..8],
            ["potholes", "cracks", "clear road markings", "roads w/ markings", "litter", "paved sidewalk"]
        );
        // no image has markings, so the conditional column is missing
        assert_eq!(t.rows[0][4], "NA");
        assert_eq!(t.rows[0][2], "1.000");
    }

    #[test]
    fn rows_drop_unresolved_and_unplanned() {
        let plan = [seg("a", HighwayClass::Primary, 0.1), seg("b", HighwayClass::Tertiary, 0.2)];
        let consensus = [label("a", Verdict::Yes), label("b", Verdict::Unresolved), label("z", Verdict::No)];
        let samples = [LabelledSample {
            consensus: &consensus,
            plan: &plan,
        }];
        let input = regression_rows(&samples, Attribute::Potholes, &[Factor::RoadClass], None, QuintileBasis::Segments).unwrap();
        assert_eq!(input.rows.len(), 1);
        assert_eq!(input.rows[0].outcome, 1.0);
        assert_eq!(input.dropped_unresolved, 1);
        assert_eq!(input.dropped_unplanned, 1);
    }

    #[test]
    fn income_quintiles_from_tracts() {
        let square = |lat0: f64| {
            let p = |a, b| GeoPoint::new(a, b).unwrap();
            PolygonRing::new(
                vec![p(lat0, 0.0), p(lat0, 1.0), p(lat0 + 1.0, 1.0), p(lat0 + 1.0, 0.0), p(lat0, 0.0)],
                vec![],
            )
            .unwrap()
        };
        let tracts: Vec<TractPolygon> = (0..5)
            .map(|i| TractPolygon::new(format!("t{i}"), vec![square(i as f64 * 2.0)], 10_000.0 * (i + 1) as f64).unwrap())
            .collect();
        let plan: Vec<RoadSegment> = (0..6)
            .map(|i| seg(&format!("s{i}"), HighwayClass::Primary, i as f64 * 2.0 + 0.5))
            .collect();
        let consensus: Vec<ConsensusLabel> = plan.iter().map(|s| label(&s.segment_id, Verdict::No)).collect();
        let samples = [LabelledSample {
            consensus: &consensus,
            plan: &plan,
        }];
        let input = regression_rows(
            &samples,
            Attribute::Potholes,
            &[Factor::IncomeQuintile],
            Some(&tracts),
            QuintileBasis::Segments,
        )
        .unwrap();
        // s5 lies at latitude 10.5, outside every tract
        assert_eq!(input.dropped_no_tract, 1);
        let levels: Vec<&str> = input.rows.iter().map(|r| r.levels[&Factor::IncomeQuintile].as_str()).collect();
        assert_eq!(levels, ["q1", "q2", "q3", "q4", "q5"]);
        assert!(regression_rows(&samples, Attribute::Potholes, &[Factor::IncomeQuintile], None, QuintileBasis::Segments).is_err());
    }
}
