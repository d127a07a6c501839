use alloc::collections::BTreeMap;
use alloc::string::String;

use crate::labels::{Attribute, ConsensusLabel, Verdict};
use crate::{Error, Result};

/// Columns of the per-city condition table, in display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SummaryColumn {
    Potholes,
    Cracks,
    /// Clear markings among images that have markings.
    ClearMarkings,
    RoadsWithMarkings,
    Litter,
    PavedSidewalk,
    /// Clear markings over all images; images without markings count as not clear.
    ClearMarkingsAllRoads,
}

impl SummaryColumn {
    pub const ALL: [SummaryColumn; 7] = [
        SummaryColumn::Potholes,
        SummaryColumn::Cracks,
        SummaryColumn::ClearMarkings,
        SummaryColumn::RoadsWithMarkings,
        SummaryColumn::Litter,
        SummaryColumn::PavedSidewalk,
        SummaryColumn::ClearMarkingsAllRoads,
    ];

    pub fn title(&self) -> &'static str {
        match self {
            SummaryColumn::Potholes => "potholes",
            SummaryColumn::Cracks => "cracks",
            SummaryColumn::ClearMarkings => "clear road markings",
            SummaryColumn::RoadsWithMarkings => "roads w/ markings",
            SummaryColumn::Litter => "litter",
            SummaryColumn::PavedSidewalk => "paved sidewalk",
            SummaryColumn::ClearMarkingsAllRoads => "clear markings (all roads)",
        }
    }

    /// `Some(true/false)` for a resolved observation, `Some(None)` for an
    /// unresolved one, `None` when the image does not enter this column.
    fn classify(&self, label: &ConsensusLabel) -> Option<Option<bool>> {
        let plain = |attr: Attribute| Some(label.verdict(attr).as_bool());
        match self {
            SummaryColumn::Potholes => plain(Attribute::Potholes),
            SummaryColumn::Cracks => plain(Attribute::Cracks),
            SummaryColumn::RoadsWithMarkings => plain(Attribute::MarkingsPresent),
            SummaryColumn::Litter => plain(Attribute::Litter),
            SummaryColumn::PavedSidewalk => plain(Attribute::SidewalkPaved),
            SummaryColumn::ClearMarkings => match label.verdict(Attribute::MarkingsPresent) {
                Verdict::No => None,
                Verdict::Yes => Some(label.verdict(Attribute::MarkingsClear).as_bool()),
                _ => Some(None),
            },
            SummaryColumn::ClearMarkingsAllRoads => match label.verdict(Attribute::MarkingsPresent) {
                Verdict::No => Some(Some(false)),
                Verdict::Yes => Some(label.verdict(Attribute::MarkingsClear).as_bool()),
                _ => Some(None),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Tally {
    pub positives: usize,
    pub negatives: usize,
    pub unresolved: usize,
}

impl Tally {
    /// `None` when nothing resolvable was observed.
    pub fn proportion(&self) -> Option<f64> {
        let n = self.positives + self.negatives;
        (n > 0).then(|| self.positives as f64 / n as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CitySummary {
    pub city: String,
    pub n_images: usize,
    pub tallies: BTreeMap<SummaryColumn, Tally>,
}

impl CitySummary {
    pub fn proportion(&self, column: SummaryColumn) -> Option<f64> {
        self.tallies.get(&column).and_then(Tally::proportion)
    }

    pub fn unresolved(&self, column: SummaryColumn) -> usize {
        self.tallies.get(&column).map_or(0, |t| t.unresolved)
    }
}

/// Per-column share of positive verdicts, unresolved verdicts excluded.
pub fn summarize_city(consensus: &[ConsensusLabel], city: &str) -> Result<CitySummary> {
    if consensus.is_empty() {
        return Err(Error::InsufficientData("no consensus labels to summarize"));
    }
    let mut tallies = BTreeMap::new();
    for column in SummaryColumn::ALL {
        let mut t = Tally::default();
        for label in consensus {
            match column.classify(label) {
                Some(Some(true)) => t.positives += 1,
                Some(Some(false)) => t.negatives += 1,
                Some(None) => t.unresolved += 1,
                None => {}
            }
        }
        tallies.insert(column, t);
    }
    Ok(CitySummary {
        city: String::from(city),
        n_images: consensus.len(),
        tallies,
    })
}
