//! Crowdsourced condition labels: worker agreement scoring and per-segment
//! majority consensus.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// The six questions asked about each image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Attribute {
    Potholes,
    Cracks,
    MarkingsPresent,
    MarkingsClear,
    Litter,
    SidewalkPaved,
}

impl Attribute {
    pub const ALL: [Attribute; 6] = [
        Attribute::Potholes,
        Attribute::Cracks,
        Attribute::MarkingsPresent,
        Attribute::MarkingsClear,
        Attribute::Litter,
        Attribute::SidewalkPaved,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Attribute::Potholes => "potholes",
            Attribute::Cracks => "cracks",
            Attribute::MarkingsPresent => "markings_present",
            Attribute::MarkingsClear => "markings_clear",
            Attribute::Litter => "litter",
            Attribute::SidewalkPaved => "sidewalk_paved",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }

    fn slot(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Attribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SidewalkAnswer {
    Paved,
    Unpaved,
    NoSidewalk,
}

/// One worker's answers for one image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelRecord {
    pub assignment_id: String,
    pub worker_id: String,
    pub segment_id: String,
    pub potholes: bool,
    pub cracks: bool,
    pub markings_present: bool,
    /// `None` is "not applicable" and occurs exactly when no markings are present.
    pub markings_clear: Option<bool>,
    pub litter: bool,
    pub sidewalk_paved: SidewalkAnswer,
}

impl LabelRecord {
    /// The answer used for tallies. A missing sidewalk counts as unpaved;
    /// `markings_clear` has no answer when markings are absent.
    pub fn answer(&self, attr: Attribute) -> Option<bool> {
        match attr {
            Attribute::Potholes => Some(self.potholes),
            Attribute::Cracks => Some(self.cracks),
            Attribute::MarkingsPresent => Some(self.markings_present),
            Attribute::MarkingsClear => self.markings_clear,
            Attribute::Litter => Some(self.litter),
            Attribute::SidewalkPaved => Some(self.sidewalk_paved == SidewalkAnswer::Paved),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    Yes,
    No,
    Unresolved,
    NotApplicable,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Yes => "yes",
            Verdict::No => "no",
            Verdict::Unresolved => "unresolved",
            Verdict::NotApplicable => "na",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "yes" => Some(Verdict::Yes),
            "no" => Some(Verdict::No),
            "unresolved" => Some(Verdict::Unresolved),
            "na" => Some(Verdict::NotApplicable),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Verdict::Yes => Some(true),
            Verdict::No => Some(false),
            _ => None,
        }
    }
}

/// Strict-majority verdict; `None` when nobody answered.
fn majority(yes: usize, no: usize) -> Option<Verdict> {
    let total = yes + no;
    if total == 0 {
        None
    } else if 2 * yes > total {
        Some(Verdict::Yes)
    } else if 2 * no > total {
        Some(Verdict::No)
    } else {
        Some(Verdict::Unresolved)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConsensusLabel {
    pub segment_id: String,
    pub verdicts: [Verdict; 6],
    pub n_workers: usize,
}

impl ConsensusLabel {
    pub fn verdict(&self, attr: Attribute) -> Verdict {
        self.verdicts[attr.slot()]
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Aggregation {
    /// One label per segment, sorted by segment id.
    pub labels: Vec<ConsensusLabel>,
    /// Segments whose every label came from an excluded worker.
    pub omitted_segments: usize,
}

/// Drops repeated assignment ids, keeping the first occurrence.
fn dedup_assignments(records: &[LabelRecord]) -> Vec<&LabelRecord> {
    let mut seen = BTreeSet::new();
    records
        .iter()
        .filter(|r| seen.insert(r.assignment_id.as_str()))
        .collect()
}

fn consensus_for(segment_id: &str, labels: &[&LabelRecord]) -> ConsensusLabel {
    let mut verdicts = [Verdict::Unresolved; 6];
    for attr in Attribute::ALL {
        if attr == Attribute::MarkingsClear {
            continue;
        }
        let yes = labels.iter().filter(|r| r.answer(attr) == Some(true)).count();
        let no = labels.iter().filter(|r| r.answer(attr) == Some(false)).count();
        verdicts[attr.slot()] = majority(yes, no).unwrap_or(Verdict::Unresolved);
    }
    // clarity only among workers who saw markings
    let clear = if verdicts[Attribute::MarkingsPresent.slot()] == Verdict::No {
        Verdict::NotApplicable
    } else {
        let yes = labels.iter().filter(|r| r.markings_clear == Some(true)).count();
        let no = labels.iter().filter(|r| r.markings_clear == Some(false)).count();
        majority(yes, no).unwrap_or(Verdict::NotApplicable)
    };
    verdicts[Attribute::MarkingsClear.slot()] = clear;
    ConsensusLabel {
        segment_id: String::from(segment_id),
        verdicts,
        n_workers: labels.len(),
    }
}

/// Per-segment strict-majority consensus over the workers not in `excluding`.
pub fn aggregate(records: &[LabelRecord], excluding: &BTreeSet<String>) -> Aggregation {
    let mut by_segment: BTreeMap<&str, Vec<&LabelRecord>> = BTreeMap::new();
    for r in dedup_assignments(records) {
        by_segment.entry(r.segment_id.as_str()).or_default().push(r);
    }
    let mut out = Aggregation::default();
    for (segment_id, labels) in by_segment {
        let kept: Vec<&LabelRecord> = labels
            .into_iter()
            .filter(|r| !excluding.contains(&r.worker_id))
            .collect();
        if kept.is_empty() {
            out.omitted_segments += 1;
        } else {
            out.labels.push(consensus_for(segment_id, &kept));
        }
    }
    out
}

pub const DEFAULT_AGREEMENT_THRESHOLD: f64 = 0.6;
pub const DEFAULT_MIN_OVERLAP: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct WorkerScore {
    pub worker_id: String,
    /// Answers that could be compared with a resolved consensus.
    pub n_labels: usize,
    pub agreement: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QualityReport {
    /// Sorted by worker id.
    pub scores: Vec<WorkerScore>,
    /// No segment had more than one worker, so nobody could be checked.
    pub inert: bool,
}

impl QualityReport {
    pub fn flagged(&self) -> BTreeSet<String> {
        self.scores
            .iter()
            .filter(|s| s.flagged)
            .map(|s| s.worker_id.clone())
            .collect()
    }
}

/// Scores each worker by agreement with the provisional all-worker consensus.
pub fn score_workers(records: &[LabelRecord], threshold: f64, min_overlap: usize) -> QualityReport {
    let records = dedup_assignments(records);
    let mut by_segment: BTreeMap<&str, Vec<&LabelRecord>> = BTreeMap::new();
    for r in &records {
        by_segment.entry(r.segment_id.as_str()).or_default().push(r);
    }
    let consensus: BTreeMap<&str, ConsensusLabel> = by_segment
        .iter()
        .map(|(id, labels)| (*id, consensus_for(id, labels)))
        .collect();
    let inert = by_segment.values().all(|labels| {
        let workers: BTreeSet<&str> = labels.iter().map(|r| r.worker_id.as_str()).collect();
        workers.len() < 2
    });

    let mut tallies: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for r in &records {
        let entry = tallies.entry(r.worker_id.as_str()).or_default();
        let label = &consensus[r.segment_id.as_str()];
        for attr in Attribute::ALL {
            if let (Some(answer), Some(agreed)) = (r.answer(attr), label.verdict(attr).as_bool()) {
                entry.0 += 1;
                if answer == agreed {
                    entry.1 += 1;
                }
            }
        }
    }
    let scores = tallies
        .into_iter()
        .map(|(worker_id, (scored, matched))| {
            let agreement = if scored == 0 { 1.0 } else { matched as f64 / scored as f64 };
            WorkerScore {
                worker_id: String::from(worker_id),
                n_labels: scored,
                agreement,
                flagged: agreement < threshold && scored >= min_overlap,
            }
        })
        .collect();
    QualityReport { scores, inert }
}

/// Scores workers, excludes the flagged ones and aggregates once more.
pub fn aggregate_with_qc(records: &[LabelRecord], threshold: f64, min_overlap: usize) -> (QualityReport, Aggregation) {
    let report = score_workers(records, threshold, min_overlap);
    let aggregation = aggregate(records, &report.flagged());
    (report, aggregation)
}
