use std::collections::BTreeSet;

use proptest::prelude::*;
use roadsense_core::labels::{aggregate, Attribute, LabelRecord, SidewalkAnswer, Verdict};

fn record(worker: usize, segment: usize, bits: u8, marking: u8, sidewalk: u8) -> LabelRecord {
    let (markings_present, markings_clear) = match marking % 3 {
        0 => (false, None),
        1 => (true, Some(true)),
        _ => (true, Some(false)),
    };
    LabelRecord {
        assignment_id: format!("a{worker}-{segment}"),
        worker_id: format!("w{worker}"),
        segment_id: format!("{segment}#0"),
        potholes: bits & 1 != 0,
        cracks: bits & 2 != 0,
        markings_present,
        markings_clear,
        litter: bits & 4 != 0,
        sidewalk_paved: [SidewalkAnswer::Paved, SidewalkAnswer::Unpaved, SidewalkAnswer::NoSidewalk][sidewalk as usize % 3],
    }
}

fn records() -> impl Strategy<Value = Vec<LabelRecord>> {
    prop::collection::vec((0usize..5, 0usize..4, any::<u8>(), any::<u8>(), any::<u8>()), 1..20).prop_map(|rows| {
        let mut seen = BTreeSet::new();
        rows.into_iter()
            .filter(|(w, s, ..)| seen.insert((*w, *s)))
            .map(|(w, s, b, m, sw)| record(w, s, b, m, sw))
            .collect()
    })
}

/// Independent tally: compare raw counts.
fn oracle_verdict(answers: &[bool]) -> Verdict {
    let yes = answers.iter().filter(|a| **a).count();
    let no = answers.len() - yes;
    if yes > no {
        Verdict::Yes
    } else if no > yes {
        Verdict::No
    } else {
        Verdict::Unresolved
    }
}

fn oracle(records: &[LabelRecord], segment: &str) -> [Verdict; 6] {
    let rows: Vec<&LabelRecord> = records.iter().filter(|r| r.segment_id == segment).collect();
    let col = |f: &dyn Fn(&LabelRecord) -> bool| oracle_verdict(&rows.iter().map(|r| f(r)).collect::<Vec<_>>());
    let present = col(&|r| r.markings_present);
    let clear_answers: Vec<bool> = rows.iter().filter_map(|r| r.markings_clear).collect();
    let clear = if present == Verdict::No || clear_answers.is_empty() {
        Verdict::NotApplicable
    } else {
        oracle_verdict(&clear_answers)
    };
    [
        col(&|r| r.potholes),
        col(&|r| r.cracks),
        present,
        clear,
        col(&|r| r.litter),
        col(&|r| r.sidewalk_paved == SidewalkAnswer::Paved),
    ]
}

#[test]
fn exhaustive_small_panels_match_tally() {
    for k in 1..=5usize {
        for pothole_bits in 0..(1u32 << k) {
            for marking_code in 0..3u32.pow(k as u32) {
                let mut code = marking_code;
                let recs: Vec<LabelRecord> = (0..k)
                    .map(|w| {
                        let m = (code % 3) as u8;
                        code /= 3;
                        record(w, 0, ((pothole_bits >> w) & 1) as u8, m, 0)
                    })
                    .collect();
                let agg = aggregate(&recs, &BTreeSet::new());
                assert_eq!(agg.labels.len(), 1);
                assert_eq!(agg.labels[0].verdicts, oracle(&recs, "0#0"), "k={k} bits={pothole_bits} m={marking_code}");
            }
        }
    }
}

proptest! {
    #[test]
    fn matches_tally_oracle(recs in records()) {
        let agg = aggregate(&recs, &BTreeSet::new());
        for label in &agg.labels {
            prop_assert_eq!(label.verdicts, oracle(&recs, &label.segment_id));
        }
    }

    #[test]
    fn order_and_duplicates_do_not_matter(recs in records(), shift in 0usize..20) {
        let base = aggregate(&recs, &BTreeSet::new());
        let mut rotated = recs.clone();
        let len = rotated.len();
        rotated.rotate_left(shift % len);
        rotated.reverse();
        rotated.extend(recs.iter().take(3).cloned());
        prop_assert_eq!(aggregate(&rotated, &BTreeSet::new()), base);
    }

    #[test]
    fn exclusion_only_touches_own_segments(recs in records(), worker in 0usize..5) {
        let excluded: BTreeSet<String> = [format!("w{worker}")].into_iter().collect();
        let touched: BTreeSet<&str> = recs.iter().filter(|r| excluded.contains(&r.worker_id)).map(|r| r.segment_id.as_str()).collect();
        let before = aggregate(&recs, &BTreeSet::new());
        let after = aggregate(&recs, &excluded);
        for label in &before.labels {
            if touched.contains(label.segment_id.as_str()) {
                continue;
            }
            let other = after.labels.iter().find(|l| l.segment_id == label.segment_id).unwrap();
            prop_assert_eq!(other, label);
        }
        for label in &after.labels {
            prop_assert!(label.verdict(Attribute::Potholes) != Verdict::NotApplicable);
        }
    }
}
