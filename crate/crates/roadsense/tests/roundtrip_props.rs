mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;
use roadsense::geojson::{export_geojson, ExportMode};
use roadsense::labels_csv::parse_labels;
use roadsense::netfile::{read_network, write_network};
use roadsense::osm::{parse_osm, write_osm};
use roadsense::tables::{consensus_table, export_csv, parse_csv, plan_table, read_consensus, read_segments, Table};
use roadsense_core::labels::{ConsensusLabel, LabelRecord, SidewalkAnswer, Verdict};
use roadsense_core::sample::SamplePlan;
use roadsense_core::segment::{segment_id, RoadSegment};
use roadsense_core::{GeoPoint, HighwayClass, RoadNetwork, Way};
use serde_json::Value;

fn point() -> impl Strategy<Value = GeoPoint> {
    (-90.0..=90.0f64, -180.0..=180.0f64).prop_map(|(a, b)| GeoPoint::new(a, b).unwrap())
}

fn class() -> impl Strategy<Value = HighwayClass> {
    prop_oneof![
        Just(HighwayClass::Trunk),
        Just(HighwayClass::Primary),
        Just(HighwayClass::Secondary),
        Just(HighwayClass::Tertiary),
        "[a-z_]{1,12}".prop_map(|s| HighwayClass::from_tag(&s)),
    ]
}

fn network() -> impl Strategy<Value = RoadNetwork> {
    (
        prop::collection::btree_map(-1000i64..100_000, point(), 2..40),
        prop::collection::vec(
            (
                prop::collection::vec(any::<prop::sample::Index>(), 2..8),
                class(),
                prop::option::of("[a-zA-Z0-9 &<>\"'.éü-]{0,16}"),
            ),
            0..8,
        ),
    )
        .prop_map(|(nodes, ways)| {
            let ids: Vec<i64> = nodes.keys().copied().collect();
            let ways = ways
                .into_iter()
                .enumerate()
                .map(|(i, (refs, highway_class, name))| Way {
                    id: i as i64 * 3 + 1,
                    node_ids: refs.iter().map(|r| ids[r.index(ids.len())]).collect(),
                    highway_class,
                    name,
                })
                .collect();
            RoadNetwork::new(nodes, ways, "prop").unwrap()
        })
}

fn table() -> impl Strategy<Value = Table> {
    (2usize..5).prop_flat_map(|cols| {
        (
            prop::collection::vec("[a-z_]{1,8}", cols),
            prop::collection::vec(prop::collection::vec("(\\PC|[,\"\n\r ]){0,12}", cols), 0..10),
        )
            .prop_map(|(header, rows)| {
                let mut t = Table::new(header);
                for r in rows {
                    t.push(r);
                }
                t
            })
    })
}

fn verdict() -> impl Strategy<Value = Verdict> {
    prop_oneof![Just(Verdict::Yes), Just(Verdict::No), Just(Verdict::Unresolved), Just(Verdict::NotApplicable)]
}

fn label_record() -> impl Strategy<Value = LabelRecord> {
    (
        "[A-Z0-9]{1,10}",
        "[A-Z0-9]{1,8}",
        (1i64..10_000, 0u32..20),
        any::<[bool; 4]>(),
        any::<bool>(),
        0u8..3,
    )
        .prop_map(|(a, w, (way, idx), [potholes, cracks, present, litter], clear, sidewalk)| LabelRecord {
            assignment_id: a,
            worker_id: w,
            segment_id: segment_id(way, idx),
            potholes,
            cracks,
            markings_present: present,
            markings_clear: present.then_some(clear),
            litter,
            sidewalk_paved: [SidewalkAnswer::Paved, SidewalkAnswer::Unpaved, SidewalkAnswer::NoSidewalk][sidewalk as usize],
        })
}

fn segments() -> impl Strategy<Value = Vec<RoadSegment>> {
    prop::collection::vec((point(), point(), 1.0..5000.0f64, class(), "[a-z]{1,8}"), 0..20).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (start, end, length_m, highway_class, city))| RoadSegment {
                segment_id: segment_id(i as i64 + 1, i as u32 % 3),
                way_id: i as i64 + 1,
                index: i as u32 % 3,
                geometry: None,
                start,
                end,
                length_m,
                highway_class,
                city,
            })
            .collect()
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 5e-8
}

proptest! {
    #[test]
    fn osm_write_then_parse_is_identity(net in network()) {
        let (back, stats) = parse_osm(write_osm(&net).as_bytes(), "prop").unwrap();
        prop_assert_eq!(&back, &net);
        prop_assert_eq!(stats.highway_ways, net.ways().len());
    }

    #[test]
    fn network_file_round_trip(net in network()) {
        prop_assert_eq!(read_network(&write_network(&net)).unwrap(), net);
    }

    #[test]
    fn csv_export_then_parse_is_identity(t in table()) {
        let bytes = export_csv(&t);
        prop_assert!(!bytes.windows(2).any(|w| w == b"\r\n") || t.rows.iter().flatten().any(|c| c.contains('\r')));
        prop_assert_eq!(parse_csv(&bytes).unwrap(), t);
    }

    #[test]
    fn mturk_rows_parse_back(records in prop::collection::vec(label_record(), 1..30)) {
        let parsed = parse_labels(common::mturk_csv(&records).as_bytes()).unwrap();
        prop_assert_eq!(parsed.records, records);
        prop_assert_eq!(parsed.coerced_markings_clear, 0);
    }

    #[test]
    fn consensus_table_round_trip(rows in prop::collection::vec((1i64..1000, prop::array::uniform6(verdict()), 1usize..9), 0..20)) {
        let labels: Vec<ConsensusLabel> = rows
            .into_iter()
            .map(|(way, verdicts, n_workers)| ConsensusLabel { segment_id: segment_id(way, 0), verdicts, n_workers })
            .collect();
        prop_assert_eq!(read_consensus(&export_csv(&consensus_table(&labels))).unwrap(), labels);
    }

    #[test]
    fn plan_table_keeps_order_and_coordinates(segs in segments()) {
        let plan = SamplePlan { seed: 1, requested_n: segs.len(), population_n: segs.len(), segments: segs.clone(), exhausted_population: false };
        let back = read_segments(&export_csv(&plan_table(&plan))).unwrap();
        prop_assert_eq!(back.len(), segs.len());
        for (a, b) in back.iter().zip(&segs) {
            prop_assert_eq!(&a.segment_id, &b.segment_id);
            prop_assert_eq!(&a.highway_class, &b.highway_class);
            prop_assert!(close(a.start.lat(), b.start.lat()) && close(a.start.lon(), b.start.lon()));
            prop_assert!(close(a.end.lat(), b.end.lat()) && close(a.end.lon(), b.end.lon()));
            prop_assert!((a.length_m - b.length_m).abs() <= 5e-4);
        }
    }

    #[test]
    fn geojson_points_are_valid_and_deterministic(segs in segments()) {
        let plan = SamplePlan { seed: 1, requested_n: segs.len(), population_n: segs.len(), segments: segs.clone(), exhausted_population: false };
        for mode in [ExportMode::Points, ExportMode::Lines] {
            let text = export_geojson(&plan, mode);
            prop_assert_eq!(&text, &export_geojson(&plan, mode));
            let doc: Value = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(&doc["type"], "FeatureCollection");
            let features = doc["features"].as_array().unwrap();
            prop_assert_eq!(features.len(), segs.len());
            let mut seen = BTreeMap::new();
            for (f, s) in features.iter().zip(&segs) {
                prop_assert_eq!(&f["properties"]["segment_id"], &Value::from(s.segment_id.clone()));
                prop_assert_eq!(&f["properties"]["city"], &Value::from(s.city.clone()));
                let first = match mode {
                    ExportMode::Points => f["geometry"]["coordinates"].clone(),
                    ExportMode::Lines => f["geometry"]["coordinates"][0].clone(),
                };
                prop_assert!(close(first[0].as_f64().unwrap(), s.start.lon()));
                prop_assert!(close(first[1].as_f64().unwrap(), s.start.lat()));
                seen.insert(s.segment_id.clone(), ());
            }
        }
    }
}
