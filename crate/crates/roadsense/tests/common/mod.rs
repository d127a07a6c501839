//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::Path;
use std::process::{Command, Output};

use roadsense_core::labels::{LabelRecord, SidewalkAnswer};
use roadsense_core::sample::SplitMix64;

pub fn roadsense(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadsense"))
        .args(args)
        .env_remove("STREETVIEW_API_KEY")
        .output()
        .expect("binary runs")
}

pub fn roadsense_with_key(args: &[&str], key: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_roadsense"))
        .args(args)
        .env("STREETVIEW_API_KEY", key)
        .output()
        .expect("binary runs")
}

/// Runs the binary and panics with its stderr unless it exits 0.
pub fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

pub const GRID_ORIGIN: (f64, f64) = (42.30, -83.20);
const CLASSES: [&str; 5] = ["primary", "secondary", "tertiary", "trunk", "residential"];

/// A 7 x 7 street grid, about 3 km on a side, with 14 highway ways (one of
/// them residential), a footpath without a highway class filter match, an
/// untagged way and a relation.
pub fn grid_city_osm() -> String {
    let (lat0, lon0) = GRID_ORIGIN;
    let step = 0.005;
    let mut xml = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"fixture\">\n");
    let id = |r: usize, c: usize| (r * 7 + c + 1) as i64;
    for r in 0..7 {
        for c in 0..7 {
            let lat = lat0 + r as f64 * step;
            let lon = lon0 + c as f64 * step * 1.35;
            writeln!(xml, "  <node id=\"{}\" lat=\"{lat:.7}\" lon=\"{lon:.7}\"/>", id(r, c)).unwrap();
        }
    }
    let mut way_id = 100;
    let mut way = |xml: &mut String, nodes: Vec<i64>, tags: &[(&str, &str)]| {
        way_id += 1;
        writeln!(xml, "  <way id=\"{way_id}\">").unwrap();
        for n in nodes {
            writeln!(xml, "    <nd ref=\"{n}\"/>").unwrap();
        }
        for (k, v) in tags {
            writeln!(xml, "    <tag k=\"{k}\" v=\"{v}\"/>").unwrap();
        }
        xml.push_str("  </way>\n");
    };
    for r in 0..7 {
        way(&mut xml, (0..7).map(|c| id(r, c)).collect(), &[("highway", CLASSES[r % 5]), ("name", "East &amp; West")]);
    }
    for c in 0..7 {
        way(&mut xml, (0..7).map(|r| id(r, c)).collect(), &[("highway", CLASSES[(c + 2) % 5])]);
    }
    way(&mut xml, vec![id(0, 0), id(1, 1)], &[("highway", "footway")]);
    way(&mut xml, vec![id(2, 2), id(3, 3)], &[("building", "yes")]);
    xml.push_str("  <relation id=\"900\">\n    <member type=\"way\" ref=\"101\" role=\"\"/>\n  </relation>\n</osm>\n");
    xml
}

/// Ten north-south tract strips covering the grid, poorest in the west.
pub fn grid_tracts_geojson() -> String {
    let (lat0, lon0) = GRID_ORIGIN;
    let width = 6.0 * 0.005 * 1.35 / 10.0;
    let features: Vec<String> = (0..10)
        .map(|i| {
            let w = lon0 - 0.001 + i as f64 * width;
            let e = if i == 9 { lon0 + 0.05 } else { w + width };
            let (s, n) = (lat0 - 0.01, lat0 + 0.04);
            format!(
                r#"{{"type":"Feature","properties":{{"tract_id":"T{i}","per_capita_income":{}}},"geometry":{{"type":"Polygon","coordinates":[[[{w},{s}],[{e},{s}],[{e},{n}],[{w},{n}],[{w},{s}]]]}}}}"#,
                9_000 + 4_000 * i
            )
        })
        .collect();
    format!("{{\"type\":\"FeatureCollection\",\"features\":[\n{}\n]}}\n", features.join(",\n"))
}

pub const MTURK_HEADER: &str = "HITId,AssignmentId,WorkerId,AssignmentStatus,Input.segment_id,Input.image_url,\
Answer.potholes,Answer.cracks,Answer.markings_present,Answer.markings_clear,Answer.litter,Answer.sidewalk";

fn yn(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn mturk_row(r: &LabelRecord) -> String {
    format!(
        "H-{seg},{a},{w},Approved,{seg},https://example.invalid/{seg}.jpg,{},{},{},{},{},{}",
        yn(r.potholes),
        yn(r.cracks),
        yn(r.markings_present),
        r.markings_clear.map_or("na", yn),
        yn(r.litter),
        match r.sidewalk_paved {
            SidewalkAnswer::Paved => "yes",
            SidewalkAnswer::Unpaved => "no",
            SidewalkAnswer::NoSidewalk => "nosidewalk",
        },
        seg = r.segment_id,
        a = r.assignment_id,
        w = r.worker_id,
    )
}

pub fn mturk_csv(records: &[LabelRecord]) -> String {
    let mut out = String::from(MTURK_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&mturk_row(r));
        out.push('\n');
    }
    out
}

/// The true condition of one image.
#[derive(Debug, Clone)]
pub struct Truth {
    pub segment_id: String,
    pub potholes: bool,
    pub cracks: bool,
    pub markings_present: bool,
    pub markings_clear: bool,
    pub litter: bool,
    pub sidewalk: SidewalkAnswer,
}

impl Truth {
    pub fn clean(segment_id: impl Into<String>) -> Self {
        Truth {
            segment_id: segment_id.into(),
            potholes: false,
            cracks: false,
            markings_present: false,
            markings_clear: false,
            litter: false,
            sidewalk: SidewalkAnswer::Unpaved,
        }
    }

    fn record(&self, assignment: String, worker: String) -> LabelRecord {
        LabelRecord {
            assignment_id: assignment,
            worker_id: worker,
            segment_id: self.segment_id.clone(),
            potholes: self.potholes,
            cracks: self.cracks,
            markings_present: self.markings_present,
            markings_clear: self.markings_present.then_some(self.markings_clear),
            litter: self.litter,
            sidewalk_paved: self.sidewalk,
        }
    }
}

pub const SPAMMER: &str = "W-SPAM";

/// Crowd answers for `truths`: three honest workers per image, one of whom
/// may get one question wrong, and on every fourth image a fourth honest
/// worker plus a worker answering at random. The honest majority is always
/// the truth, with or without the random worker.
pub fn crowd(truths: &[Truth], prefix: &str, seed: u64) -> Vec<LabelRecord> {
    let mut rng = SplitMix64::new(seed);
    let mut coin = move |p: f64| ((rng.next_u64() >> 11) as f64) < p * (1u64 << 53) as f64;
    let mut out = Vec::new();
    let mut n = 0;
    for (i, t) in truths.iter().enumerate() {
        let extra = i % 4 == 3;
        let honest = if extra { 4 } else { 3 };
        let sloppy = if coin(0.3) { Some(i % honest) } else { None };
        for j in 0..honest {
            n += 1;
            let worker = format!("{prefix}-W{:02}", (i % 10 + 10 * j) % 40);
            let mut r = t.record(format!("{prefix}-A{n:06}"), worker);
            if sloppy == Some(j) {
                match i % 4 {
                    0 => r.potholes = !r.potholes,
                    1 => r.cracks = !r.cracks,
                    2 => r.litter = !r.litter,
                    _ => r.markings_clear = r.markings_clear.map(|c| !c),
                }
            }
            out.push(r);
        }
        if extra {
            n += 1;
            let present = coin(0.5);
            out.push(LabelRecord {
                assignment_id: format!("{prefix}-A{n:06}"),
                worker_id: SPAMMER.into(),
                segment_id: t.segment_id.clone(),
                potholes: coin(0.5),
                cracks: coin(0.5),
                markings_present: present,
                markings_clear: if present { Some(coin(0.5)) } else { None },
                litter: coin(0.5),
                sidewalk_paved: if coin(0.5) { SidewalkAnswer::Paved } else { SidewalkAnswer::NoSidewalk },
            });
        }
    }
    out
}

/// Deterministic subset of `0..n` of size `k`.
pub fn chosen(n: usize, k: usize, rng: &mut SplitMix64) -> Vec<bool> {
    let mut flags = vec![false; n];
    for i in roadsense_core::sample::sample_indices(n, k, rng) {
        flags[i] = true;
    }
    flags
}
