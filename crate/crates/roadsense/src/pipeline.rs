//! The end-to-end run: ingest, filter, segment, sample, fetch, coverage.
//!
//! Every stage writes a plain file into the output directory. A completed
//! directory carries `manifest.json` with a fingerprint of the resolved
//! configuration and input, plus digests of every artifact; rerunning over
//! it with the same configuration does nothing. An interrupted fetch leaves
//! `queries.partial.csv` behind, and the next run picks up from it.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::Path;
use std::sync::Mutex;

use roadsense_core::coverage::{estimate_coverage, CoverageEstimate, QueryRecord, QueryStatus, Z_95};
use roadsense_core::network::filter_roads;
use roadsense_core::sample::{sample_points, sample_segments, sample_stratified, SamplePlan};
use roadsense_core::segment::{chunk_network, Chunked, DegeneratePolicy, RoadSegment};
use roadsense_core::{GeoPoint, HighwayClass, RoadNetwork};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{ErrorKind, StageContext, StageError};
use crate::osm::{parse_osm, ParseStats};
use crate::streetview::{fetch_all, ClientConfig, Clock, FetchError, FetchOutcome, FixedClock, SystemClock, Transport};
use crate::tables::{export_csv, plan_table, queries_table, query_fields, read_queries, segments_table};

pub const SEGMENTS_CSV: &str = "segments.csv";
pub const PLAN_CSV: &str = "plan.csv";
pub const QUERIES_CSV: &str = "queries.csv";
pub const COVERAGE_JSON: &str = "coverage.json";
pub const MANIFEST_JSON: &str = "manifest.json";
pub const JOURNAL_CSV: &str = "queries.partial.csv";

/// Artifacts whose digests the manifest records, in write order.
pub const ARTIFACTS: [&str; 4] = [SEGMENTS_CSV, PLAN_CSV, QUERIES_CSV, COVERAGE_JSON];

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary sibling so readers never see half a file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)
}

pub fn segment_network(
    network: &RoadNetwork,
    classes: &BTreeSet<HighwayClass>,
    target_m: f64,
    skip_degenerate: bool,
) -> roadsense_core::Result<Chunked> {
    let policy = if skip_degenerate {
        DegeneratePolicy::Skip
    } else {
        DegeneratePolicy::Fail
    };
    chunk_network(filter_roads(network, classes), network, target_m, policy)
}

pub fn make_plan(segments: &[RoadSegment], n: usize, seed: u64, stratify_by_class: bool) -> SamplePlan {
    if stratify_by_class {
        sample_stratified(segments, n, seed)
    } else {
        sample_segments(segments, n, seed)
    }
}

/// `coverage.json`: the estimate plus a breakdown of every query status.
pub fn coverage_json(estimate: &CoverageEstimate, records: &[QueryRecord]) -> String {
    let count = |f: &dyn Fn(&QueryStatus) -> bool| records.iter().filter(|r| f(&r.status)).count();
    let doc = json!({
        "successes": estimate.successes,
        "total": estimate.total,
        "proportion": estimate.proportion,
        "ci_low": estimate.ci_low,
        "ci_high": estimate.ci_high,
        "z": Z_95,
        "queried": records.len(),
        "ok": count(&|s| *s == QueryStatus::Ok),
        "zero_results": count(&|s| *s == QueryStatus::ZeroResults),
        "request_denied": count(&|s| *s == QueryStatus::RequestDenied),
        "transport_errors": count(&|s| matches!(s, QueryStatus::TransportError(_))),
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("json serializes");
    text.push('\n');
    text
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    /// The directory already held a matching completed run.
    UpToDate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub status: RunStatus,
    pub coverage: Option<CoverageEstimate>,
    pub segments: usize,
    pub sampled: usize,
    pub fetched: usize,
    pub reused: usize,
    pub skipped_ways: Vec<i64>,
}

fn fingerprint(config: &RunConfig, input_sha256: &str) -> String {
    let doc = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config.manifest_json(),
        "input_sha256": input_sha256,
    });
    sha256_hex(doc.to_string().as_bytes())
}

fn is_up_to_date(out_dir: &Path, fingerprint: &str) -> bool {
    let Ok(text) = std::fs::read(out_dir.join(MANIFEST_JSON)) else {
        return false;
    };
    let Ok(manifest) = serde_json::from_slice::<serde_json::Value>(&text) else {
        return false;
    };
    manifest["fingerprint"] == fingerprint
        && ARTIFACTS.iter().all(|name| {
            std::fs::read(out_dir.join(name)).is_ok_and(|bytes| manifest["artifacts"][name] == sha256_hex(&bytes))
        })
}

/// Records from a previous attempt whose location still matches the plan.
fn previous_records(out_dir: &Path, points: &[(String, GeoPoint)]) -> Result<Vec<QueryRecord>, StageError> {
    let mut records = Vec::new();
    for name in [QUERIES_CSV, JOURNAL_CSV] {
        match std::fs::read(out_dir.join(name)) {
            Ok(bytes) => records.extend(read_queries(&bytes).stage("fetch", ErrorKind::Input)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(e) => return Err(StageError::new("fetch", ErrorKind::Input, e)),
        }
    }
    let key = |p: GeoPoint| format!("{:.7},{:.7}", p.lat(), p.lon());
    let wanted: std::collections::HashMap<&str, String> = points.iter().map(|(id, p)| (id.as_str(), key(*p))).collect();
    records.retain(|r| wanted.get(r.segment_id.as_str()) == Some(&key(r.location)));
    Ok(records)
}

struct Journal(Mutex<File>);

impl Journal {
    fn create(path: &Path, seed: &[QueryRecord]) -> std::io::Result<Self> {
        let mut file = OpenOptions::new().create(true).write(true).truncate(true).open(path)?;
        file.write_all(&export_csv(&queries_table(seed)))?;
        file.flush()?;
        Ok(Self(Mutex::new(file)))
    }

    fn append(&self, record: &QueryRecord) {
        let mut w = csv::WriterBuilder::new()
            .has_headers(false)
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(query_fields(record)).expect("in-memory write");
        let bytes = w.into_inner().expect("in-memory flush");
        let mut file = self.0.lock().expect("journal lock");
        if let Err(e) = file.write_all(&bytes).and_then(|_| file.flush()) {
            log::warn!("could not journal {}: {e}", record.segment_id);
        }
    }
}

fn fetch_kind(e: &FetchError) -> ErrorKind {
    match e {
        FetchError::Request(_) | FetchError::Concurrency => ErrorKind::Config,
        FetchError::Image { .. } => ErrorKind::Input,
        FetchError::Denied { .. } => ErrorKind::Network,
    }
}

/// Queries every point and writes `queries.csv` into `out_dir` in point
/// order, resuming from earlier `queries.csv` / journal contents there.
pub fn fetch_into(
    out_dir: &Path,
    points: &[(String, GeoPoint)],
    client: &ClientConfig,
    transport: &dyn Transport,
    clock: &dyn Clock,
) -> Result<FetchOutcome, StageError> {
    std::fs::create_dir_all(out_dir).stage("fetch", ErrorKind::Input)?;
    let existing = previous_records(out_dir, points)?;
    let journal_path = out_dir.join(JOURNAL_CSV);
    let journal = Journal::create(&journal_path, &existing).stage("fetch", ErrorKind::Input)?;
    let fetched = fetch_all(points, client, transport, &existing, clock, &|r| journal.append(r)).map_err(|e| {
        let kind = fetch_kind(&e);
        StageError::new("fetch", kind, e)
    })?;
    write_atomic(&out_dir.join(QUERIES_CSV), &export_csv(&queries_table(&fetched.records))).stage("fetch", ErrorKind::Input)?;
    drop(journal);
    let _ = std::fs::remove_file(&journal_path);
    Ok(fetched)
}

pub fn run_pipeline(config: &RunConfig, transport: &dyn Transport) -> Result<RunReport, StageError> {
    let out = config.out_dir.as_path();
    let input = std::fs::read(&config.osm_path)
        .map_err(|e| anyhow::anyhow!("reading {}: {e}", config.osm_path.display()))
        .stage("ingest", ErrorKind::Input)?;
    let input_sha256 = sha256_hex(&input);
    let fingerprint = fingerprint(config, &input_sha256);
    if is_up_to_date(out, &fingerprint) {
        log::info!("{} is up to date", out.display());
        return Ok(RunReport {
            status: RunStatus::UpToDate,
            coverage: None,
            segments: 0,
            sampled: 0,
            fetched: 0,
            reused: 0,
            skipped_ways: vec![],
        });
    }
    std::fs::create_dir_all(out).stage("ingest", ErrorKind::Input)?;
    // an incomplete manifest must not survive a failed rerun
    let _ = std::fs::remove_file(out.join(MANIFEST_JSON));

    let (network, stats): (RoadNetwork, ParseStats) = parse_osm(&input, &config.city).stage("ingest", ErrorKind::Input)?;
    log::info!(
        "ingest: {} nodes, {} highway ways ({} duplicate node ids)",
        stats.nodes,
        stats.highway_ways,
        stats.duplicate_nodes
    );

    let chunked = segment_network(&network, &config.classes, config.target_m, config.skip_degenerate)
        .stage("segment", ErrorKind::Input)?;
    if !chunked.skipped.is_empty() {
        log::warn!("segment: skipped {} degenerate ways", chunked.skipped.len());
    }
    write_atomic(&out.join(SEGMENTS_CSV), &export_csv(&segments_table(&chunked.segments))).stage("segment", ErrorKind::Input)?;

    let plan = make_plan(&chunked.segments, config.sample_n, config.seed, config.stratify_by_class);
    if plan.exhausted_population {
        log::warn!(
            "sample: requested {} segments but only {} exist; using all",
            plan.requested_n,
            plan.population_n
        );
    }
    write_atomic(&out.join(PLAN_CSV), &export_csv(&plan_table(&plan))).stage("sample", ErrorKind::Input)?;

    let points = sample_points(&plan);
    let client = ClientConfig {
        base_url: config.base_url.clone(),
        api_key: config.api_key.clone().unwrap_or_default(),
        max_concurrency: config.max_concurrency,
        rate_per_s: config.rate_per_s,
        retries: config.retries,
        backoff_ms: config.backoff_ms,
        out_dir: config.download_images.then(|| out.to_path_buf()),
        ..ClientConfig::default()
    };
    let clock: Box<dyn Clock> = match &config.fixed_clock {
        Some(t) => Box::new(FixedClock(t.clone())),
        None => Box::new(SystemClock),
    };
    let fetched = fetch_into(out, &points, &client, transport, clock.as_ref())?;

    let estimate = estimate_coverage(&fetched.records).stage("coverage", ErrorKind::Analysis)?;
    write_atomic(&out.join(COVERAGE_JSON), coverage_json(&estimate, &fetched.records).as_bytes())
        .stage("coverage", ErrorKind::Input)?;

    let mut digests = serde_json::Map::new();
    for name in ARTIFACTS {
        let bytes = std::fs::read(out.join(name)).stage("manifest", ErrorKind::Input)?;
        digests.insert(name.into(), sha256_hex(&bytes).into());
    }
    let manifest = json!({
        "tool": "roadsense",
        "version": env!("CARGO_PKG_VERSION"),
        "core_version": roadsense_core::VERSION,
        "fingerprint": fingerprint,
        "config": config.manifest_json(),
        "input": {
            "osm_path": config.osm_path.display().to_string(),
            "sha256": input_sha256,
        },
        "parse_stats": {
            "nodes": stats.nodes,
            "highway_ways": stats.highway_ways,
            "dropped_ways": stats.dropped_ways,
            "duplicate_nodes": stats.duplicate_nodes,
            "relations": stats.relations,
        },
        "counts": {
            "segments": chunked.segments.len(),
            "skipped_ways": chunked.skipped,
            "sampled": plan.len(),
            "exhausted_population": plan.exhausted_population,
            "images": fetched.records.iter().filter(|r| r.image_path.is_some()).count(),
        },
        "artifacts": digests,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("json serializes");
    text.push('\n');
    write_atomic(&out.join(MANIFEST_JSON), text.as_bytes()).stage("manifest", ErrorKind::Input)?;

    Ok(RunReport {
        status: RunStatus::Completed,
        coverage: Some(estimate),
        segments: chunked.segments.len(),
        sampled: plan.len(),
        fetched: fetched.fetched,
        reused: fetched.reused,
        skipped_ways: chunked.skipped,
    })
}
