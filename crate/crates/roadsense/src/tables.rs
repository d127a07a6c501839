//! CSV tables written and read by the pipeline stages.
//!
//! Every table is UTF-8 with LF line endings and always carries its header,
//! even when empty. Coordinates are fixed at 7 decimals.

use std::collections::HashMap;

use roadsense_core::coverage::{QueryRecord, QueryStatus};
use roadsense_core::labels::{Attribute, ConsensusLabel, Verdict};
use roadsense_core::sample::SamplePlan;
use roadsense_core::segment::RoadSegment;
use roadsense_core::{GeoPoint, HighwayClass};

pub const SEGMENT_COLUMNS: [&str; 10] = [
    "segment_id",
    "way_id",
    "index",
    "start_lat",
    "start_lon",
    "end_lat",
    "end_lon",
    "length_m",
    "highway_class",
    "city",
];

pub const QUERY_COLUMNS: [&str; 8] = [
    "segment_id",
    "lat",
    "lon",
    "status",
    "pano_id",
    "capture_date",
    "image_path",
    "queried_at",
];

pub const CONSENSUS_COLUMNS: [&str; 8] = [
    "segment_id",
    "potholes",
    "cracks",
    "markings_present",
    "markings_clear",
    "litter",
    "sidewalk_paved",
    "n_workers",
];

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("line {line}, column `{column}`: {message}")]
    Field {
        line: usize,
        column: String,
        message: String,
    },
}

/// A rectangular table of strings.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn export_csv(table: &Table) -> Vec<u8> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(&table.header).expect("in-memory write");
    for row in &table.rows {
        w.write_record(row).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn parse_csv(input: &[u8]) -> Result<Table, TableError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        rows.push(rec?.iter().map(String::from).collect());
    }
    Ok(Table { header, rows })
}

/// Row accessor keyed by column name, reporting 1-based file lines.
pub struct Columns {
    index: HashMap<String, usize>,
}

impl Columns {
    pub fn new(table: &Table, required: &[&str]) -> Result<Self, TableError> {
        let index: HashMap<String, usize> = table
            .header
            .iter()
            .enumerate()
            .map(|(i, h)| (h.trim().to_string(), i))
            .collect();
        if let Some(missing) = required.iter().find(|c| !index.contains_key(**c)) {
            return Err(TableError::MissingColumn(missing.to_string()));
        }
        Ok(Self { index })
    }

    pub fn get<'r>(&self, row: &'r [String], column: &str) -> &'r str {
        self.index.get(column).and_then(|&i| row.get(i)).map_or("", |s| s.trim())
    }

    pub fn parse<T: std::str::FromStr>(&self, row: &[String], line: usize, column: &str) -> Result<T, TableError>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.get(row, column);
        raw.parse().map_err(|e: T::Err| TableError::Field {
            line,
            column: column.into(),
            message: format!("`{raw}`: {e}"),
        })
    }
}

/// Data rows start on line 2.
fn line_of(row_index: usize) -> usize {
    row_index + 2
}

fn point(cols: &Columns, row: &[String], line: usize, lat: &str, lon: &str) -> Result<GeoPoint, TableError> {
    let p = GeoPoint::new(cols.parse(row, line, lat)?, cols.parse(row, line, lon)?);
    p.map_err(|e| TableError::Field {
        line,
        column: lat.into(),
        message: e.to_string(),
    })
}

fn segment_fields(s: &RoadSegment) -> Vec<String> {
    vec![
        s.segment_id.clone(),
        s.way_id.to_string(),
        s.index.to_string(),
        format!("{:.7}", s.start.lat()),
        format!("{:.7}", s.start.lon()),
        format!("{:.7}", s.end.lat()),
        format!("{:.7}", s.end.lon()),
        format!("{:.3}", s.length_m),
        s.highway_class.to_string(),
        s.city.clone(),
    ]
}

pub fn segments_table(segments: &[RoadSegment]) -> Table {
    let mut t = Table::new(SEGMENT_COLUMNS);
    for s in segments {
        t.push(segment_fields(s));
    }
    t
}

/// Same columns as the segment table plus the 0-based `sample_rank`.
pub fn plan_table(plan: &SamplePlan) -> Table {
    let mut t = Table::new(SEGMENT_COLUMNS.iter().copied().chain(["sample_rank"]));
    for (rank, s) in plan.segments.iter().enumerate() {
        let mut row = segment_fields(s);
        row.push(rank.to_string());
        t.push(row);
    }
    t
}

/// Reads a segment or plan table. Segments carry endpoints only. Plan rows
/// are returned sorted by `sample_rank` when that column is present.
pub fn read_segments(input: &[u8]) -> Result<Vec<RoadSegment>, TableError> {
    let table = parse_csv(input)?;
    let cols = Columns::new(&table, &SEGMENT_COLUMNS)?;
    let ranked = table.header.iter().any(|h| h == "sample_rank");
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let line = line_of(i);
        let rank: usize = if ranked { cols.parse(row, line, "sample_rank")? } else { i };
        let seg = RoadSegment {
            segment_id: cols.get(row, "segment_id").to_string(),
            way_id: cols.parse(row, line, "way_id")?,
            index: cols.parse(row, line, "index")?,
            geometry: None,
            start: point(&cols, row, line, "start_lat", "start_lon")?,
            end: point(&cols, row, line, "end_lat", "end_lon")?,
            length_m: cols.parse(row, line, "length_m")?,
            highway_class: HighwayClass::from_tag(cols.get(row, "highway_class")),
            city: cols.get(row, "city").to_string(),
        };
        out.push((rank, seg));
    }
    out.sort_by_key(|(rank, _)| *rank);
    Ok(out.into_iter().map(|(_, s)| s).collect())
}

fn opt(s: &Option<impl ToString>) -> String {
    s.as_ref().map(ToString::to_string).unwrap_or_default()
}

pub fn queries_table(records: &[QueryRecord]) -> Table {
    let mut t = Table::new(QUERY_COLUMNS);
    for r in records {
        t.push(query_fields(r));
    }
    t
}

pub fn query_fields(r: &QueryRecord) -> Vec<String> {
    vec![
        r.segment_id.clone(),
        format!("{:.7}", r.location.lat()),
        format!("{:.7}", r.location.lon()),
        r.status.to_string(),
        opt(&r.pano_id),
        opt(&r.capture_date),
        opt(&r.image_path),
        r.queried_at.clone(),
    ]
}

pub fn read_queries(input: &[u8]) -> Result<Vec<QueryRecord>, TableError> {
    let table = parse_csv(input)?;
    let cols = Columns::new(&table, &QUERY_COLUMNS)?;
    let nonempty = |row: &[String], c: &str| Some(cols.get(row, c)).filter(|s| !s.is_empty()).map(String::from);
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let line = line_of(i);
        let status: QueryStatus = cols.parse(row, line, "status")?;
        let capture_date = match nonempty(row, "capture_date") {
            Some(_) => Some(cols.parse(row, line, "capture_date")?),
            None => None,
        };
        out.push(QueryRecord {
            segment_id: cols.get(row, "segment_id").to_string(),
            location: point(&cols, row, line, "lat", "lon")?,
            status,
            pano_id: nonempty(row, "pano_id"),
            capture_date,
            image_path: nonempty(row, "image_path"),
            queried_at: cols.get(row, "queried_at").to_string(),
        });
    }
    Ok(out)
}

pub fn consensus_table(labels: &[ConsensusLabel]) -> Table {
    let mut t = Table::new(CONSENSUS_COLUMNS);
    for l in labels {
        let mut row = vec![l.segment_id.clone()];
        row.extend(Attribute::ALL.iter().map(|&a| l.verdict(a).as_str().to_string()));
        row.push(l.n_workers.to_string());
        t.push(row);
    }
    t
}

pub fn read_consensus(input: &[u8]) -> Result<Vec<ConsensusLabel>, TableError> {
    let table = parse_csv(input)?;
    let cols = Columns::new(&table, &CONSENSUS_COLUMNS)?;
    let mut out = Vec::with_capacity(table.rows.len());
    for (i, row) in table.rows.iter().enumerate() {
        let line = line_of(i);
        let mut verdicts = [Verdict::Unresolved; 6];
        for (slot, attr) in verdicts.iter_mut().zip(Attribute::ALL) {
            let raw = cols.get(row, attr.name());
            *slot = Verdict::parse(raw).ok_or_else(|| TableError::Field {
                line,
                column: attr.name().into(),
                message: format!("unknown verdict `{raw}` (expected yes, no, unresolved or na)"),
            })?;
        }
        out.push(ConsensusLabel {
            segment_id: cols.get(row, "segment_id").to_string(),
            verdicts,
            n_workers: cols.parse(row, line, "n_workers")?,
        });
    }
    Ok(out)
}
