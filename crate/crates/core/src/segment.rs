//! Chunking ways into fixed-length road segments.
//!
//! Tail rule: a leftover shorter than half the target is merged into the
//! previous segment, otherwise it becomes its own shorter segment. Ways shorter
//! than the target produce a single segment.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::geo::{point_along, GeoPoint, Polyline};
use crate::network::{HighwayClass, RoadNetwork, Way};
use crate::{Error, Result};

pub const DEFAULT_TARGET_M: f64 = 500.0;

/// Ways shorter than this are rejected as degenerate.
pub const MIN_WAY_LENGTH_M: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RoadSegment {
    pub segment_id: String,
    pub way_id: i64,
    pub index: u32,
    /// Full segment shape. `None` when the segment was loaded from a table
    /// that only carries endpoints.
    pub geometry: Option<Polyline>,
    pub start: GeoPoint,
    pub end: GeoPoint,
    pub length_m: f64,
    pub highway_class: HighwayClass,
    pub city: String,
}

pub fn segment_id(way_id: i64, index: u32) -> String {
    format!("{way_id}#{index}")
}

/// Boundaries `[0, c1, .., total]` along a way of length `total_m`.
pub fn cut_distances(total_m: f64, target_m: f64) -> Vec<f64> {
    let mut cuts = Vec::new();
    cuts.push(0.0);
    if total_m <= target_m {
        cuts.push(total_m);
        return cuts;
    }
    let n_full = libm::floor(total_m / target_m) as usize;
    for k in 1..=n_full {
        cuts.push(k as f64 * target_m);
    }
    let remainder = total_m - n_full as f64 * target_m;
    if remainder >= target_m / 2.0 {
        cuts.push(total_m);
    } else {
        *cuts.last_mut().expect("n_full >= 1") = total_m;
    }
    cuts
}

fn check_target(target_m: f64) -> Result<()> {
    if target_m.is_finite() && target_m > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidTarget(target_m))
    }
}

/// Splits one way into consecutive segments of `target_m` meters.
pub fn chunk_way(way: &Way, network: &RoadNetwork, target_m: f64) -> Result<Vec<RoadSegment>> {
    check_target(target_m)?;
    let line = match network.polyline(way) {
        Ok(line) => line,
        Err(Error::DegenerateLine(_)) => {
            return Err(Error::DegenerateWay {
                way_id: way.id,
                length_m: 0.0,
            })
        }
        Err(e) => return Err(e),
    };
    let total = line.length_m();
    if total < MIN_WAY_LENGTH_M {
        return Err(Error::DegenerateWay {
            way_id: way.id,
            length_m: total,
        });
    }

    let cuts = cut_distances(total, target_m);
    let cut_points = cuts
        .iter()
        .map(|&d| point_along(&line, d))
        .collect::<Result<Vec<_>>>()?;
    let cumulative = line.cumulative_m();
    let vertices = line.points();

    let mut segments = Vec::with_capacity(cuts.len() - 1);
    let mut v = 1;
    for (i, bounds) in cuts.windows(2).enumerate() {
        let (d0, d1) = (bounds[0], bounds[1]);
        let mut points = Vec::new();
        points.push(cut_points[i]);
        while v < vertices.len() && cumulative[v] <= d0 {
            v += 1;
        }
        while v < vertices.len() && cumulative[v] < d1 {
            points.push(vertices[v]);
            v += 1;
        }
        points.push(cut_points[i + 1]);
        let geometry = Polyline::new(points)?;
        let index = i as u32;
        segments.push(RoadSegment {
            segment_id: segment_id(way.id, index),
            way_id: way.id,
            index,
            start: cut_points[i],
            end: cut_points[i + 1],
            geometry: Some(geometry),
            length_m: d1 - d0,
            highway_class: way.highway_class.clone(),
            city: String::from(network.source_name()),
        });
    }
    Ok(segments)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    #[default]
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chunked {
    pub segments: Vec<RoadSegment>,
    /// Way ids skipped as degenerate (only with [`DegeneratePolicy::Skip`]).
    pub skipped: Vec<i64>,
}

/// Chunks every way in order and concatenates the results.
pub fn chunk_network<'a, I>(ways: I, network: &RoadNetwork, target_m: f64, policy: DegeneratePolicy) -> Result<Chunked>
where
    I: IntoIterator<Item = &'a Way>,
{
    check_target(target_m)?;
    let mut out = Chunked::default();
    for way in ways {
        match chunk_way(way, network, target_m) {
            Ok(segs) => out.segments.extend(segs),
            Err(Error::DegenerateWay { way_id, .. }) if policy == DegeneratePolicy::Skip => out.skipped.push(way_id),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}
