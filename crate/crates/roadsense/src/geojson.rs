//! GeoJSON export of sample plans and import of census-tract polygons.

use std::fmt::Write as _;

use roadsense_core::analysis::TractPolygon;
use roadsense_core::sample::SamplePlan;
use roadsense_core::{GeoPoint, PolygonRing};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExportMode {
    /// Segment start points, one Point per segment.
    #[default]
    Points,
    /// Full segment shapes as LineStrings. Segments without stored geometry
    /// are drawn from start to end.
    Lines,
}

impl std::str::FromStr for ExportMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "points" => Ok(ExportMode::Points),
            "lines" => Ok(ExportMode::Lines),
            other => Err(format!("unknown export mode `{other}` (expected points or lines)")),
        }
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn position(out: &mut String, p: GeoPoint) {
    let _ = write!(out, "[{:.7},{:.7}]", p.lon(), p.lat());
}

/// Renders a FeatureCollection, one feature per line, in plan order.
pub fn export_geojson(plan: &SamplePlan, mode: ExportMode) -> String {
    let mut out = String::from("{\"type\":\"FeatureCollection\",\"features\":[");
    for (rank, s) in plan.segments.iter().enumerate() {
        out.push_str(if rank == 0 { "\n" } else { ",\n" });
        out.push_str("{\"type\":\"Feature\",\"geometry\":");
        match mode {
            ExportMode::Points => {
                out.push_str("{\"type\":\"Point\",\"coordinates\":");
                position(&mut out, s.start);
            }
            ExportMode::Lines => {
                out.push_str("{\"type\":\"LineString\",\"coordinates\":[");
                let fallback = [s.start, s.end];
                let points = s.geometry.as_ref().map_or(&fallback[..], |g| g.points());
                for (i, &p) in points.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    position(&mut out, p);
                }
                out.push(']');
            }
        }
        let _ = write!(
            out,
            "}},\"properties\":{{\"segment_id\":{},\"city\":{},\"way_id\":{},\"index\":{},\"highway_class\":{},\"length_m\":{:.3},\"sample_rank\":{}}}}}",
            json_str(&s.segment_id),
            json_str(&s.city),
            s.way_id,
            s.index,
            json_str(s.highway_class.as_str()),
            s.length_m,
            rank
        );
    }
    if !plan.segments.is_empty() {
        out.push('\n');
    }
    out.push_str("]}\n");
    out
}

#[derive(Debug, thiserror::Error)]
pub enum TractError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("feature {index}: {message}")]
    Feature { index: usize, message: String },
    #[error("expected a FeatureCollection")]
    NotACollection,
}

fn ring(value: &Value) -> Result<Vec<GeoPoint>, String> {
    let positions = value.as_array().ok_or("ring is not an array")?;
    positions
        .iter()
        .map(|pos| {
            let xy = pos.as_array().filter(|a| a.len() >= 2).ok_or("position needs [lon, lat]")?;
            let lon = xy[0].as_f64().ok_or("longitude is not a number")?;
            let lat = xy[1].as_f64().ok_or("latitude is not a number")?;
            GeoPoint::new(lat, lon).map_err(|e| e.to_string())
        })
        .collect()
}

fn polygon(value: &Value) -> Result<PolygonRing, String> {
    let rings = value.as_array().filter(|r| !r.is_empty()).ok_or("polygon needs at least one ring")?;
    let exterior = ring(&rings[0])?;
    let holes = rings[1..].iter().map(ring).collect::<Result<Vec<_>, _>>()?;
    PolygonRing::new(exterior, holes).map_err(|e| e.to_string())
}

fn tract(feature: &Value) -> Result<TractPolygon, String> {
    let props = feature.get("properties").ok_or("missing properties")?;
    let tract_id = props
        .get("tract_id")
        .and_then(Value::as_str)
        .ok_or("property `tract_id` must be a string")?;
    let income = props
        .get("per_capita_income")
        .and_then(Value::as_f64)
        .ok_or("property `per_capita_income` must be a number")?;
    let geometry = feature.get("geometry").ok_or("missing geometry")?;
    let coords = geometry.get("coordinates").ok_or("geometry has no coordinates")?;
    let shapes = match geometry.get("type").and_then(Value::as_str) {
        Some("Polygon") => vec![polygon(coords)?],
        Some("MultiPolygon") => coords
            .as_array()
            .ok_or("MultiPolygon coordinates must be an array")?
            .iter()
            .map(polygon)
            .collect::<Result<_, _>>()?,
        other => return Err(format!("unsupported geometry type {other:?}")),
    };
    TractPolygon::new(tract_id, shapes, income).map_err(|e| e.to_string())
}

/// Reads tracts from a FeatureCollection of Polygon/MultiPolygon features
/// with `tract_id` and `per_capita_income` properties.
pub fn parse_tracts(input: &[u8]) -> Result<Vec<TractPolygon>, TractError> {
    let doc: Value = serde_json::from_slice(input)?;
    if doc.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(TractError::NotACollection);
    }
    let features = doc.get("features").and_then(Value::as_array).ok_or(TractError::NotACollection)?;
    features
        .iter()
        .enumerate()
        .map(|(index, f)| tract(f).map_err(|message| TractError::Feature { index, message }))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use roadsense_core::segment::RoadSegment;
    use roadsense_core::{HighwayClass, Polyline};

    fn plan(segments: Vec<RoadSegment>) -> SamplePlan {
        SamplePlan {
            seed: 0,
            requested_n: segments.len(),
            population_n: segments.len(),
            segments,
            exhausted_population: false,
        }
    }

    fn segment() -> RoadSegment {
        let a = GeoPoint::new(13.75, 100.5).unwrap();
        let b = GeoPoint::new(13.751, 100.5).unwrap();
        let c = GeoPoint::new(13.752, 100.501).unwrap();
        RoadSegment {
            segment_id: "5#0".into(),
            way_id: 5,
            index: 0,
            geometry: Some(Polyline::new(vec![a, b, c]).unwrap()),
            start: a,
            end: c,
            length_m: 250.0,
            highway_class: HighwayClass::Primary,
            city: "bangkok".into(),
        }
    }

    #[test]
    fn empty_plan() {
        let doc = export_geojson(&plan(vec![]), ExportMode::Points);
        let v: Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["type"], "FeatureCollection");
        assert_eq!(v["features"].as_array().unwrap().len(), 0);
    }

    #[test]
    fn point_feature_is_lon_lat() {
        let doc = export_geojson(&plan(vec![segment()]), ExportMode::Points);
        assert!(doc.contains("\"coordinates\":[100.5000000,13.7500000]"));
        let v: Value = serde_json::from_str(&doc).unwrap();
        let f = &v["features"][0];
        assert_eq!(f["geometry"]["type"], "Point");
        assert_eq!(f["properties"]["segment_id"], "5#0");
        assert_eq!(f["properties"]["city"], "bangkok");
    }

    #[test]
    fn line_features_use_full_geometry() {
        let mut no_shape = segment();
        no_shape.geometry = None;
        let doc = export_geojson(&plan(vec![segment(), no_shape]), ExportMode::Lines);
        let v: Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(v["features"][0]["geometry"]["coordinates"].as_array().unwrap().len(), 3);
        assert_eq!(v["features"][1]["geometry"]["coordinates"].as_array().unwrap().len(), 2);
        assert_eq!(v["features"][1]["properties"]["sample_rank"], 1);
    }

    #[test]
    fn tracts_polygon_and_multipolygon() {
        let doc = r#"{"type":"FeatureCollection","features":[
 {"type":"Feature","properties":{"tract_id":"A","per_capita_income":12000},
  "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
 {"type":"Feature","properties":{"tract_id":"B","per_capita_income":30000.5},
  "geometry":{"type":"MultiPolygon","coordinates":[[[[2,0],[3,0],[3,1],[2,1],[2,0]]],[[[4,0],[5,0],[5,1],[4,1],[4,0]]]]}}
]}"#;
        let tracts = parse_tracts(doc.as_bytes()).unwrap();
        assert_eq!(tracts.len(), 2);
        assert_eq!(tracts[1].shapes.len(), 2);
        assert!(tracts[1].contains(GeoPoint::new(0.5, 4.5).unwrap()));
        assert!(!tracts[0].contains(GeoPoint::new(0.5, 4.5).unwrap()));
    }

    #[test]
    fn tract_errors() {
        let numeric_id = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"tract_id":7,"per_capita_income":1},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}]}"#;
        assert!(matches!(parse_tracts(numeric_id.as_bytes()), Err(TractError::Feature { index: 0, .. })));
        assert!(matches!(parse_tracts(b"{\"type\":\"Feature\"}"), Err(TractError::NotACollection)));
        let open_ring = r#"{"type":"FeatureCollection","features":[{"type":"Feature","properties":{"tract_id":"x","per_capita_income":1},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1]]]}}]}"#;
        assert!(parse_tracts(open_ring.as_bytes()).is_err());
    }
}
