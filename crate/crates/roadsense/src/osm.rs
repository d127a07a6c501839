//! OpenStreetMap XML (v0.6) reading and writing.
//!
//! Only `node`, `way`, `nd` and `tag` are interpreted. Ways without a
//! `highway` tag are dropped; relations are counted and ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use quick_xml::events::{BytesStart, Event};
use quick_xml::{Reader, XmlVersion};
use roadsense_core::{GeoPoint, HighwayClass, RoadNetwork, Way};

#[derive(Debug, thiserror::Error)]
pub enum OsmError {
    #[error("malformed XML at line {line} (byte {offset}): {message}")]
    Xml { line: usize, offset: u64, message: String },
    #[error("<{element}> at line {line} is missing attribute `{attribute}`")]
    MissingAttribute {
        element: &'static str,
        attribute: &'static str,
        line: usize,
    },
    #[error("<{element}> at line {line}: invalid {attribute} value `{value}`")]
    InvalidValue {
        element: &'static str,
        attribute: &'static str,
        value: String,
        line: usize,
    },
    #[error("node {node_id} has out-of-range coordinates (lat {lat}, lon {lon})")]
    Range { node_id: i64, lat: f64, lon: f64 },
    #[error("way {way_id} references node {node_id}, which is not in the extract")]
    MissingNode { way_id: i64, node_id: i64 },
    #[error("highway way {way_id} has {count} node references, at least 2 required")]
    TooFewNodes { way_id: i64, count: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseStats {
    pub nodes: usize,
    pub highway_ways: usize,
    pub dropped_ways: usize,
    /// Node ids defined more than once; the last definition is kept.
    pub duplicate_nodes: usize,
    pub relations: usize,
}

struct PendingWay {
    id: i64,
    node_ids: Vec<i64>,
    highway: Option<String>,
    name: Option<String>,
}

fn line_of(input: &[u8], offset: u64) -> usize {
    let end = (offset as usize).min(input.len());
    input[..end].iter().filter(|&&b| b == b'\n').count() + 1
}

fn attributes(e: &BytesStart<'_>, input: &[u8], offset: u64) -> Result<BTreeMap<String, String>, OsmError> {
    let mut out = BTreeMap::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| OsmError::Xml {
            line: line_of(input, offset),
            offset,
            message: err.to_string(),
        })?;
        let value = attr.normalized_value(XmlVersion::Implicit1_0).map_err(|err| OsmError::Xml {
            line: line_of(input, offset),
            offset,
            message: err.to_string(),
        })?;
        out.insert(attr.key.as_ref().to_string(), value.into_owned());
    }
    Ok(out)
}

fn required<T: std::str::FromStr>(
    attrs: &BTreeMap<String, String>,
    element: &'static str,
    attribute: &'static str,
    line: usize,
) -> Result<T, OsmError> {
    let raw = attrs.get(attribute).ok_or(OsmError::MissingAttribute {
        element,
        attribute,
        line,
    })?;
    raw.trim().parse().map_err(|_| OsmError::InvalidValue {
        element,
        attribute,
        value: raw.clone(),
        line,
    })
}

/// Parses an OSM XML document into a road network named `source_name`.
pub fn parse_osm(input: &[u8], source_name: &str) -> Result<(RoadNetwork, ParseStats), OsmError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().check_end_names = true;
    let mut buf = Vec::new();
    let mut stats = ParseStats::default();
    let mut nodes: BTreeMap<i64, GeoPoint> = BTreeMap::new();
    let mut ways: Vec<Way> = Vec::new();
    let mut current: Option<PendingWay> = None;

    loop {
        let offset = reader.buffer_position();
        let event = reader.read_event_into(&mut buf).map_err(|err| {
            let pos = reader.error_position();
            OsmError::Xml {
                line: line_of(input, pos),
                offset: pos,
                message: err.to_string(),
            }
        })?;
        let (element, closes) = match &event {
            Event::Start(e) => (Some(e.clone().into_owned()), false),
            Event::Empty(e) => (Some(e.clone().into_owned()), true),
            Event::End(e) => {
                if e.name().as_ref() == "way" {
                    if let Some(way) = current.take() {
                        finish_way(way, &mut ways, &mut stats)?;
                    }
                }
                (None, false)
            }
            Event::Eof => break,
            _ => (None, false),
        };
        if let Some(e) = element {
            let line = line_of(input, offset);
            match AsRef::<str>::as_ref(&e.name()) {
                "node" => {
                    let attrs = attributes(&e, input, offset)?;
                    let id: i64 = required(&attrs, "node", "id", line)?;
                    let lat: f64 = required(&attrs, "node", "lat", line)?;
                    let lon: f64 = required(&attrs, "node", "lon", line)?;
                    let point = GeoPoint::new(lat, lon).map_err(|_| OsmError::Range { node_id: id, lat, lon })?;
                    if nodes.insert(id, point).is_some() {
                        stats.duplicate_nodes += 1;
                    }
                }
                "way" => {
                    let attrs = attributes(&e, input, offset)?;
                    let way = PendingWay {
                        id: required(&attrs, "way", "id", line)?,
                        node_ids: Vec::new(),
                        highway: None,
                        name: None,
                    };
                    if closes {
                        finish_way(way, &mut ways, &mut stats)?;
                    } else {
                        current = Some(way);
                    }
                }
                "nd" => {
                    if let Some(way) = current.as_mut() {
                        let attrs = attributes(&e, input, offset)?;
                        way.node_ids.push(required(&attrs, "nd", "ref", line)?);
                    }
                }
                "tag" => {
                    if let Some(way) = current.as_mut() {
                        let attrs = attributes(&e, input, offset)?;
                        let k: String = required(&attrs, "tag", "k", line)?;
                        let v = attrs.get("v").cloned().unwrap_or_default();
                        match k.as_str() {
                            "highway" => way.highway = Some(v),
                            "name" => way.name = Some(v),
                            _ => {}
                        }
                    }
                }
                "relation" => stats.relations += 1,
                _ => {}
            }
        }
        buf.clear();
    }
    stats.nodes = nodes.len();

    for way in &ways {
        if let Some(&node_id) = way.node_ids.iter().find(|id| !nodes.contains_key(id)) {
            return Err(OsmError::MissingNode { way_id: way.id, node_id });
        }
    }
    let network = RoadNetwork::new(nodes, ways, source_name).map_err(|e| match e {
        roadsense_core::Error::MissingNode { way_id, node_id } => OsmError::MissingNode { way_id, node_id },
        roadsense_core::Error::TooFewNodes { way_id, count } => OsmError::TooFewNodes { way_id, count },
        other => OsmError::Xml {
            line: 0,
            offset: 0,
            message: other.to_string(),
        },
    })?;
    Ok((network, stats))
}

fn finish_way(way: PendingWay, ways: &mut Vec<Way>, stats: &mut ParseStats) -> Result<(), OsmError> {
    let Some(highway) = way.highway else {
        stats.dropped_ways += 1;
        return Ok(());
    };
    if way.node_ids.len() < 2 {
        return Err(OsmError::TooFewNodes {
            way_id: way.id,
            count: way.node_ids.len(),
        });
    }
    stats.highway_ways += 1;
    ways.push(Way {
        id: way.id,
        node_ids: way.node_ids,
        highway_class: HighwayClass::from_tag(&highway),
        name: way.name,
    });
    Ok(())
}

/// Serializes a network back to the OSM XML subset read by [`parse_osm`].
/// Coordinates use the shortest decimal that round-trips exactly.
pub fn write_osm(network: &RoadNetwork) -> String {
    use quick_xml::escape::escape;
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<osm version=\"0.6\" generator=\"roadsense\">\n");
    for (id, p) in network.nodes() {
        let _ = writeln!(out, "  <node id=\"{id}\" lat=\"{}\" lon=\"{}\"/>", p.lat(), p.lon());
    }
    for way in network.ways() {
        let _ = writeln!(out, "  <way id=\"{}\">", way.id);
        for nd in &way.node_ids {
            let _ = writeln!(out, "    <nd ref=\"{nd}\"/>");
        }
        let _ = writeln!(
            out,
            "    <tag k=\"highway\" v=\"{}\"/>",
            escape(way.highway_class.as_str())
        );
        if let Some(name) = &way.name {
            let _ = writeln!(out, "    <tag k=\"name\" v=\"{}\"/>", escape(name.as_str()));
        }
        out.push_str("  </way>\n");
    }
    out.push_str("</osm>\n");
    out
}
