//! Newline-delimited JSON network file written by `roadsense ingest`.
//!
//! ```text
//! {"type":"network","format":"roadsense-network/1","source_name":"bangkok"}
//! {"type":"node","id":1,"lat":13.75,"lon":100.5}
//! {"type":"way","id":10,"highway":"primary","name":"Rama IV","nodes":[1,2]}
//! ```
//!
//! The header comes first, then all nodes, then all ways. Coordinates are
//! written as the shortest decimal that parses back to the same `f64`.

use std::collections::BTreeMap;

use roadsense_core::{GeoPoint, HighwayClass, RoadNetwork, Way};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "roadsense-network/1";

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum Record {
    Network {
        format: String,
        source_name: String,
    },
    Node {
        id: i64,
        lat: f64,
        lon: f64,
    },
    Way {
        id: i64,
        highway: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        nodes: Vec<i64>,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum NetfileError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("missing network header line")]
    MissingHeader,
    #[error("unsupported network format `{0}` (expected {FORMAT})")]
    Format(String),
    #[error("line {line}: {message}")]
    Invalid { line: usize, message: String },
}

pub fn write_network(network: &RoadNetwork) -> String {
    let mut out = String::new();
    let mut push = |r: &Record| {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    };
    push(&Record::Network {
        format: FORMAT.into(),
        source_name: network.source_name().into(),
    });
    for (&id, p) in network.nodes() {
        push(&Record::Node {
            id,
            lat: p.lat(),
            lon: p.lon(),
        });
    }
    for w in network.ways() {
        push(&Record::Way {
            id: w.id,
            highway: w.highway_class.as_str().into(),
            name: w.name.clone(),
            nodes: w.node_ids.clone(),
        });
    }
    out
}

pub fn read_network(input: &str) -> Result<RoadNetwork, NetfileError> {
    let mut source_name = None;
    let mut nodes = BTreeMap::new();
    let mut ways = Vec::new();
    for (i, text) in input.lines().enumerate() {
        let line = i + 1;
        if text.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(text).map_err(|source| NetfileError::Json { line, source })?;
        match record {
            Record::Network { format, source_name: s } => {
                if format != FORMAT {
                    return Err(NetfileError::Format(format));
                }
                source_name = Some(s);
            }
            _ if source_name.is_none() => return Err(NetfileError::MissingHeader),
            Record::Node { id, lat, lon } => {
                let p = GeoPoint::new(lat, lon).map_err(|e| NetfileError::Invalid {
                    line,
                    message: e.to_string(),
                })?;
                nodes.insert(id, p);
            }
            Record::Way { id, highway, name, nodes } => ways.push(Way {
                id,
                node_ids: nodes,
                highway_class: HighwayClass::from_tag(&highway),
                name,
            }),
        }
    }
    let source_name = source_name.ok_or(NetfileError::MissingHeader)?;
    RoadNetwork::new(nodes, ways, source_name).map_err(|e| NetfileError::Invalid {
        line: 0,
        message: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn network() -> RoadNetwork {
        let mut nodes = BTreeMap::new();
        nodes.insert(1, GeoPoint::new(13.123456789012, 100.5).unwrap());
        nodes.insert(2, GeoPoint::new(-0.1, 0.30000000000000004).unwrap());
        let ways = vec![
            Way {
                id: 10,
                node_ids: vec![1, 2],
                highway_class: HighwayClass::Primary,
                name: Some("Rama \"IV\"".into()),
            },
            Way {
                id: 11,
                node_ids: vec![2, 1],
                highway_class: HighwayClass::Other("living_street".into()),
                name: None,
            },
        ];
        RoadNetwork::new(nodes, ways, "bangkok").unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let net = network();
        let text = write_network(&net);
        assert!(text.starts_with("{\"type\":\"network\""));
        assert_eq!(read_network(&text).unwrap(), net);
    }

    #[test]
    fn header_is_required() {
        let text = write_network(&network());
        let body: String = text.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert!(matches!(read_network(&body), Err(NetfileError::MissingHeader)));
        let wrong = text.replace(FORMAT, "other/9");
        assert!(matches!(read_network(&wrong), Err(NetfileError::Format(_))));
    }

    #[test]
    fn bad_line_is_reported() {
        let mut text = write_network(&network());
        text.push_str("{\"type\":\"node\",\"id\":\"x\"}\n");
        match read_network(&text) {
            Err(NetfileError::Json { line, .. }) => assert_eq!(line, 6),
            other => panic!("unexpected {other:?}"),
        }
    }
}
