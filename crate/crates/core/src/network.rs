//! Road network model: nodes, highway-tagged ways and class filtering.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::geo::{GeoPoint, Polyline};
use crate::{Error, Result};

/// OSM `highway=*` classification. Only the four major classes get their own
/// variant; every other tag value is carried verbatim.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum HighwayClass {
    Trunk,
    Primary,
    Secondary,
    Tertiary,
    Other(String),
}

impl HighwayClass {
    /// The classes sampled by default: trunk, primary, secondary, tertiary.
    pub const MAJOR: [HighwayClass; 4] = [
        HighwayClass::Trunk,
        HighwayClass::Primary,
        HighwayClass::Secondary,
        HighwayClass::Tertiary,
    ];

    pub fn from_tag(value: &str) -> Self {
        match value {
            "trunk" => HighwayClass::Trunk,
            "primary" => HighwayClass::Primary,
            "secondary" => HighwayClass::Secondary,
            "tertiary" => HighwayClass::Tertiary,
            other => HighwayClass::Other(other.to_string()),
        }
    }

    pub fn as_str(&self) -> &str {
        match self {
            HighwayClass::Trunk => "trunk",
            HighwayClass::Primary => "primary",
            HighwayClass::Secondary => "secondary",
            HighwayClass::Tertiary => "tertiary",
            HighwayClass::Other(tag) => tag,
        }
    }

    pub fn major() -> BTreeSet<HighwayClass> {
        Self::MAJOR.iter().cloned().collect()
    }
}

impl fmt::Display for HighwayClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HighwayClass {
    type Err = core::convert::Infallible;

    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        Ok(HighwayClass::from_tag(s))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Way {
    pub id: i64,
    pub node_ids: Vec<i64>,
    pub highway_class: HighwayClass,
    pub name: Option<String>,
}

/// Parsed nodes plus highway ways. Every node referenced by a way is present.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadNetwork {
    nodes: BTreeMap<i64, GeoPoint>,
    ways: Vec<Way>,
    source_name: String,
}

impl RoadNetwork {
    pub fn new(nodes: BTreeMap<i64, GeoPoint>, ways: Vec<Way>, source_name: impl Into<String>) -> Result<Self> {
        for way in &ways {
            if way.node_ids.len() < 2 {
                return Err(Error::TooFewNodes {
                    way_id: way.id,
                    count: way.node_ids.len(),
                });
            }
            if let Some(&node_id) = way.node_ids.iter().find(|id| !nodes.contains_key(id)) {
                return Err(Error::MissingNode { way_id: way.id, node_id });
            }
        }
        Ok(Self {
            nodes,
            ways,
            source_name: source_name.into(),
        })
    }

    pub fn nodes(&self) -> &BTreeMap<i64, GeoPoint> {
        &self.nodes
    }

    pub fn ways(&self) -> &[Way] {
        &self.ways
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn node(&self, id: i64) -> Option<GeoPoint> {
        self.nodes.get(&id).copied()
    }

    /// Resolves a way's node references into a polyline.
    pub fn polyline(&self, way: &Way) -> Result<Polyline> {
        let points = way
            .node_ids
            .iter()
            .map(|&node_id| self.node(node_id).ok_or(Error::MissingNode { way_id: way.id, node_id }))
            .collect::<Result<Vec<_>>>()?;
        Polyline::new(points)
    }
}

/// Ways whose class is in `classes`, in network order.
pub fn filter_roads<'a>(network: &'a RoadNetwork, classes: &BTreeSet<HighwayClass>) -> Vec<&'a Way> {
    network
        .ways
        .iter()
        .filter(|w| classes.contains(&w.highway_class))
        .collect()
}
