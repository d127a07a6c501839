//! Spherical-earth primitives: great-circle distance, interpolation along
//! polylines and point-in-polygon containment.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{atan2, cos, sin, sqrt};

use crate::{Error, Result};

/// Mean earth radius used for every distance in the crate.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Slack allowed when asking for a point past either end of a polyline.
pub const ALONG_SLACK_M: f64 = 1e-6;

const DEG: f64 = PI / 180.0;

/// A WGS84 latitude/longitude pair in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if lat.is_finite() && lon.is_finite() && (-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon) {
            Ok(Self { lat, lon })
        } else {
            Err(Error::InvalidCoordinate { lat, lon })
        }
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    fn to_unit(self) -> [f64; 3] {
        let (phi, lambda) = (self.lat * DEG, self.lon * DEG);
        [cos(phi) * cos(lambda), cos(phi) * sin(lambda), sin(phi)]
    }

    fn from_unit(v: [f64; 3]) -> Self {
        let lat = atan2(v[2], sqrt(v[0] * v[0] + v[1] * v[1])) / DEG;
        let lon = atan2(v[1], v[0]) / DEG;
        Self {
            lat: lat.clamp(-90.0, 90.0),
            lon: lon.clamp(-180.0, 180.0),
        }
    }
}

/// Central angle between two points in radians (haversine form).
pub fn central_angle(a: GeoPoint, b: GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat * DEG, b.lat * DEG);
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon) * DEG;
    let s1 = sin(dphi / 2.0);
    let s2 = sin(dlambda / 2.0);
    let h = (s1 * s1 + cos(phi1) * cos(phi2) * s2 * s2).min(1.0);
    2.0 * atan2(sqrt(h), sqrt(1.0 - h))
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    central_angle(a, b) * EARTH_RADIUS_M
}

/// Spherical linear interpolation; `t = 0` and `t = 1` return the endpoints
/// exactly.
pub fn slerp(a: GeoPoint, b: GeoPoint, t: f64) -> GeoPoint {
    if t <= 0.0 {
        return a;
    }
    if t >= 1.0 {
        return b;
    }
    let omega = central_angle(a, b);
    let s = sin(omega);
    if s < 1e-12 {
        // sub-millimeter edge
        return GeoPoint {
            lat: a.lat + (b.lat - a.lat) * t,
            lon: a.lon + (b.lon - a.lon) * t,
        };
    }
    let wa = sin((1.0 - t) * omega) / s;
    let wb = sin(t * omega) / s;
    let (va, vb) = (a.to_unit(), b.to_unit());
    GeoPoint::from_unit([
        wa * va[0] + wb * vb[0],
        wa * va[1] + wb * vb[1],
        wa * va[2] + wb * vb[2],
    ])
}

/// An ordered path of at least two points with no zero-length edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<GeoPoint>,
    cumulative: Vec<f64>,
}

impl Polyline {
    /// Builds a polyline, dropping consecutive duplicate points.
    pub fn new(points: Vec<GeoPoint>) -> Result<Self> {
        let mut deduped: Vec<GeoPoint> = Vec::with_capacity(points.len());
        for p in points {
            if deduped.last() != Some(&p) {
                deduped.push(p);
            }
        }
        if deduped.len() < 2 {
            return Err(Error::DegenerateLine(deduped.len()));
        }
        let mut cumulative = Vec::with_capacity(deduped.len());
        let mut total = 0.0;
        cumulative.push(0.0);
        for w in deduped.windows(2) {
            total += haversine_m(w[0], w[1]);
            cumulative.push(total);
        }
        Ok(Self {
            points: deduped,
            cumulative,
        })
    }

    pub fn points(&self) -> &[GeoPoint] {
        &self.points
    }

    /// Distance from the first vertex to each vertex, in meters.
    pub fn cumulative_m(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn length_m(&self) -> f64 {
        *self.cumulative.last().expect("polyline has >= 2 points")
    }

    pub fn first(&self) -> GeoPoint {
        self.points[0]
    }

    pub fn last(&self) -> GeoPoint {
        self.points[self.points.len() - 1]
    }
}

/// The point reached after walking `distance_m` from the first vertex.
pub fn point_along(line: &Polyline, distance_m: f64) -> Result<GeoPoint> {
    let length_m = line.length_m();
    if distance_m.is_nan() || distance_m < -ALONG_SLACK_M || distance_m > length_m + ALONG_SLACK_M {
        return Err(Error::DistanceOutOfRange { distance_m, length_m });
    }
    if distance_m <= 0.0 {
        return Ok(line.first());
    }
    if distance_m >= length_m {
        return Ok(line.last());
    }
    let cum = &line.cumulative;
    let k = cum.partition_point(|&c| c <= distance_m);
    let (d0, d1) = (cum[k - 1], cum[k]);
    let frac = (distance_m - d0) / (d1 - d0);
    Ok(slerp(line.points[k - 1], line.points[k], frac))
}

/// Inclusive lon/lat bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BoundingBox {
    pub fn of(points: &[GeoPoint]) -> Self {
        let mut bb = BoundingBox {
            min_lat: f64::INFINITY,
            min_lon: f64::INFINITY,
            max_lat: f64::NEG_INFINITY,
            max_lon: f64::NEG_INFINITY,
        };
        for p in points {
            bb.min_lat = bb.min_lat.min(p.lat);
            bb.max_lat = bb.max_lat.max(p.lat);
            bb.min_lon = bb.min_lon.min(p.lon);
            bb.max_lon = bb.max_lon.max(p.lon);
        }
        bb
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lat >= self.min_lat && p.lat <= self.max_lat && p.lon >= self.min_lon && p.lon <= self.max_lon
    }

    pub fn union(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            min_lat: self.min_lat.min(other.min_lat),
            min_lon: self.min_lon.min(other.min_lon),
            max_lat: self.max_lat.max(other.max_lat),
            max_lon: self.max_lon.max(other.max_lon),
        }
    }
}

/// A polygon with an explicitly closed exterior ring and optional holes.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonRing {
    exterior: Vec<GeoPoint>,
    holes: Vec<Vec<GeoPoint>>,
    bbox: BoundingBox,
}

fn validate_ring(ring: &[GeoPoint]) -> Result<()> {
    if ring.len() < 4 {
        return Err(Error::InvalidRing("ring needs at least 4 positions"));
    }
    if ring.first() != ring.last() {
        return Err(Error::InvalidRing("ring is not closed"));
    }
    let open = &ring[..ring.len() - 1];
    let mut distinct: Vec<(u64, u64)> = open.iter().map(|p| (p.lat.to_bits(), p.lon.to_bits())).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::InvalidRing("ring needs at least 3 distinct vertices"));
    }
    if ring.windows(2).any(|w| (w[1].lon - w[0].lon).abs() > 180.0) {
        return Err(Error::AntimeridianCrossing);
    }
    Ok(())
}

impl PolygonRing {
    pub fn new(exterior: Vec<GeoPoint>, holes: Vec<Vec<GeoPoint>>) -> Result<Self> {
        validate_ring(&exterior)?;
        for hole in &holes {
            validate_ring(hole)?;
        }
        let bbox = BoundingBox::of(&exterior);
        Ok(Self { exterior, holes, bbox })
    }

    pub fn exterior(&self) -> &[GeoPoint] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<GeoPoint>] {
        &self.holes
    }

    pub fn bbox(&self) -> BoundingBox {
        self.bbox
    }
}

fn on_segment(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> bool {
    let cross = (b.lon - a.lon) * (p.lat - a.lat) - (b.lat - a.lat) * (p.lon - a.lon);
    cross == 0.0
        && p.lon >= a.lon.min(b.lon)
        && p.lon <= a.lon.max(b.lon)
        && p.lat >= a.lat.min(b.lat)
        && p.lat <= a.lat.max(b.lat)
}

fn on_ring_boundary(p: GeoPoint, ring: &[GeoPoint]) -> bool {
    ring.windows(2).any(|w| on_segment(p, w[0], w[1]))
}

/// Even-odd ray casting with x = lon, y = lat.
fn ray_cast(p: GeoPoint, ring: &[GeoPoint]) -> bool {
    let mut inside = false;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        if (a.lat > p.lat) != (b.lat > p.lat) {
            let x = a.lon + (p.lat - a.lat) * (b.lon - a.lon) / (b.lat - a.lat);
            if p.lon < x {
                inside = !inside;
            }
        }
    }
    inside
}

/// Containment test in lon/lat degrees. Points on any ring edge count as
/// inside.
pub fn point_in_polygon(p: GeoPoint, poly: &PolygonRing) -> bool {
    if !poly.bbox.contains(p) {
        return false;
    }
    if on_ring_boundary(p, &poly.exterior) || poly.holes.iter().any(|h| on_ring_boundary(p, h)) {
        return true;
    }
    ray_cast(p, &poly.exterior) && !poly.holes.iter().any(|h| ray_cast(p, h))
}
