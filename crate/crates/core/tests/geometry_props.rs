use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;
use roadsense_core::geo::{haversine_m, point_along, point_in_polygon};
use roadsense_core::network::filter_roads;
use roadsense_core::segment::chunk_way;
use roadsense_core::{GeoPoint, HighwayClass, PolygonRing, Polyline, RoadNetwork, Way};

fn point() -> impl Strategy<Value = GeoPoint> {
    (-89.0..89.0f64, -179.0..179.0f64).prop_map(|(lat, lon)| GeoPoint::new(lat, lon).unwrap())
}

/// Short local polylines: a random walk of 2..12 steps of up to ~1.1 km.
fn local_polyline() -> impl Strategy<Value = Vec<GeoPoint>> {
    (
        -60.0..60.0f64,
        -170.0..170.0f64,
        prop::collection::vec((-0.01..0.01f64, -0.01..0.01f64), 1..12),
    )
        .prop_map(|(lat, lon, steps)| {
            let mut pts = vec![GeoPoint::new(lat, lon).unwrap()];
            let (mut a, mut b) = (lat, lon);
            for (dlat, dlon) in steps {
                a += dlat;
                b += dlon;
                pts.push(GeoPoint::new(a, b).unwrap());
            }
            pts
        })
}

/// Winding number in lon/lat, independent of the even-odd implementation.
fn winding_number(p: GeoPoint, ring: &[GeoPoint]) -> i32 {
    let mut wn = 0;
    for w in ring.windows(2) {
        let (a, b) = (w[0], w[1]);
        let is_left = (b.lon() - a.lon()) * (p.lat() - a.lat()) - (p.lon() - a.lon()) * (b.lat() - a.lat());
        if a.lat() <= p.lat() {
            if b.lat() > p.lat() && is_left > 0.0 {
                wn += 1;
            }
        } else if b.lat() <= p.lat() && is_left < 0.0 {
            wn -= 1;
        }
    }
    wn
}

/// Random convex polygon: sorted angles around a centre.
fn convex_polygon() -> impl Strategy<Value = Vec<GeoPoint>> {
    (
        -50.0..50.0f64,
        -150.0..150.0f64,
        0.1..2.0f64,
        prop::collection::btree_set(0u32..3600, 3..16),
    )
        .prop_map(|(clat, clon, r, angles)| {
            let mut ring: Vec<GeoPoint> = angles
                .into_iter()
                .map(|a| {
                    let t = a as f64 / 3600.0 * std::f64::consts::TAU;
                    GeoPoint::new(clat + r * t.sin(), clon + r * t.cos()).unwrap()
                })
                .collect();
            ring.push(ring[0]);
            ring
        })
}

proptest! {
    #[test]
    fn haversine_triangle_inequality(a in point(), b in point(), c in point()) {
        let ab = haversine_m(a, b);
        let bc = haversine_m(b, c);
        let ac = haversine_m(a, c);
        prop_assert!(ac <= (ab + bc) * (1.0 + 1e-6) + 1e-6);
        prop_assert_eq!(haversine_m(a, b), haversine_m(b, a));
    }

    #[test]
    fn walking_reproduces_distance(pts in local_polyline(), fracs in prop::collection::vec(0.0..1.0f64, 1..8)) {
        let Ok(line) = Polyline::new(pts) else { return Ok(()) };
        let len = line.length_m();
        prop_assume!(len > 1.0);
        // every vertex plus random stops, so consecutive stops share an edge
        let mut ds: Vec<f64> = fracs.iter().map(|f| f * len).collect();
        ds.extend_from_slice(line.cumulative_m());
        ds.sort_by(f64::total_cmp);
        let mut walked = 0.0;
        let mut prev = point_along(&line, 0.0).unwrap();
        for d in ds {
            let p = point_along(&line, d).unwrap();
            walked += haversine_m(prev, p);
            prev = p;
            prop_assert!((walked - d).abs() <= d * 1e-3 + 1e-6, "d {} walked {}", d, walked);
        }
    }

    #[test]
    fn pip_matches_winding_oracle(ring in convex_polygon(), samples in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 50..200)) {
        let poly = PolygonRing::new(ring.clone(), vec![]).unwrap();
        let bb = poly.bbox();
        for (u, v) in samples {
            let lat = (bb.min_lat + bb.max_lat) / 2.0 + u * (bb.max_lat - bb.min_lat);
            let lon = (bb.min_lon + bb.max_lon) / 2.0 + v * (bb.max_lon - bb.min_lon);
            let Ok(p) = GeoPoint::new(lat, lon) else { continue };
            let oracle = winding_number(p, &ring) != 0;
            prop_assert_eq!(point_in_polygon(p, &poly), oracle);
        }
    }

    #[test]
    fn segmentation_invariants(pts in local_polyline(), target in prop::sample::select(vec![100.0, 250.0, 500.0])) {
        let n = pts.len() as i64;
        let nodes: BTreeMap<i64, GeoPoint> = pts.iter().enumerate().map(|(i, p)| (i as i64, *p)).collect();
        let way = Way { id: 1, node_ids: (0..n).collect(), highway_class: HighwayClass::Primary, name: None };
        let net = RoadNetwork::new(nodes, vec![way], "prop").unwrap();
        let Ok(line) = net.polyline(&net.ways()[0]) else { return Ok(()) };
        prop_assume!(line.length_m() >= 1.0);
        let segs = chunk_way(&net.ways()[0], &net, target).unwrap();
        let total: f64 = segs.iter().map(|s| s.length_m).sum();
        prop_assert!((total - line.length_m()).abs() <= line.length_m() * 1e-3);
        for (i, s) in segs.iter().enumerate() {
            prop_assert_eq!(s.index as usize, i);
            let geom = s.geometry.as_ref().unwrap();
            prop_assert_eq!(geom.first(), s.start);
            prop_assert_eq!(geom.last(), s.end);
            prop_assert!((geom.length_m() - s.length_m).abs() <= s.length_m * 1e-3);
            if i + 1 < segs.len() {
                prop_assert!((s.length_m - target).abs() < 1e-3);
                prop_assert_eq!(s.end, segs[i + 1].start);
            }
        }
        prop_assert_eq!(segs.clone(), chunk_way(&net.ways()[0], &net, target).unwrap());
    }

    #[test]
    fn filter_union_of_disjoint_sets(tags in prop::collection::vec(prop::sample::select(vec!["trunk", "primary", "secondary", "tertiary", "residential"]), 0..30), split in any::<u8>()) {
        let mut nodes = BTreeMap::new();
        nodes.insert(1, GeoPoint::new(0.0, 0.0).unwrap());
        nodes.insert(2, GeoPoint::new(0.0, 0.01).unwrap());
        let ways = tags.iter().enumerate().map(|(i, t)| Way { id: i as i64, node_ids: vec![1, 2], highway_class: HighwayClass::from_tag(t), name: None }).collect();
        let net = RoadNetwork::new(nodes, ways, "x").unwrap();
        let all = ["trunk", "primary", "secondary", "tertiary", "residential"].map(HighwayClass::from_tag);
        let (mut c1, mut c2) = (BTreeSet::new(), BTreeSet::new());
        for (i, c) in all.iter().enumerate() {
            if split & (1 << i) != 0 { c1.insert(c.clone()); } else { c2.insert(c.clone()); }
        }
        let both: BTreeSet<_> = c1.union(&c2).cloned().collect();
        let union = filter_roads(&net, &both);
        let a = filter_roads(&net, &c1);
        let b = filter_roads(&net, &c2);
        let mut merged: Vec<i64> = a.iter().chain(b.iter()).map(|w| w.id).collect();
        merged.sort_unstable();
        prop_assert_eq!(union.iter().map(|w| w.id).collect::<Vec<_>>(), merged);
    }
}
