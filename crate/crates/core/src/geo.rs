//! Great-circle geometry on a spherical Earth.

use crate::model::GeoCoordinate;

/// Mean Earth radius used by [`geo_distance`], in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Haversine great-circle distance in meters.
pub fn geo_distance(a: GeoCoordinate, b: GeoCoordinate) -> f64 {
    let (lat1, lat2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlat = (b.lat - a.lat).to_radians();
    let dlon = (b.lon - a.lon).to_radians();
    let h = (dlat / 2.0).sin().powi(2) + lat1.cos() * lat2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Euclidean distance between raw (lat, lon) pairs, in degrees.
pub fn degree_distance(a: GeoCoordinate, b: GeoCoordinate) -> f64 {
    (a.lat - b.lat).hypot(a.lon - b.lon)
}

/// Total haversine length of a polyline.
pub fn polyline_length(path: &[GeoCoordinate]) -> f64 {
    path.windows(2).map(|w| geo_distance(w[0], w[1])).sum()
}

/// Point at arc length `s` meters along `path`, linearly interpolated in
/// lat/lon inside each segment. `s` is clamped to the path.
pub fn point_along(path: &[GeoCoordinate], s: f64) -> GeoCoordinate {
    assert!(!path.is_empty(), "empty polyline");
    let mut remaining = s.max(0.0);
    for w in path.windows(2) {
        let len = geo_distance(w[0], w[1]);
        if remaining <= len && len > 0.0 {
            let t = remaining / len;
            return GeoCoordinate {
                lat: w[0].lat + t * (w[1].lat - w[0].lat),
                lon: w[0].lon + t * (w[1].lon - w[0].lon),
            };
        }
        remaining -= len;
    }
    *path.last().unwrap()
}

/// Coordinate `meters` due east of `origin`.
pub fn offset_east(origin: GeoCoordinate, meters: f64) -> GeoCoordinate {
    let dlon = (meters / (EARTH_RADIUS_M * origin.lat.to_radians().cos())).to_degrees();
    GeoCoordinate {
        lat: origin.lat,
        lon: origin.lon + dlon,
    }
}
