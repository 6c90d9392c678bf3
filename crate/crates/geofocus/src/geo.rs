//! Great-circle geodesy, accuracy-level bucketing, and the area-root
//! radius used by the filtering pipeline.
//!
//! Everything here is pure. The haversine kernel is generic over the
//! scalar; the `GeoPoint` convenience API pins `f64`.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::num::Real;

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// A point on the sphere, degrees. Longitude is normalized into
/// `(-180, 180]` on construction; latitude must lie in `[-90, 90]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGeoPoint", into = "RawGeoPoint")]
pub struct GeoPoint {
    lat_deg: f64,
    lon_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct RawGeoPoint {
    lat_deg: f64,
    lon_deg: f64,
}

impl TryFrom<RawGeoPoint> for GeoPoint {
    type Error = Error;
    fn try_from(raw: RawGeoPoint) -> Result<Self, Error> {
        GeoPoint::new(raw.lat_deg, raw.lon_deg)
    }
}

impl From<GeoPoint> for RawGeoPoint {
    fn from(p: GeoPoint) -> Self {
        RawGeoPoint {
            lat_deg: p.lat_deg,
            lon_deg: p.lon_deg,
        }
    }
}

impl GeoPoint {
    pub fn new(lat_deg: f64, lon_deg: f64) -> Result<Self, Error> {
        if !lat_deg.is_finite() || !(-90.0..=90.0).contains(&lat_deg) {
            return Err(Error::invalid(
                "latitude",
                format!("{lat_deg} outside [-90, 90]"),
            ));
        }
        if !lon_deg.is_finite() {
            return Err(Error::invalid("longitude", format!("{lon_deg} not finite")));
        }
        Ok(GeoPoint {
            lat_deg,
            lon_deg: normalize_lon(lon_deg),
        })
    }

    pub fn lat_deg(&self) -> f64 {
        self.lat_deg
    }

    pub fn lon_deg(&self) -> f64 {
        self.lon_deg
    }

    /// Unit vector on the sphere (x toward lon 0, z toward the north pole).
    pub fn unit_vector(&self) -> [f64; 3] {
        let lat = self.lat_deg.to_radians();
        let lon = self.lon_deg.to_radians();
        [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()]
    }

    /// Inverse of [`GeoPoint::unit_vector`]; `v` need not be normalized but
    /// must be nonzero.
    pub fn from_unit_vector(v: [f64; 3]) -> Result<Self, Error> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::invalid("unit vector", "zero or non-finite norm"));
        }
        let lat = (v[2] / norm).clamp(-1.0, 1.0).asin().to_degrees();
        let lon = v[1].atan2(v[0]).to_degrees();
        GeoPoint::new(lat, lon)
    }
}

fn normalize_lon(lon: f64) -> f64 {
    // already in range: keep the value bit-exact
    if lon > -180.0 && lon <= 180.0 {
        return lon;
    }
    let mut l = (lon + 180.0).rem_euclid(360.0) - 180.0;
    if l == -180.0 {
        l = 180.0;
    }
    l
}

/// Haversine great-circle distance on a sphere of radius `radius`.
/// Inputs are in degrees.
pub fn haversine<F: Real>(lat1: F, lon1: F, lat2: F, lon2: F, radius: F) -> F {
    let two = F::of(2.0);
    let dlat = (lat2 - lat1).to_radians();
    let dlon = (lon2 - lon1).to_radians();
    let a = (dlat / two).sin().powi(2)
        + lat1.to_radians().cos() * lat2.to_radians().cos() * (dlon / two).sin().powi(2);
    // a can creep past 1 by rounding; asin would return NaN.
    let a = a.min(F::one()).max(F::zero());
    two * radius * a.sqrt().asin()
}

/// Great-circle distance in kilometres between two points.
pub fn great_circle_km(p: GeoPoint, q: GeoPoint) -> f64 {
    haversine(
        p.lat_deg,
        p.lon_deg,
        q.lat_deg,
        q.lon_deg,
        EARTH_RADIUS_KM,
    )
}

/// Continent buckets used by the dataset statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Continent {
    AF,
    SA,
    EU,
    AS,
    NA,
    OC,
}

impl Continent {
    pub const ALL: [Continent; 6] = [
        Continent::AF,
        Continent::SA,
        Continent::EU,
        Continent::AS,
        Continent::NA,
        Continent::OC,
    ];

    pub fn code(&self) -> &'static str {
        match self {
            Continent::AF => "AF",
            Continent::SA => "SA",
            Continent::EU => "EU",
            Continent::AS => "AS",
            Continent::NA => "NA",
            Continent::OC => "OC",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LocationKind {
    City,
    Country,
}

/// A named geographic class, the classification target.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Location {
    pub id: String,
    pub name: String,
    pub kind: LocationKind,
    pub centroid: GeoPoint,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub area_km2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub population: Option<u64>,
    pub continent: Continent,
}

impl Location {
    pub fn validate(&self) -> Result<(), Error> {
        if let Some(a) = self.area_km2 {
            if !(a > 0.0) {
                return Err(Error::invalid(
                    "area_km2",
                    format!("location `{}` has non-positive area {a}", self.id),
                ));
            }
        }
        Ok(())
    }
}

/// Prediction correctness bucket by maximum tolerable GCD.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum AccuracyLevel {
    City,
    Region,
    Country,
    Continent,
    None,
}

impl AccuracyLevel {
    /// Threshold in km, `None` for the unbounded bucket.
    pub fn threshold_km(&self) -> Option<f64> {
        match self {
            AccuracyLevel::City => Some(25.0),
            AccuracyLevel::Region => Some(200.0),
            AccuracyLevel::Country => Some(750.0),
            AccuracyLevel::Continent => Some(2500.0),
            AccuracyLevel::None => None,
        }
    }

    pub const GRADED: [AccuracyLevel; 4] = [
        AccuracyLevel::City,
        AccuracyLevel::Region,
        AccuracyLevel::Country,
        AccuracyLevel::Continent,
    ];
}

/// Smallest accuracy level whose threshold covers `gcd_km`; boundaries
/// are inclusive (25 km still counts as City).
pub fn accuracy_level(gcd_km: f64) -> Result<AccuracyLevel, Error> {
    if !(gcd_km >= 0.0) {
        return Err(Error::invalid(
            "gcd_km",
            format!("{gcd_km} is negative or NaN"),
        ));
    }
    for level in AccuracyLevel::GRADED {
        if gcd_km <= level.threshold_km().unwrap() {
            return Ok(level);
        }
    }
    Ok(AccuracyLevel::None)
}

/// The k-th root of the location area, in km: the entity-match radius.
pub fn area_radius_km(area_km2: f64, k: u32) -> Result<f64, Error> {
    if !(area_km2 > 0.0) {
        return Err(Error::invalid(
            "area_km2",
            format!("{area_km2} is not strictly positive"),
        ));
    }
    if k < 1 {
        return Err(Error::invalid("k", "root parameter must be >= 1"));
    }
    Ok(area_km2.powf(1.0 / f64::from(k)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    #[test]
    fn identical_points_zero() {
        assert_eq!(great_circle_km(pt(0.0, 0.0), pt(0.0, 0.0)), 0.0);
    }

    #[test]
    fn quarter_great_circle() {
        let d = great_circle_km(pt(0.0, 0.0), pt(0.0, 90.0));
        assert_relative_eq!(d, std::f64::consts::PI * EARTH_RADIUS_KM / 2.0, epsilon = 0.01);
    }

    #[test]
    fn antipodal_poles() {
        let d = great_circle_km(pt(90.0, 0.0), pt(-90.0, 0.0));
        assert_relative_eq!(d, std::f64::consts::PI * EARTH_RADIUS_KM, epsilon = 0.01);
    }

    #[test]
    fn haversine_f32_kernel_agrees() {
        let d32 = haversine(12.5f32, -30.0, -7.25, 101.0, EARTH_RADIUS_KM as f32);
        let d64 = haversine(12.5f64, -30.0, -7.25, 101.0, EARTH_RADIUS_KM);
        assert_relative_eq!(d32 as f64, d64, max_relative = 1e-4);
    }

    #[test]
    fn accuracy_level_boundaries() {
        assert_eq!(accuracy_level(10.0).unwrap(), AccuracyLevel::City);
        assert_eq!(accuracy_level(25.0).unwrap(), AccuracyLevel::City);
        assert_eq!(accuracy_level(25.0001).unwrap(), AccuracyLevel::Region);
        assert_eq!(accuracy_level(200.0).unwrap(), AccuracyLevel::Region);
        assert_eq!(accuracy_level(750.0).unwrap(), AccuracyLevel::Country);
        assert_eq!(accuracy_level(2500.0).unwrap(), AccuracyLevel::Continent);
        assert_eq!(accuracy_level(3000.0).unwrap(), AccuracyLevel::None);
        assert!(accuracy_level(-1.0).is_err());
    }

    #[test]
    fn area_radius_examples() {
        assert_relative_eq!(area_radius_km(64.0, 6).unwrap(), 2.0, epsilon = 1e-12);
        assert_relative_eq!(area_radius_km(1.0, 6).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(area_radius_km(729.0, 6).unwrap(), 3.0, epsilon = 1e-12);
        assert!(area_radius_km(0.0, 6).is_err());
        assert!(area_radius_km(10.0, 0).is_err());
    }

    #[test]
    fn longitude_normalization() {
        assert_eq!(pt(0.0, 190.0).lon_deg(), -170.0);
        assert_eq!(pt(0.0, -180.0).lon_deg(), 180.0);
        assert_eq!(pt(0.0, 540.0).lon_deg(), 180.0);
        assert!(GeoPoint::new(91.0, 0.0).is_err());
    }

    #[test]
    fn unit_vector_round_trip() {
        let p = pt(48.85, 2.35);
        let q = GeoPoint::from_unit_vector(p.unit_vector()).unwrap();
        assert_relative_eq!(p.lat_deg(), q.lat_deg(), epsilon = 1e-9);
        assert_relative_eq!(p.lon_deg(), q.lon_deg(), epsilon = 1e-9);
    }

    proptest! {
        #[test]
        fn symmetry(lat1 in -90.0..90.0f64, lon1 in -180.0..180.0f64,
                    lat2 in -90.0..90.0f64, lon2 in -180.0..180.0f64) {
            let p = pt(lat1, lon1);
            let q = pt(lat2, lon2);
            prop_assert_eq!(great_circle_km(p, q), great_circle_km(q, p));
        }

        #[test]
        fn identity_and_range(lat in -90.0..90.0f64, lon in -180.0..180.0f64,
                              lat2 in -90.0..90.0f64, lon2 in -180.0..180.0f64) {
            let p = pt(lat, lon);
            prop_assert!(great_circle_km(p, p).abs() < 1e-9);
            let d = great_circle_km(p, pt(lat2, lon2));
            prop_assert!(d >= 0.0);
            prop_assert!(d <= std::f64::consts::PI * EARTH_RADIUS_KM + 1e-6);
        }

        #[test]
        fn triangle_inequality(a in -90.0..90.0f64, b in -180.0..180.0f64,
                               c in -90.0..90.0f64, d in -180.0..180.0f64,
                               e in -90.0..90.0f64, f in -180.0..180.0f64) {
            let p = pt(a, b);
            let q = pt(c, d);
            let r = pt(e, f);
            prop_assert!(great_circle_km(p, r)
                <= great_circle_km(p, q) + great_circle_km(q, r) + 1e-6);
        }

        #[test]
        fn accuracy_level_monotone(d1 in 0.0..5000.0f64, d2 in 0.0..5000.0f64) {
            let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
            prop_assert!(accuracy_level(lo).unwrap() <= accuracy_level(hi).unwrap());
        }

        #[test]
        fn area_radius_monotone(a in 1.01..1e6f64, b in 1.01..1e6f64, k in 1u32..10) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(area_radius_km(lo, k).unwrap() <= area_radius_km(hi, k).unwrap());
            prop_assert!(area_radius_km(hi, k).unwrap() >= area_radius_km(hi, k + 1).unwrap());
        }
    }
}
