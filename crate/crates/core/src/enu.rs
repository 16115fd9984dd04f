//! Geodetic ↔ local tangent frame (east-north-up) conversion.
//!
//! Records arrive as WGS-84 latitude/longitude plus barometric altitude.
//! The planar coordinates go through the standard geodetic → ECEF → ENU
//! chain about a fixed reference point; the vertical coordinate is taken
//! directly as barometric altitude minus the reference altitude, because
//! barometric altitude is not an ellipsoidal height and the ellipsoidal
//! up-component would fold the Earth-curvature drop (kilometers at
//! terminal-area ranges) into it.

use crate::error::{Error, Result};
use crate::traj::RawRecord;

/// WGS-84 semi-major axis in meters.
pub const WGS84_A: f64 = 6_378_137.0;
/// WGS-84 flattening.
pub const WGS84_F: f64 = 1.0 / 298.257_223_563;
/// WGS-84 first eccentricity squared.
pub const WGS84_E2: f64 = WGS84_F * (2.0 - WGS84_F);

/// Reference point and bounding radius of a local tangent frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnuFrame {
    pub ref_lat_deg: f64,
    pub ref_lon_deg: f64,
    pub ref_alt_m: f64,
    /// Bounding radius in meters; also the scale divisor after bounding.
    pub r_max_m: f64,
}

impl EnuFrame {
    /// Builds a frame, validating the reference coordinates and radius.
    pub fn new(ref_lat_deg: f64, ref_lon_deg: f64, ref_alt_m: f64, r_max_m: f64) -> Result<Self> {
        check_lat_lon(ref_lat_deg, ref_lon_deg)?;
        if !(r_max_m > 0.0) || !r_max_m.is_finite() {
            return Err(Error::OutOfRange {
                name: "r_max_m",
                value: r_max_m,
                min: 0.0,
                max: f64::INFINITY,
            });
        }
        Ok(EnuFrame {
            ref_lat_deg,
            ref_lon_deg,
            ref_alt_m,
            r_max_m,
        })
    }
}

fn check_lat_lon(lat_deg: f64, lon_deg: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat_deg) || !lat_deg.is_finite() {
        return Err(Error::OutOfRange {
            name: "lat_deg",
            value: lat_deg,
            min: -90.0,
            max: 90.0,
        });
    }
    if !(-180.0..=180.0).contains(&lon_deg) || !lon_deg.is_finite() {
        return Err(Error::OutOfRange {
            name: "lon_deg",
            value: lon_deg,
            min: -180.0,
            max: 180.0,
        });
    }
    Ok(())
}

/// Geodetic coordinates (radians) to Earth-centered Earth-fixed.
fn geodetic_to_ecef(lat: f64, lon: f64, alt: f64) -> [f64; 3] {
    let sin_lat = lat.sin();
    let cos_lat = lat.cos();
    let n = WGS84_A / (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
    [
        (n + alt) * cos_lat * lon.cos(),
        (n + alt) * cos_lat * lon.sin(),
        (n * (1.0 - WGS84_E2) + alt) * sin_lat,
    ]
}

/// Projects one record into the frame.
///
/// Returns `[east, north, up]` in meters, where `up` is barometric altitude
/// relative to the frame reference altitude.
pub fn geodetic_to_enu(rec: &RawRecord, frame: &EnuFrame) -> Result<[f64; 3]> {
    check_lat_lon(rec.lat_deg, rec.lon_deg)?;
    let lat0 = frame.ref_lat_deg.to_radians();
    let lon0 = frame.ref_lon_deg.to_radians();
    let p0 = geodetic_to_ecef(lat0, lon0, frame.ref_alt_m);
    let p = geodetic_to_ecef(
        rec.lat_deg.to_radians(),
        rec.lon_deg.to_radians(),
        rec.baro_alt_m,
    );
    let d = [p[0] - p0[0], p[1] - p0[1], p[2] - p0[2]];
    let (sin_lat0, cos_lat0) = (lat0.sin(), lat0.cos());
    let (sin_lon0, cos_lon0) = (lon0.sin(), lon0.cos());
    let east = -sin_lon0 * d[0] + cos_lon0 * d[1];
    let north = -sin_lat0 * cos_lon0 * d[0] - sin_lat0 * sin_lon0 * d[1] + cos_lat0 * d[2];
    Ok([east, north, rec.baro_alt_m - frame.ref_alt_m])
}

/// Inverse of [`geodetic_to_enu`].
///
/// Recovers `(lat_deg, lon_deg, baro_alt_m)` from local coordinates by
/// fixed-point refinement: starting at the frame reference, adjust latitude
/// and longitude by the residual east/north error scaled by the local
/// meridional and transverse curvature radii. Converges to well below a
/// millimeter within a couple hundred kilometers of the reference.
pub fn enu_to_geodetic(enu: &[f64; 3], frame: &EnuFrame) -> Result<(f64, f64, f64)> {
    let alt = frame.ref_alt_m + enu[2];
    let mut lat = frame.ref_lat_deg.to_radians();
    let mut lon = frame.ref_lon_deg.to_radians();
    for _ in 0..10 {
        let probe = RawRecord {
            flight_id: String::new(),
            timestamp_s: 0.0,
            lat_deg: lat.to_degrees(),
            lon_deg: lon.to_degrees(),
            baro_alt_m: alt,
        };
        let got = geodetic_to_enu(&probe, frame)?;
        let de = enu[0] - got[0];
        let dn = enu[1] - got[1];
        if de.abs() < 1e-9 && dn.abs() < 1e-9 {
            break;
        }
        let sin_lat = lat.sin();
        let w = (1.0 - WGS84_E2 * sin_lat * sin_lat).sqrt();
        // Meridional and prime-vertical curvature radii at the current guess.
        let m = WGS84_A * (1.0 - WGS84_E2) / (w * w * w) + alt;
        let n = WGS84_A / w + alt;
        lat += dn / m;
        lon += de / (n * lat.cos());
    }
    let lat_deg = lat.to_degrees();
    let lon_deg = lon.to_degrees();
    check_lat_lon(lat_deg, lon_deg)?;
    Ok((lat_deg, lon_deg, alt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rec(lat: f64, lon: f64, alt: f64) -> RawRecord {
        RawRecord {
            flight_id: "t".into(),
            timestamp_s: 0.0,
            lat_deg: lat,
            lon_deg: lon,
            baro_alt_m: alt,
        }
    }

    fn frame() -> EnuFrame {
        EnuFrame::new(0.0, 0.0, 0.0, 100_000.0).unwrap()
    }

    #[test]
    fn reference_point_maps_to_origin() {
        let p = geodetic_to_enu(&rec(0.0, 0.0, 0.0), &frame()).unwrap();
        assert_eq!(p, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn east_arc_matches_equatorial_arc_length() {
        // 0.001° of longitude on the equator is a·sin(0.001°) ≈ 111.3195 m east.
        let p = geodetic_to_enu(&rec(0.0, 0.001, 0.0), &frame()).unwrap();
        assert!((p[0] - 111.3195).abs() < 0.01, "east {}", p[0]);
        assert!(p[1].abs() < 1e-9, "north {}", p[1]);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn north_arc_matches_meridional_arc_length() {
        // 0.001° of latitude at the equator ≈ 110.574 m north (meridional
        // radius is smaller than the equatorial one).
        let p = geodetic_to_enu(&rec(0.001, 0.0, 0.0), &frame()).unwrap();
        assert!((p[1] - 110.574).abs() < 0.05, "north {}", p[1]);
        assert!(p[0].abs() < 1e-9, "east {}", p[0]);
    }

    #[test]
    fn up_is_exactly_baro_minus_reference() {
        let f = EnuFrame::new(37.0, 127.0, 23.0, 100_000.0).unwrap();
        let p = geodetic_to_enu(&rec(37.0, 127.0, 1523.0), &f).unwrap();
        assert_eq!(p[2], 1500.0);
    }

    #[test]
    fn out_of_range_latitude_is_rejected() {
        let err = geodetic_to_enu(&rec(91.0, 0.0, 0.0), &frame());
        assert!(matches!(err, Err(Error::OutOfRange { name: "lat_deg", .. })));
        assert!(EnuFrame::new(0.0, 200.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn non_positive_radius_is_rejected() {
        assert!(EnuFrame::new(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(EnuFrame::new(0.0, 0.0, 0.0, -5.0).is_err());
    }

    #[test]
    fn roundtrip_within_200km_recovers_geodetic_coordinates() {
        let f = EnuFrame::new(37.46, 126.44, 7.0, 200_000.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            // Uniform in a 200 km disc around the reference, any altitude.
            let r = 200_000.0 * rng.random::<f64>().sqrt();
            let th = rng.random::<f64>() * std::f64::consts::TAU;
            let lat = 37.46 + (r * th.sin()) / 111_000.0;
            let lon = 126.44 + (r * th.cos()) / (111_000.0 * 37.46f64.to_radians().cos());
            let alt = rng.random::<f64>() * 12_000.0;
            let p = geodetic_to_enu(&rec(lat, lon, alt), &f).unwrap();
            let (lat2, lon2, alt2) = enu_to_geodetic(&p, &f).unwrap();
            assert!((lat2 - lat).abs() < 1e-6, "lat {lat} -> {lat2}");
            assert!((lon2 - lon).abs() < 1e-6, "lon {lon} -> {lon2}");
            assert!((alt2 - alt).abs() < 1e-3, "alt {alt} -> {alt2}");
        }
    }
}
