use crate::{Error, Result};
use serde::Deserialize;
use std::path::Path;

/// One GPS fix from a flight log.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct TrajectoryPoint {
    #[serde(rename = "timestamp")]
    pub timestamp_s: f64,
    #[serde(rename = "lat")]
    pub lat_deg: f64,
    #[serde(rename = "lon")]
    pub lon_deg: f64,
    #[serde(rename = "alt")]
    pub alt_m: f64,
}

/// Geodetic anchor of the local east/north/up frame, normally the tower
/// base.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct GeoOrigin {
    pub lat_deg: f64,
    pub lon_deg: f64,
    pub alt_m: f64,
}

/// Position in the local tangent frame, meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Enu {
    pub east_m: f64,
    pub north_m: f64,
    pub up_m: f64,
}

impl Enu {
    pub fn horizontal_distance_m(&self) -> f64 {
        (self.east_m * self.east_m + self.north_m * self.north_m).sqrt()
    }
}

/// Parses a GPS log CSV with header `timestamp,lat,lon,alt`.
///
/// Timestamps must be strictly increasing; violations are reported
/// together, by data row number (the header is row 0).
pub fn parse_gps_log(path: &Path) -> Result<Vec<TrajectoryPoint>> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, row) in reader.deserialize().enumerate() {
        let point: TrajectoryPoint =
            row.map_err(|e| Error::Data(format!("{} row {}: {e}", path.display(), i + 1)))?;
        points.push(point);
    }
    let offending: Vec<String> = points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].timestamp_s <= w[0].timestamp_s)
        .map(|(i, _)| (i + 2).to_string())
        .collect();
    if !offending.is_empty() {
        return Err(Error::Data(format!(
            "{}: timestamps not strictly increasing at rows {}",
            path.display(),
            offending.join(", ")
        )));
    }
    Ok(points)
}

const EARTH_RADIUS_M: f64 = 6_378_137.0;

/// Equirectangular projection into the local east/north/up frame.
///
/// Accurate to well under a meter at the sub-2 km ranges these campaigns
/// cover; not suitable for long-baseline geodesy.
pub fn to_enu(point: &TrajectoryPoint, origin: &GeoOrigin) -> Enu {
    let north = (point.lat_deg - origin.lat_deg).to_radians() * EARTH_RADIUS_M;
    let east = (point.lon_deg - origin.lon_deg).to_radians()
        * EARTH_RADIUS_M
        * origin.lat_deg.to_radians().cos();
    Enu {
        east_m: east,
        north_m: north,
        up_m: point.alt_m - origin.alt_m,
    }
}

/// Ground speed over the trajectory by central differences of the 3D
/// position, returned as `(timestamp_s, speed_m_s)` per input point.
///
/// Endpoints use one-sided differences.
pub fn speed_from_gps(points: &[TrajectoryPoint]) -> Result<Vec<(f64, f64)>> {
    if points.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            have: points.len(),
        });
    }
    if let Some(i) = points
        .windows(2)
        .position(|w| w[1].timestamp_s <= w[0].timestamp_s)
    {
        return Err(Error::Data(format!(
            "duplicate or reordered timestamp at row {}",
            i + 2
        )));
    }
    let origin = GeoOrigin {
        lat_deg: points[0].lat_deg,
        lon_deg: points[0].lon_deg,
        alt_m: points[0].alt_m,
    };
    let enu: Vec<Enu> = points.iter().map(|p| to_enu(p, &origin)).collect();
    Ok((0..points.len())
        .map(|i| {
            let lo = i.saturating_sub(1);
            let hi = (i + 1).min(points.len() - 1);
            let de = enu[hi].east_m - enu[lo].east_m;
            let dn = enu[hi].north_m - enu[lo].north_m;
            let du = enu[hi].up_m - enu[lo].up_m;
            let dt = points[hi].timestamp_s - points[lo].timestamp_s;
            (
                points[i].timestamp_s,
                (de * de + dn * dn + du * du).sqrt() / dt,
            )
        })
        .collect())
}

/// Linearly interpolated trajectory position at `timestamp_s +
/// clock_offset_s` (the offset maps capture clocks onto GPS time).
///
/// Returns `None` for times outside the logged range; callers mark those
/// frames unpositioned rather than extrapolating.
pub fn geo_align(
    timestamp_s: f64,
    trajectory: &[TrajectoryPoint],
    clock_offset_s: f64,
) -> Option<TrajectoryPoint> {
    let t = timestamp_s + clock_offset_s;
    let first = trajectory.first()?;
    let last = trajectory.last()?;
    if t < first.timestamp_s || t > last.timestamp_s {
        return None;
    }
    let idx = trajectory.partition_point(|p| p.timestamp_s < t);
    if idx == 0 {
        return Some(*first);
    }
    let b = trajectory[idx.min(trajectory.len() - 1)];
    let a = trajectory[idx - 1];
    if b.timestamp_s == a.timestamp_s {
        return Some(a);
    }
    let w = (t - a.timestamp_s) / (b.timestamp_s - a.timestamp_s);
    Some(TrajectoryPoint {
        timestamp_s: t,
        lat_deg: a.lat_deg + w * (b.lat_deg - a.lat_deg),
        lon_deg: a.lon_deg + w * (b.lon_deg - a.lon_deg),
        alt_m: a.alt_m + w * (b.alt_m - a.alt_m),
    })
}
