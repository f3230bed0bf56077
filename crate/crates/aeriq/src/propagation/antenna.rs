use crate::{Error, Result};
use serde::Deserialize;
use std::path::Path;

/// Elevation-cut antenna gain table, omnidirectional in azimuth.
///
/// Knots are `(elevation angle in degrees, gain in dBi)` with strictly
/// increasing angles spanning at least [-90, 90]. Queries interpolate
/// linearly in the dB domain between bracketing knots.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaPattern {
    angles_deg: Vec<f64>,
    gains_dbi: Vec<f64>,
}

#[derive(Deserialize)]
struct PatternRow {
    angle_deg: f64,
    gain_dbi: f64,
}

impl AntennaPattern {
    /// 0 dBi at every elevation.
    pub fn isotropic() -> Self {
        AntennaPattern {
            angles_deg: vec![-90.0, 90.0],
            gains_dbi: vec![0.0, 0.0],
        }
    }

    /// Ideal vertical half-wave dipole, tabulated at one-degree steps.
    ///
    /// Peak gain 2.15 dBi at the horizon, nulls toward zenith and nadir
    /// clamped to -40 dBi.
    pub fn half_wave_dipole() -> Self {
        let mut angles_deg = Vec::with_capacity(181);
        let mut gains_dbi = Vec::with_capacity(181);
        for deg in -90..=90 {
            let e = (deg as f64).to_radians();
            let numer = (std::f64::consts::FRAC_PI_2 * e.sin()).cos();
            let directivity = if e.cos().abs() < 1e-12 {
                0.0
            } else {
                1.64 * (numer / e.cos()).powi(2)
            };
            let dbi = if directivity > 0.0 {
                (10.0 * directivity.log10()).max(-40.0)
            } else {
                -40.0
            };
            angles_deg.push(deg as f64);
            gains_dbi.push(dbi);
        }
        AntennaPattern {
            angles_deg,
            gains_dbi,
        }
    }

    pub fn from_table(rows: &[(f64, f64)]) -> Result<Self> {
        let pattern = AntennaPattern {
            angles_deg: rows.iter().map(|r| r.0).collect(),
            gains_dbi: rows.iter().map(|r| r.1).collect(),
        };
        pattern.validate()?;
        Ok(pattern)
    }

    /// Loads a CSV table with header `angle_deg,gain_dbi`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path).map_err(|e| {
            Error::Data(format!("cannot open antenna pattern {}: {e}", path.display()))
        })?;
        let mut rows = Vec::new();
        for record in reader.deserialize::<PatternRow>() {
            let row = record.map_err(|e| {
                Error::Data(format!("bad antenna row in {}: {e}", path.display()))
            })?;
            rows.push((row.angle_deg, row.gain_dbi));
        }
        Self::from_table(&rows)
    }

    fn validate(&self) -> Result<()> {
        if self.angles_deg.len() < 2 {
            return Err(Error::invalid("antenna pattern needs at least two knots"));
        }
        if self.angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid(
                "antenna pattern angles must be strictly increasing",
            ));
        }
        if self.angles_deg[0] > -90.0 || *self.angles_deg.last().unwrap() < 90.0 {
            return Err(Error::invalid(
                "antenna pattern must span at least [-90, 90] degrees",
            ));
        }
        Ok(())
    }

    /// Gain in dBi with a flag set when the query fell outside the table
    /// span and was clamped to the nearest end.
    pub fn gain_db(&self, angle_deg: f64) -> (f64, bool) {
        let first = self.angles_deg[0];
        let last = *self.angles_deg.last().unwrap();
        if angle_deg <= first {
            return (self.gains_dbi[0], angle_deg < first);
        }
        if angle_deg >= last {
            return (*self.gains_dbi.last().unwrap(), angle_deg > last);
        }
        let idx = self.angles_deg.partition_point(|&a| a <= angle_deg);
        let (a0, a1) = (self.angles_deg[idx - 1], self.angles_deg[idx]);
        let (g0, g1) = (self.gains_dbi[idx - 1], self.gains_dbi[idx]);
        (g0 + (g1 - g0) * (angle_deg - a0) / (a1 - a0), false)
    }

    /// Linear-domain gain; out-of-span queries clamp silently.
    pub fn gain_linear(&self, angle_deg: f64) -> f64 {
        10f64.powf(self.gain_db(angle_deg).0 / 10.0)
    }
}
