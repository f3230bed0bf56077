use crate::{Error, Result};

/// Default transmitter (tower) height in meters.
pub const DEFAULT_TOWER_HEIGHT_M: f64 = 10.0;

/// Flat-earth geometry of one transmitter/receiver link, including the
/// single ground-bounce path constructed by the image method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGeometry {
    /// Line-of-sight distance in meters.
    pub d_3d: f64,
    pub d_horizontal: f64,
    pub h_tx: f64,
    pub h_rx: f64,
    /// Transmitter to ground-bounce point.
    pub r1: f64,
    /// Ground-bounce point to receiver.
    pub r2: f64,
    /// Elevation of the receiver seen from the transmitter, radians;
    /// negative when the receiver is below the transmitter.
    pub theta_l: f64,
    /// Grazing angle of the ground reflection, radians, in (0, pi/2].
    pub theta_r: f64,
}

impl LinkGeometry {
    /// Path length excess of the reflected ray over the direct ray.
    pub fn excess_path_m(&self) -> f64 {
        self.r1 + self.r2 - self.d_3d
    }
}

/// Builds the link geometry for a horizontal separation and two heights.
pub fn link_geometry(d_horizontal: f64, h_tx: f64, h_rx: f64) -> Result<LinkGeometry> {
    if !(h_tx > 0.0) || !(h_rx > 0.0) {
        return Err(Error::invalid(format!(
            "antenna heights must be positive, got ({h_tx}, {h_rx})"
        )));
    }
    if !(d_horizontal >= 0.0) {
        return Err(Error::invalid(format!(
            "horizontal distance must be nonnegative, got {d_horizontal}"
        )));
    }

    let dh = d_horizontal;
    let d_3d = (dh * dh + (h_rx - h_tx) * (h_rx - h_tx)).sqrt();
    // Image method: the bounce point splits the horizontal run in
    // proportion to the antenna heights.
    let x = dh * h_tx / (h_tx + h_rx);
    let r1 = (x * x + h_tx * h_tx).sqrt();
    let r2 = ((dh - x) * (dh - x) + h_rx * h_rx).sqrt();

    Ok(LinkGeometry {
        d_3d,
        d_horizontal: dh,
        h_tx,
        h_rx,
        r1,
        r2,
        theta_l: (h_rx - h_tx).atan2(dh),
        theta_r: (h_tx + h_rx).atan2(dh),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertical_link() {
        let g = link_geometry(0.0, 10.0, 110.0).unwrap();
        assert!((g.d_3d - 100.0).abs() < 1e-12);
        assert!((g.r1 + g.r2 - 120.0).abs() < 1e-12);
        assert!((g.theta_r - std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn equal_heights_give_horizontal_los() {
        let g = link_geometry(250.0, 25.0, 25.0).unwrap();
        assert_eq!(g.theta_l, 0.0);
        assert!((g.d_3d - 250.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_example() {
        let g = link_geometry(100.0, 10.0, 70.0).unwrap();
        assert!((g.d_3d - (100.0f64 * 100.0 + 60.0 * 60.0).sqrt()).abs() < 1e-9);
        assert!((g.d_3d - 116.619).abs() < 1e-3);
        assert!((g.r1 + g.r2 - 128.062).abs() < 1e-3);
    }

    #[test]
    fn image_construction_identity_holds() {
        for (dh, ht, hr) in [(1.0, 3.0, 9.0), (120.0, 10.0, 30.0), (777.0, 15.0, 90.0)] {
            let g = link_geometry(dh, ht, hr).unwrap();
            let image = (dh * dh + (ht + hr) * (ht + hr)).sqrt();
            assert!((g.r1 + g.r2 - image).abs() < 1e-9, "dh={dh}");
            assert!(g.theta_r > 0.0 && g.theta_r <= std::f64::consts::FRAC_PI_2);
            assert!(g.excess_path_m() >= 0.0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(link_geometry(10.0, 0.0, 30.0).is_err());
        assert!(link_geometry(10.0, 10.0, -1.0).is_err());
        assert!(link_geometry(-5.0, 10.0, 30.0).is_err());
        assert!(link_geometry(f64::NAN, 10.0, 30.0).is_err());
    }
}
