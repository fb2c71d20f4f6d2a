//! Panorama annotation geometry.
//!
//! Directions are relative to the camera: `yaw` 0 is the panorama's heading
//! (image center), positive clockwise; `pitch` is positive up. The
//! equirectangular mapping puts the seam at the left/right edges, with
//! `yaw = 180` owned by the right edge (`u = 1`).
//!
//! Pitch uses straight-line elevation over great-circle ground distance.
//! At heritage-site scale (sub-kilometer) the curvature contribution is
//! below 0.005 degrees.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::content::{GeoPoint, PanoPose};

/// Mean Earth radius (IUGG), meters.
pub const EARTH_MEAN_RADIUS_M: f64 = 6_371_008.8;

/// Minimum horizontal camera-to-target distance for a stable direction.
pub const MIN_TARGET_DISTANCE_M: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PanoError {
    #[error("bearing undefined between coincident points")]
    Coincident,
    #[error("target is {distance_m:.3} m from the camera; at least {MIN_TARGET_DISTANCE_M} m required")]
    TooClose { distance_m: f64 },
    #[error("{0}")]
    Range(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Direction {
    /// Degrees in (-180, 180].
    pub yaw: f64,
    /// Degrees in [-90, 90].
    pub pitch: f64,
}

impl Direction {
    pub fn new(yaw: f64, pitch: f64) -> Result<Self, PanoError> {
        let d = Direction { yaw, pitch };
        d.check()?;
        Ok(d)
    }

    pub fn check(&self) -> Result<(), PanoError> {
        if !(self.yaw > -180.0 && self.yaw <= 180.0) {
            return Err(PanoError::Range(format!("yaw {} outside (-180, 180]", self.yaw)));
        }
        if !(-90.0..=90.0).contains(&self.pitch) {
            return Err(PanoError::Range(format!("pitch {} outside [-90, 90]", self.pitch)));
        }
        Ok(())
    }
}

/// Equirectangular texture coordinate; `v` grows downward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uv {
    pub u: f64,
    pub v: f64,
}

/// Normalizes any finite angle into (-180, 180].
pub fn wrap_yaw(degrees: f64) -> f64 {
    let r = degrees.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    let r = if r >= 360.0 { 0.0 } else { r };
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Great-circle distance in meters (haversine, mean Earth radius).
pub fn haversine_distance(a: &GeoPoint, b: &GeoPoint) -> f64 {
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_MEAN_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Initial great-circle bearing from `a` to `b`, degrees clockwise from
/// true north in [0, 360).
pub fn initial_bearing(a: &GeoPoint, b: &GeoPoint) -> Result<f64, PanoError> {
    if a.lon == b.lon && a.lat == b.lat {
        return Err(PanoError::Coincident);
    }
    let (phi1, phi2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlambda = (b.lon - a.lon).to_radians();
    let y = dlambda.sin() * phi2.cos();
    let x = phi1.cos() * phi2.sin() - phi1.sin() * phi2.cos() * dlambda.cos();
    let deg = y.atan2(x).to_degrees().rem_euclid(360.0);
    Ok(if deg >= 360.0 { 0.0 } else { deg })
}

/// Direction from the panorama camera to a geographic target.
///
/// `target.height` and the pose position height are meters above local
/// ground; the eye sits `camera_height` above the pose position.
pub fn annotation_direction(pose: &PanoPose, target: &GeoPoint) -> Result<Direction, PanoError> {
    let ground = haversine_distance(&pose.position, target);
    if !(ground > MIN_TARGET_DISTANCE_M) {
        return Err(PanoError::TooClose { distance_m: ground });
    }
    let bearing = initial_bearing(&pose.position, target)?;
    let yaw = wrap_yaw(bearing - pose.heading);
    let eye = pose.position.height + pose.camera_height;
    let pitch = (target.height - eye).atan2(ground).to_degrees();
    Ok(Direction { yaw, pitch })
}

pub fn direction_to_uv(d: Direction) -> Uv {
    Uv {
        u: 0.5 + d.yaw / 360.0,
        v: 0.5 - d.pitch / 180.0,
    }
}

/// Inverse of [`direction_to_uv`]; `u = 0` lands on the seam and comes
/// back as `yaw = 180`.
pub fn uv_to_direction(uv: Uv) -> Direction {
    let yaw = (uv.u - 0.5) * 360.0;
    Direction {
        yaw: if yaw <= -180.0 { wrap_yaw(yaw) } else { yaw },
        pitch: (0.5 - uv.v) * 180.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_edges() {
        assert_eq!(wrap_yaw(180.0), 180.0);
        assert_eq!(wrap_yaw(-180.0), 180.0);
        assert_eq!(wrap_yaw(540.0), 180.0);
        assert_eq!(wrap_yaw(-190.0), 170.0);
        assert_eq!(wrap_yaw(0.0), 0.0);
        assert_eq!(wrap_yaw(-1e-20), 0.0);
        assert_eq!(wrap_yaw(359.0), -1.0);
    }

    #[test]
    fn bearing_cardinal_directions() {
        let a = GeoPoint::new(10.0, 20.0);
        assert_eq!(initial_bearing(&a, &GeoPoint::new(10.0, 21.0)).unwrap(), 0.0);
        let e = initial_bearing(&GeoPoint::new(0.0, 0.0), &GeoPoint::new(1.0, 0.0)).unwrap();
        assert!((e - 90.0).abs() < 1e-12, "{e}");
        assert_eq!(initial_bearing(&a, &a), Err(PanoError::Coincident));
    }

    #[test]
    fn too_close_target_is_rejected() {
        let pose = PanoPose {
            position: GeoPoint::new(-2.47, 41.77),
            camera_height: 1.6,
            heading: 0.0,
        };
        let err = annotation_direction(&pose, &GeoPoint::new(-2.47, 41.770001)).unwrap_err();
        assert!(matches!(err, PanoError::TooClose { .. }));
    }

    #[test]
    fn uv_seam_and_landmarks() {
        assert_eq!(direction_to_uv(Direction { yaw: 180.0, pitch: 0.0 }).u, 1.0);
        assert_eq!(uv_to_direction(Uv { u: 0.0, v: 0.5 }).yaw, 180.0);
        assert_eq!(uv_to_direction(Uv { u: 1.0, v: 0.0 }), Direction { yaw: 180.0, pitch: 90.0 });
    }

    #[test]
    fn direction_ranges() {
        assert!(Direction::new(180.0, 90.0).is_ok());
        assert!(Direction::new(-180.0, 0.0).is_err());
        assert!(Direction::new(0.0, 90.5).is_err());
    }
}
