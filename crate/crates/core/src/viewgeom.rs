//! Central angles, train/test viewpoint schedules and camera poses on the
//! circular capture track.
//!
//! Coordinates are right-handed with the track in the `z = 0` plane. Angle 0
//! lies on the +x axis and angles grow counterclockwise seen from +z.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_LEVEL: u32 = 2;
pub const MAX_LEVEL: u32 = 9;

/// Default radius of the camera track in meters.
pub const DEFAULT_RADIUS_M: f64 = 0.20;

/// A refinement level `n` and its central angle `360 / 2^n` degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralAngleLevel {
    pub n: u32,
    pub angle_deg: f64,
}

impl CentralAngleLevel {
    /// Number of training (and test) viewpoints at this level.
    pub fn view_count(&self) -> usize {
        1usize << self.n
    }
}

pub fn central_angle(n: u32) -> Result<CentralAngleLevel> {
    if !(MIN_LEVEL..=MAX_LEVEL).contains(&n) {
        return Err(Error::config(format!(
            "level n={n} outside supported range {MIN_LEVEL}..={MAX_LEVEL}"
        )));
    }
    // 360 / 2^n is an exact binary fraction for every supported n.
    Ok(CentralAngleLevel {
        n,
        angle_deg: 360.0 / (1u64 << n) as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewSchedule {
    pub level: CentralAngleLevel,
    pub train_angles_deg: Vec<f64>,
    pub test_angles_deg: Vec<f64>,
}

/// Training views every `angle_deg` starting at 0; test views at the
/// midpoints between adjacent training views.
pub fn schedule(n: u32) -> Result<ViewSchedule> {
    let level = central_angle(n)?;
    let count = level.view_count();
    let step = level.angle_deg;
    let train_angles_deg = (0..count).map(|k| k as f64 * step).collect();
    let test_angles_deg = (0..count).map(|k| k as f64 * step + step / 2.0).collect();
    Ok(ViewSchedule {
        level,
        train_angles_deg,
        test_angles_deg,
    })
}

/// Shortest distance between two angles on the circle, in degrees, in `[0, 180]`.
pub fn angular_distance(a_deg: f64, b_deg: f64) -> f64 {
    let d = (a_deg - b_deg).rem_euclid(360.0);
    d.min(360.0 - d)
}

/// Sine and cosine of an angle in degrees, exact at multiples of 90°.
pub(crate) fn sin_cos_deg(angle_deg: f64) -> (f64, f64) {
    let a = angle_deg.rem_euclid(360.0);
    let quadrant = (a / 90.0).floor();
    let rest = (a - quadrant * 90.0).to_radians();
    let (s, c) = if rest == 0.0 { (0.0, 1.0) } else { rest.sin_cos() };
    match quadrant as u8 {
        0 => (s, c),
        1 => (c, -s),
        2 => (-s, -c),
        _ => (-c, s),
    }
}

pub type Vec3 = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    pub angle_deg: f64,
    pub radius_m: f64,
    pub position: Vec3,
    /// Unit direction from the camera toward the origin.
    pub forward: Vec3,
}

impl CameraPose {
    /// World up; the track lies in the plane orthogonal to it.
    pub const UP: Vec3 = [0.0, 0.0, 1.0];

    /// Unit vector pointing to the image's right, `forward × up`.
    pub fn right(&self) -> Vec3 {
        let [fx, fy, _] = self.forward;
        [fy, -fx, 0.0]
    }
}

pub fn camera_pose(angle_deg: f64, radius_m: f64) -> Result<CameraPose> {
    if !(radius_m > 0.0) || !radius_m.is_finite() {
        return Err(Error::config(format!("camera radius must be positive, got {radius_m}")));
    }
    if !angle_deg.is_finite() {
        return Err(Error::config("camera angle must be finite"));
    }
    let (s, c) = sin_cos_deg(angle_deg);
    Ok(CameraPose {
        angle_deg,
        radius_m,
        position: [radius_m * c, radius_m * s, 0.0],
        forward: [-c, -s, 0.0],
    })
}
