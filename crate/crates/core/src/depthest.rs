//! Depth estimation for unseen viewpoints from the training views of a schedule.
//!
//! The baselines are purely geometric and ignore the query image; the
//! [`DepthEstimator`] trait still takes it so a learned model can be used instead.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use image::{GrayImage, Luma, RgbImage};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio;
use crate::metrics;
use crate::scenegen::Frame;
use crate::viewgeom::{angular_distance, schedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    /// Depth map of the angularly closest training view.
    Nearest,
    /// Inverse-distance blend of the two bracketing training views.
    Blend,
}

impl Baseline {
    pub fn name(self) -> &'static str {
        match self {
            Baseline::Nearest => "nearest",
            Baseline::Blend => "blend",
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest" => Ok(Baseline::Nearest),
            "blend" => Ok(Baseline::Blend),
            other => Err(Error::config(format!("unknown baseline '{other}'"))),
        }
    }
}

pub trait DepthEstimator: Sync {
    fn estimate(&self, rgb: &RgbImage, query_angle_deg: f64) -> Result<GrayImage>;
}

/// Fitted baseline: training depth maps in schedule order.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    baseline: Baseline,
    level: u32,
    step_deg: f64,
    angles_deg: Vec<f64>,
    depths: Vec<GrayImage>,
}

/// Fits from training frames; their camera angles must be exactly the schedule's.
pub fn fit(baseline: Baseline, train: &[Frame], n: u32) -> Result<EstimatorState> {
    fit_depths(
        baseline,
        train.iter().map(|f| (f.pose.angle_deg, f.depth.clone())).collect(),
        n,
    )
}

/// Fits from `(angle, depth map)` pairs in any order.
pub fn fit_depths(baseline: Baseline, mut views: Vec<(f64, GrayImage)>, n: u32) -> Result<EstimatorState> {
    let sched = schedule(n)?;
    if views.len() != sched.train_angles_deg.len() {
        return Err(Error::data(format!(
            "level {n} needs {} training views, got {}",
            sched.train_angles_deg.len(),
            views.len()
        )));
    }
    for v in &mut views {
        v.0 = v.0.rem_euclid(360.0);
    }
    views.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (expected, (got, _)) in sched.train_angles_deg.iter().zip(&views) {
        if expected != got {
            return Err(Error::data(format!(
                "training views do not match the level-{n} schedule: expected {expected}°, found {got}°"
            )));
        }
    }
    let dims = views[0].1.dimensions();
    if let Some((a, d)) = views.iter().find(|(_, d)| d.dimensions() != dims) {
        return Err(Error::data(format!(
            "training depth at {a}° is {:?}, expected {dims:?}",
            d.dimensions()
        )));
    }
    let (angles_deg, depths) = views.into_iter().unzip();
    Ok(EstimatorState {
        baseline,
        level: n,
        step_deg: sched.level.angle_deg,
        angles_deg,
        depths,
    })
}

impl EstimatorState {
    pub fn baseline(&self) -> Baseline {
        self.baseline
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn train_angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn dimensions(&self) -> (u32, u32) {
        self.depths[0].dimensions()
    }

    fn nearest(&self, query_deg: f64) -> &GrayImage {
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        // Ascending angles with a strict comparison keep the smaller angle on ties.
        for (i, &a) in self.angles_deg.iter().enumerate() {
            let d = angular_distance(a, query_deg);
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        &self.depths[best]
    }

    fn blend(&self, query_deg: f64) -> GrayImage {
        let pos = query_deg.rem_euclid(360.0) / self.step_deg;
        let lower = pos.floor();
        let frac = pos - lower;
        let count = self.depths.len();
        let i = lower as usize % count;
        if frac == 0.0 {
            return self.depths[i].clone();
        }
        let (a, b) = (&self.depths[i], &self.depths[(i + 1) % count]);
        let data = a
            .as_raw()
            .iter()
            .zip(b.as_raw())
            .map(|(&x, &y)| {
                let v = (1.0 - frac) * x as f64 + frac * y as f64;
                (v + 0.5).floor().clamp(x.min(y) as f64, x.max(y) as f64) as u8
            })
            .collect();
        GrayImage::from_raw(a.width(), a.height(), data).expect("same size as the sources")
    }
}

impl DepthEstimator for EstimatorState {
    fn estimate(&self, _rgb: &RgbImage, query_angle_deg: f64) -> Result<GrayImage> {
        if !query_angle_deg.is_finite() {
            return Err(Error::config("query angle must be finite"));
        }
        Ok(match self.baseline {
            Baseline::Nearest => self.nearest(query_angle_deg).clone(),
            Baseline::Blend => self.blend(query_angle_deg),
        })
    }
}

pub fn estimate(state: &EstimatorState, rgb: &RgbImage, query_angle_deg: f64) -> Result<GrayImage> {
    state.estimate(rgb, query_angle_deg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewError {
    pub angle_deg: f64,
    /// Normalized MSE (depth bytes scaled to `[0, 1]`).
    pub mse: f64,
    pub acc: f64,
}

/// Estimates every test frame and scores it against the frame's depth.
pub fn evaluate(state: &EstimatorState, test: &[Frame]) -> Result<Vec<ViewError>> {
    test.iter()
        .map(|f| {
            if f.depth.dimensions() != state.dimensions() {
                return Err(Error::data(format!(
                    "test view at {}° is {:?}, training views are {:?}",
                    f.pose.angle_deg,
                    f.depth.dimensions(),
                    state.dimensions()
                )));
            }
            let est = state.estimate(&f.rgb, f.pose.angle_deg)?;
            Ok(ViewError {
                angle_deg: f.pose.angle_deg,
                mse: metrics::mse(&est, &f.depth)?.normalized,
                acc: metrics::depth_acc(&est, &f.depth)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimateMeta {
    pub baseline: Baseline,
    pub n: u32,
}

/// Writes `depth_est.pgm` and `est_meta.json` into `dir`.
pub fn write_estimate(dir: &Path, depth: &GrayImage, state: &EstimatorState) -> Result<()> {
    imageio::create_dir_all(dir)?;
    imageio::write_pgm(&dir.join("depth_est.pgm"), depth)?;
    imageio::write_json(
        &dir.join("est_meta.json"),
        &EstimateMeta {
            baseline: state.baseline,
            n: state.level,
        },
    )
}

/// Constant depth map, handy for tests and placeholders.
pub fn uniform_depth(width: u32, height: u32, value: u8) -> GrayImage {
    GrayImage::from_pixel(width, height, Luma([value]))
}
