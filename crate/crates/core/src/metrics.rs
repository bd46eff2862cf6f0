//! Depth and hologram quality metrics and the training-time model.

use image::GrayImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holo::LeeHologram;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    /// Mean squared depth error with bytes scaled to `[0, 1]`.
    pub depth_mse: f64,
    pub depth_acc: f64,
    pub cgh_acc: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthMse {
    /// Mean of squared differences of depth values scaled to `[0, 1]`.
    pub normalized: f64,
    /// Same quantity on the 0..255 byte scale (`normalized * 255²`).
    pub byte_scale: f64,
}

fn check_same_dims(a: &GrayImage, b: &GrayImage) -> Result<()> {
    if a.dimensions() != b.dimensions() {
        return Err(Error::data(format!(
            "depth maps differ in size: {:?} vs {:?}",
            a.dimensions(),
            b.dimensions()
        )));
    }
    Ok(())
}

pub fn mse(estimate: &GrayImage, truth: &GrayImage) -> Result<DepthMse> {
    check_same_dims(estimate, truth)?;
    let n = estimate.as_raw().len();
    if n == 0 {
        return Err(Error::data("empty depth map"));
    }
    let sum: f64 = estimate
        .as_raw()
        .iter()
        .zip(truth.as_raw())
        .map(|(&a, &b)| {
            let d = (a as f64 - b as f64) / 255.0;
            d * d
        })
        .sum();
    let normalized = sum / n as f64;
    Ok(DepthMse {
        normalized,
        byte_scale: normalized * 255.0 * 255.0,
    })
}

/// Cosine similarity of two non-negative brightness sequences of equal length.
///
/// Two all-zero inputs give 1; an all-zero input against a non-zero one gives 0.
pub fn acc(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::data(format!(
            "brightness arrays differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    acc_pairs(a.iter().copied().zip(b.iter().copied()))
}

fn acc_pairs(pairs: impl Iterator<Item = (f64, f64)>) -> Result<f64> {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in pairs {
        if !(x >= 0.0 && y >= 0.0) {
            return Err(Error::data("brightness values must be non-negative"));
        }
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    Ok(match (aa == 0.0, bb == 0.0) {
        (true, true) => 1.0,
        (true, false) | (false, true) => 0.0,
        _ => (ab / (aa * bb).sqrt()).clamp(0.0, 1.0),
    })
}

pub fn depth_acc(estimate: &GrayImage, truth: &GrayImage) -> Result<f64> {
    check_same_dims(estimate, truth)?;
    acc_pairs(
        estimate
            .as_raw()
            .iter()
            .zip(truth.as_raw())
            .map(|(&a, &b)| (a as f64, b as f64)),
    )
}

/// ACC over the Lee-plane coefficients of all channels.
pub fn cgh_acc(pred: &LeeHologram, truth: &LeeHologram) -> Result<f64> {
    if pred.optics != truth.optics {
        return Err(Error::data("holograms were synthesized with different optics"));
    }
    if pred.channels.len() != truth.channels.len()
        || pred
            .channels
            .iter()
            .zip(&truth.channels)
            .any(|(a, b)| (a.width, a.height) != (b.width, b.height))
    {
        return Err(Error::data("holograms differ in resolution or channel count"));
    }
    acc_pairs(pred.brightness().zip(truth.brightness()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeModel {
    pub t_per_batch_s: f64,
    pub batches: u64,
    pub epochs: u64,
}

/// Total learning time `t * b * e` in seconds.
pub fn training_time(model: &TimeModel) -> Result<f64> {
    if !(model.t_per_batch_s >= 0.0) {
        return Err(Error::config("time per batch must be non-negative"));
    }
    Ok(model.t_per_batch_s * model.batches as f64 * model.epochs as f64)
}
