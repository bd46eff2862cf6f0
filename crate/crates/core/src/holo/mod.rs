//! Layer-based hologram synthesis with angular-spectrum propagation and
//! Lee four-component encoding.

mod fft;
mod field_io;
mod lee;
mod propagate;
mod synth;

pub use fft::Fft2;
pub use field_io::{read_field, write_field, FIELD_MAGIC};
pub use lee::{lee_decode, lee_encode, LeeChannel, LeeHologram, LeeMeta};
pub use propagate::{propagate, Propagator};
pub use synth::{phase_map, superpose_layers, synthesize, upscale_nearest, Synthesizer};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenegen::DepthMapping;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PhaseMode {
    /// Every source pixel starts with phase 0.
    Zero,
    /// Per-pixel phase uniform in `[0, 2π)` drawn from a seeded generator;
    /// the same map is used for every layer and color channel.
    SeededRandom { seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpticsConfig {
    /// Red, green and blue wavelengths.
    pub wavelengths_m: [f64; 3],
    pub pixel_pitch_m: f64,
    /// Hologram-plane distance of depth byte 255.
    pub z_near_m: f64,
    /// Hologram-plane distance of depth byte 0.
    pub z_far_m: f64,
    pub layer_count: usize,
    pub phase_mode: PhaseMode,
}

/// Ratio between capture-slab distances and hologram-plane distances.
pub const DEFAULT_DEPTH_SCALE: f64 = 0.1;

impl Default for OpticsConfig {
    fn default() -> Self {
        OpticsConfig::from_depth_mapping(&DepthMapping::default(), DEFAULT_DEPTH_SCALE)
    }
}

impl OpticsConfig {
    pub fn from_depth_mapping(mapping: &DepthMapping, scale: f64) -> Self {
        OpticsConfig {
            wavelengths_m: [638e-9, 520e-9, 450e-9],
            pixel_pitch_m: 8e-6,
            z_near_m: mapping.near_m * scale,
            z_far_m: mapping.far_m * scale,
            layer_count: 32,
            phase_mode: PhaseMode::SeededRandom { seed: 42 },
        }
    }

    /// 3.6 µm pitch matching a 3840x2160 modulator.
    pub fn fourk_preset() -> Self {
        OpticsConfig {
            pixel_pitch_m: 3.6e-6,
            ..OpticsConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !self.wavelengths_m.iter().all(|w| positive(*w)) {
            return Err(Error::config("wavelengths must be positive"));
        }
        if !positive(self.pixel_pitch_m) {
            return Err(Error::config("pixel pitch must be positive"));
        }
        if !(positive(self.z_near_m) && self.z_near_m < self.z_far_m && self.z_far_m.is_finite()) {
            return Err(Error::config(format!(
                "need 0 < z_near < z_far, got {} and {}",
                self.z_near_m, self.z_far_m
            )));
        }
        if self.layer_count < 2 || self.layer_count > 256 {
            return Err(Error::config(format!(
                "layer count must be in 2..=256, got {}",
                self.layer_count
            )));
        }
        Ok(())
    }

    /// Slab index of a depth byte; `layer_count - 1` holds byte 255 (nearest).
    pub fn layer_of(&self, depth: u8) -> usize {
        depth as usize * self.layer_count / 256
    }

    pub fn layer_distance(&self, layer: usize) -> f64 {
        let frac = layer as f64 / (self.layer_count - 1) as f64;
        (1.0 - frac) * self.z_far_m + frac * self.z_near_m
    }

    pub fn layer_spacing(&self) -> f64 {
        (self.z_far_m - self.z_near_m) / (self.layer_count - 1) as f64
    }

    /// Hologram-plane distance at which a depth byte is synthesized.
    pub fn depth_distance(&self, depth: u8) -> f64 {
        self.layer_distance(self.layer_of(depth))
    }
}

/// Complex amplitudes of one wavelength on a regular grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub width: usize,
    pub height: usize,
    pub wavelength_m: f64,
    pub pitch_m: f64,
    pub data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(width: usize, height: usize, wavelength_m: f64, pitch_m: f64) -> Self {
        ComplexField {
            width,
            height,
            wavelength_m,
            pitch_m,
            data: vec![Complex64::new(0.0, 0.0); width * height],
        }
    }

    pub fn from_data(
        width: usize,
        height: usize,
        wavelength_m: f64,
        pitch_m: f64,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        let field = ComplexField {
            width,
            height,
            wavelength_m,
            pitch_m,
            data,
        };
        field.validate()?;
        Ok(field)
    }

    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.data.len() != self.width * self.height {
            return Err(Error::data(format!(
                "field of {}x{} holds {} samples",
                self.width,
                self.height,
                self.data.len()
            )));
        }
        if !(self.wavelength_m > 0.0 && self.pitch_m > 0.0) {
            return Err(Error::data("field wavelength and pitch must be positive"));
        }
        if !self.is_finite() {
            return Err(Error::Numeric("field contains NaN or infinite samples".into()));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, k: f64) -> Self {
        ComplexField {
            data: self.data.iter().map(|c| c * k).collect(),
            ..self.clone()
        }
    }

    /// `||self - other|| / ||other||` over all samples.
    pub fn relative_l2(&self, other: &ComplexField) -> f64 {
        let diff: f64 = self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm_sqr()).sum();
        let norm = other.energy();
        if norm == 0.0 {
            diff.sqrt()
        } else {
            (diff / norm).sqrt()
        }
    }
}

/// One field per color channel (R, G, B) with the optics that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorField {
    pub channels: Vec<ComplexField>,
    pub optics: OpticsConfig,
}

impl ColorField {
    pub fn width(&self) -> usize {
        self.channels[0].width
    }

    pub fn height(&self) -> usize {
        self.channels[0].height
    }

    pub fn energy(&self) -> f64 {
        self.channels.iter().map(ComplexField::energy).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.channels.iter().all(ComplexField::is_finite)
    }

    pub fn scaled(&self, k: f64) -> Self {
        ColorField {
            channels: self.channels.iter().map(|c| c.scaled(k)).collect(),
            optics: self.optics.clone(),
        }
    }
}
