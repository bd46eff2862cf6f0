//! Lee four-component representation: a complex value as non-negative
//! weights on the phasors `1, i, -1, -i`.

use std::path::Path;

use image::GrayImage;
use serde::{Deserialize, Serialize};

use super::{ColorField, ComplexField, OpticsConfig};
use crate::error::{Error, Result};
use crate::imageio;
use rustfft::num_complex::Complex64;

/// Four non-negative planes `L1..L4` for one color channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LeeChannel {
    pub width: usize,
    pub height: usize,
    pub wavelength_m: f64,
    pub pitch_m: f64,
    pub planes: [Vec<f64>; 4],
}

impl LeeChannel {
    /// Largest coefficient over all four planes.
    pub fn max_value(&self) -> f64 {
        self.planes.iter().flatten().fold(0.0, |m, v| m.max(*v))
    }

    pub fn scaled(&self, k: f64) -> Self {
        LeeChannel {
            planes: self.planes.clone().map(|p| p.into_iter().map(|v| v * k).collect()),
            ..self.clone()
        }
    }
}

/// Canonical decomposition: `L1 = max(re, 0)`, `L2 = max(im, 0)`,
/// `L3 = max(-re, 0)`, `L4 = max(-im, 0)`.
pub fn lee_encode(field: &ComplexField) -> LeeChannel {
    let n = field.data.len();
    let mut planes: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(n));
    for c in &field.data {
        planes[0].push(c.re.max(0.0));
        planes[1].push(c.im.max(0.0));
        planes[2].push((-c.re).max(0.0));
        planes[3].push((-c.im).max(0.0));
    }
    LeeChannel {
        width: field.width,
        height: field.height,
        wavelength_m: field.wavelength_m,
        pitch_m: field.pitch_m,
        planes,
    }
}

/// `H = (L1 - L3) + i (L2 - L4)`.
pub fn lee_decode(channel: &LeeChannel) -> Result<ComplexField> {
    let n = channel.width * channel.height;
    if channel.planes.iter().any(|p| p.len() != n) {
        return Err(Error::data("Lee planes do not match the declared size"));
    }
    if channel.planes.iter().flatten().any(|v| !(*v >= 0.0)) {
        return Err(Error::data("Lee plane holds a negative or NaN coefficient"));
    }
    let [l1, l2, l3, l4] = &channel.planes;
    let data = (0..n).map(|i| Complex64::new(l1[i] - l3[i], l2[i] - l4[i])).collect();
    ComplexField::from_data(
        channel.width,
        channel.height,
        channel.wavelength_m,
        channel.pitch_m,
        data,
    )
}

/// Lee-encoded color hologram.
#[derive(Debug, Clone, PartialEq)]
pub struct LeeHologram {
    pub channels: Vec<LeeChannel>,
    pub optics: OpticsConfig,
}

/// Sidecar of the 8-bit plane files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeeMeta {
    pub width: usize,
    pub height: usize,
    /// Per-channel value represented by byte 255.
    pub scales: Vec<f64>,
    pub optics: OpticsConfig,
}

const CHANNEL_NAMES: [&str; 3] = ["r", "g", "b"];

fn plane_file(channel: usize, plane: usize) -> String {
    format!("lee_{}_L{}.pgm", CHANNEL_NAMES[channel], plane + 1)
}

impl LeeHologram {
    pub fn encode(field: &ColorField) -> Self {
        LeeHologram {
            channels: field.channels.iter().map(lee_encode).collect(),
            optics: field.optics.clone(),
        }
    }

    pub fn decode(&self) -> Result<ColorField> {
        Ok(ColorField {
            channels: self.channels.iter().map(lee_decode).collect::<Result<_>>()?,
            optics: self.optics.clone(),
        })
    }

    pub fn width(&self) -> usize {
        self.channels[0].width
    }

    pub fn height(&self) -> usize {
        self.channels[0].height
    }

    /// All coefficients, channel by channel and plane by plane.
    pub fn brightness(&self) -> impl Iterator<Item = f64> + '_ {
        self.channels.iter().flat_map(|c| c.planes.iter().flatten().copied())
    }

    pub fn scaled(&self, k: f64) -> Self {
        LeeHologram {
            channels: self.channels.iter().map(|c| c.scaled(k)).collect(),
            optics: self.optics.clone(),
        }
    }

    /// Byte-quantized copy of the planes: `round(255 v / scale)` with the
    /// per-channel scale set to the channel maximum.
    pub fn quantize(&self) -> (Vec<[GrayImage; 4]>, Vec<f64>) {
        let mut all = Vec::with_capacity(self.channels.len());
        let mut scales = Vec::with_capacity(self.channels.len());
        for ch in &self.channels {
            let scale = ch.max_value();
            let planes = std::array::from_fn(|m| {
                let bytes = ch.planes[m]
                    .iter()
                    .map(|v| {
                        if scale > 0.0 {
                            (v / scale * 255.0).round() as u8
                        } else {
                            0
                        }
                    })
                    .collect();
                GrayImage::from_raw(ch.width as u32, ch.height as u32, bytes).expect("plane size matches channel")
            });
            all.push(planes);
            scales.push(scale);
        }
        (all, scales)
    }

    /// Inverse of [`LeeHologram::quantize`].
    pub fn dequantize(planes: &[[GrayImage; 4]], meta: &LeeMeta) -> Result<Self> {
        if planes.len() != 3 || meta.scales.len() != 3 {
            return Err(Error::data("Lee hologram needs three channels"));
        }
        let channels = planes
            .iter()
            .zip(&meta.scales)
            .enumerate()
            .map(|(c, (imgs, &scale))| {
                for img in imgs {
                    if img.dimensions() != (meta.width as u32, meta.height as u32) {
                        return Err(Error::data(format!(
                            "Lee plane is {:?}, metadata says {}x{}",
                            img.dimensions(),
                            meta.width,
                            meta.height
                        )));
                    }
                }
                Ok(LeeChannel {
                    width: meta.width,
                    height: meta.height,
                    wavelength_m: meta.optics.wavelengths_m[c],
                    pitch_m: meta.optics.pixel_pitch_m,
                    planes: std::array::from_fn(|m| {
                        imgs[m].as_raw().iter().map(|b| *b as f64 / 255.0 * scale).collect()
                    }),
                })
            })
            .collect::<Result<_>>()?;
        Ok(LeeHologram {
            channels,
            optics: meta.optics.clone(),
        })
    }

    /// Writes `lee_<c>_L<m>.pgm` for every channel and plane plus `lee_meta.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        imageio::create_dir_all(dir)?;
        let (planes, scales) = self.quantize();
        for (c, imgs) in planes.iter().enumerate() {
            for (m, img) in imgs.iter().enumerate() {
                imageio::write_pgm(&dir.join(plane_file(c, m)), img)?;
            }
        }
        imageio::write_json(
            &dir.join("lee_meta.json"),
            &LeeMeta {
                width: self.width(),
                height: self.height(),
                scales,
                optics: self.optics.clone(),
            },
        )
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let meta: LeeMeta = imageio::read_json(&dir.join("lee_meta.json"))?;
        let planes = (0..3)
            .map(|c| {
                let imgs = (0..4)
                    .map(|m| imageio::read_gray(&dir.join(plane_file(c, m))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(imgs.try_into().expect("four planes"))
            })
            .collect::<Result<Vec<[GrayImage; 4]>>>()?;
        LeeHologram::dequantize(&planes, &meta)
    }
}
