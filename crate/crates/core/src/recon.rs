//! Numerical reconstruction by back-propagation, and focus measures.

use std::path::Path;

use image::{GrayImage, Luma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::holo::{ColorField, LeeHologram, OpticsConfig, Propagator};
use crate::imageio;

/// Pixel rectangle `[x, x + width) x [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl Region {
    pub fn full(width: usize, height: usize) -> Self {
        Region {
            x: 0,
            y: 0,
            width: width as u32,
            height: height as u32,
        }
    }
}

/// A hologram as stored complex fields or as Lee planes.
#[derive(Debug, Clone, PartialEq)]
pub enum Cgh {
    Complex(ColorField),
    Lee(LeeHologram),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReconSource {
    Complex,
    LeeDecoded,
}

impl Cgh {
    pub fn optics(&self) -> &OpticsConfig {
        match self {
            Cgh::Complex(f) => &f.optics,
            Cgh::Lee(l) => &l.optics,
        }
    }

    fn fields(&self) -> Result<(ColorField, ReconSource)> {
        Ok(match self {
            Cgh::Complex(f) => (f.clone(), ReconSource::Complex),
            Cgh::Lee(l) => (l.decode()?, ReconSource::LeeDecoded),
        })
    }
}

/// Real-valued single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl FloatImage {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::data("image data does not match its size"));
        }
        Ok(FloatImage { width, height, data })
    }

    fn at(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub width: usize,
    pub height: usize,
    /// Per-channel magnitudes (R, G, B), row-major.
    pub amplitude: Vec<Vec<f64>>,
    pub focus_distance_m: f64,
    pub source: ReconSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReconSidecar {
    pub focus_distance_m: f64,
    pub source: ReconSource,
    /// Amplitude that maps to byte 255.
    pub normalization: f64,
}

impl Reconstruction {
    pub fn luminance(&self) -> FloatImage {
        let [r, g, b] = [&self.amplitude[0], &self.amplitude[1], &self.amplitude[2]];
        let data = (0..self.width * self.height)
            .map(|i| 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i])
            .collect();
        FloatImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Largest luminance and its pixel.
    pub fn peak(&self) -> (f64, usize, usize) {
        let lum = self.luminance();
        let (i, v) = lum.data.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |best, (i, &v)| if v > best.1 { (i, v) } else { best },
        );
        (v, i % self.width, i / self.width)
    }

    /// Luminance as an 8-bit PNG scaled so the maximum maps to 255, plus a JSON sidecar.
    pub fn write_png(&self, path: &Path) -> Result<ReconSidecar> {
        let lum = self.luminance();
        let max = lum.data.iter().fold(0.0f64, |m, v| m.max(*v));
        let img = GrayImage::from_fn(self.width as u32, self.height as u32, |x, y| {
            let v = lum.data[y as usize * self.width + x as usize];
            Luma([if max > 0.0 { (v / max * 255.0).round() as u8 } else { 0 }])
        });
        imageio::write_png_gray(path, &img)?;
        let sidecar = ReconSidecar {
            focus_distance_m: self.focus_distance_m,
            source: self.source,
            normalization: max,
        };
        imageio::write_json(&path.with_extension("json"), &sidecar)?;
        Ok(sidecar)
    }
}

/// Back-propagation plan reused across focus distances.
#[derive(Debug, Clone)]
pub struct Reconstructor {
    fields: ColorField,
    source: ReconSource,
    propagators: Vec<Propagator>,
}

impl Reconstructor {
    pub fn new(cgh: &Cgh) -> Result<Self> {
        let (fields, source) = cgh.fields()?;
        let propagators = fields.channels.iter().map(Propagator::for_field).collect();
        Ok(Reconstructor {
            fields,
            source,
            propagators,
        })
    }

    /// Plan for a complex hologram, taking ownership of the fields.
    pub fn from_field(fields: ColorField) -> Self {
        let propagators = fields.channels.iter().map(Propagator::for_field).collect();
        Reconstructor {
            fields,
            source: ReconSource::Complex,
            propagators,
        }
    }

    fn check_focus(&self, focus_distance_m: f64) -> Result<()> {
        let o = &self.fields.optics;
        let (lo, hi) = (o.z_near_m / 2.0, 2.0 * o.z_far_m);
        if !(focus_distance_m >= lo && focus_distance_m <= hi) {
            return Err(Error::config(format!(
                "focus distance {focus_distance_m} m outside [{lo}, {hi}] m"
            )));
        }
        Ok(())
    }

    pub fn reconstruct(&self, focus_distance_m: f64) -> Result<Reconstruction> {
        self.check_focus(focus_distance_m)?;
        let amplitude = self
            .fields
            .channels
            .par_iter()
            .zip(&self.propagators)
            .map(|(field, prop)| {
                let back = prop.propagate(field, -focus_distance_m)?;
                Ok(back.data.iter().map(|c| c.norm()).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Reconstruction {
            width: self.fields.width(),
            height: self.fields.height(),
            amplitude,
            focus_distance_m,
            source: self.source,
        })
    }
}

pub fn reconstruct(cgh: &Cgh, focus_distance_m: f64) -> Result<Reconstruction> {
    Reconstructor::new(cgh)?.reconstruct(focus_distance_m)
}

/// Tenengrad focus measure: mean of squared 3x3 Sobel gradient magnitude
/// over the region, with edge-clamped borders.
pub fn sharpness(image: &FloatImage, region: Region) -> Result<f64> {
    if region.width == 0 || region.height == 0 {
        return Err(Error::config("sharpness region is empty"));
    }
    if (region.x + region.width) as usize > image.width || (region.y + region.height) as usize > image.height {
        return Err(Error::config(format!(
            "region {region:?} exceeds the {}x{} image",
            image.width, image.height
        )));
    }
    let mut sum = 0.0;
    for y in region.y..region.y + region.height {
        for x in region.x..region.x + region.width {
            let (x, y) = (x as isize, y as isize);
            let p = |dx: isize, dy: isize| image.at(x + dx, y + dy);
            let gx = (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1));
            let gy = (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1));
            sum += gx * gx + gy * gy;
        }
    }
    Ok(sum / (region.width as f64 * region.height as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FocusSample {
    pub distance_m: f64,
    pub peak_amplitude: f64,
    /// Sharpness of each requested region, in order.
    pub sharpness: Vec<f64>,
}

/// Reconstructs at every distance and measures peak luminance and region sharpness.
pub fn focus_scan(cgh: &Cgh, distances: &[f64], regions: &[Region]) -> Result<Vec<FocusSample>> {
    if distances.is_empty() {
        return Err(Error::config("focus scan needs at least one distance"));
    }
    let recon = Reconstructor::new(cgh)?;
    distances
        .par_iter()
        .map(|&d| {
            let r = recon.reconstruct(d)?;
            let lum = r.luminance();
            let sharp = regions
                .iter()
                .map(|reg| sharpness(&lum, *reg))
                .collect::<Result<Vec<_>>>()?;
            Ok(FocusSample {
                distance_m: d,
                peak_amplitude: r.peak().0,
                sharpness: sharp,
            })
        })
        .collect()
}

/// CSV with columns `distance_m, sharpness_front, sharpness_back`.
pub fn write_focus_csv(path: &Path, samples: &[FocusSample]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["distance_m", "sharpness_front", "sharpness_back"])?;
    for s in samples {
        let get = |i: usize| s.sharpness.get(i).map(|v| v.to_string()).unwrap_or_default();
        w.write_record([s.distance_m.to_string(), get(0), get(1)])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holo::{lee_encode, synthesize, ComplexField, PhaseMode};
    use crate::scenegen::Frame;
    use crate::viewgeom::camera_pose;
    use image::{Rgb, RgbImage};

    fn img(w: usize, h: usize, f: impl Fn(usize, usize) -> f64) -> FloatImage {
        FloatImage::new(w, h, (0..w * h).map(|i| f(i % w, i / w)).collect()).unwrap()
    }

    fn checkerboard(n: usize, cell: usize) -> FloatImage {
        img(n, n, |x, y| ((x / cell + y / cell) % 2) as f64)
    }

    fn gaussian_blur(src: &FloatImage, sigma: f64) -> FloatImage {
        let r = (3.0 * sigma).ceil() as isize;
        let k: Vec<f64> = (-r..=r)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = k.iter().sum();
        let pass = |s: &FloatImage, horizontal: bool| {
            img(s.width, s.height, |x, y| {
                (-r..=r)
                    .map(|i| {
                        let (dx, dy) = if horizontal { (i, 0) } else { (0, i) };
                        k[(i + r) as usize] * s.at(x as isize + dx, y as isize + dy)
                    })
                    .sum::<f64>()
                    / norm
            })
        };
        pass(&pass(src, true), false)
    }

    fn box_blur(src: &FloatImage) -> FloatImage {
        img(src.width, src.height, |x, y| {
            let mut s = 0.0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    s += src.at(x as isize + dx, y as isize + dy);
                }
            }
            s / 9.0
        })
    }

    #[test]
    fn uniform_image_has_zero_sharpness() {
        let u = img(10, 10, |_, _| 0.7);
        assert_eq!(sharpness(&u, Region::full(10, 10)).unwrap(), 0.0);
    }

    #[test]
    fn blur_reduces_checkerboard_sharpness() {
        let c = checkerboard(32, 4);
        let full = Region::full(32, 32);
        assert!(sharpness(&c, full).unwrap() > sharpness(&gaussian_blur(&c, 1.5), full).unwrap());
    }

    #[test]
    fn repeated_box_blur_is_monotone() {
        // Smooth structured image with edges: a rendered scene's luminance.
        let scene = crate::scenegen::SceneSpec::pair(crate::scenegen::ShapeKind::Cone)
            .scene()
            .unwrap();
        let f = crate::scenegen::render_view(
            &scene,
            &camera_pose(20.0, 0.2).unwrap(),
            crate::scenegen::Resolution::new(64, 48),
            &Default::default(),
        )
        .unwrap();
        let mut cur = img(64, 48, |x, y| {
            let p = f.rgb.get_pixel(x as u32, y as u32).0;
            0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
        });
        let region = Region::full(64, 48);
        let mut prev = sharpness(&cur, region).unwrap();
        for _ in 0..6 {
            cur = box_blur(&cur);
            let s = sharpness(&cur, region).unwrap();
            assert!(s <= prev, "{s} > {prev}");
            prev = s;
        }
    }

    #[test]
    fn bad_regions_rejected() {
        let u = img(10, 10, |_, _| 0.0);
        let empty = Region {
            x: 0,
            y: 0,
            width: 0,
            height: 3,
        };
        assert!(matches!(sharpness(&u, empty), Err(Error::Config(_))));
        let outside = Region {
            x: 8,
            y: 0,
            width: 3,
            height: 3,
        };
        assert!(matches!(sharpness(&u, outside), Err(Error::Config(_))));
    }

    fn point_hologram(w: u32, h: u32, depth: u8) -> ColorField {
        let mut rgb = RgbImage::new(w, h);
        rgb.put_pixel(w / 2, h / 3, Rgb([255, 255, 255]));
        let mut d = GrayImage::new(w, h);
        d.put_pixel(w / 2, h / 3, Luma([depth]));
        let optics = OpticsConfig {
            phase_mode: PhaseMode::Zero,
            ..OpticsConfig::default()
        };
        synthesize(
            &Frame {
                rgb,
                depth: d,
                pose: camera_pose(0.0, 0.2).unwrap(),
            },
            &optics,
        )
        .unwrap()
    }

    #[test]
    fn point_refocuses_at_its_layer() {
        let field = point_hologram(64, 48, 200);
        let z = field.optics.depth_distance(200);
        let r = reconstruct(&Cgh::Complex(field), z).unwrap();
        let (_, x, y) = r.peak();
        assert_eq!((x, y), (32, 16));
    }

    #[test]
    fn lee_source_matches_complex_source() {
        let field = point_hologram(32, 32, 90);
        let z = field.optics.depth_distance(90);
        let a = reconstruct(&Cgh::Complex(field.clone()), z).unwrap();
        let b = reconstruct(&Cgh::Lee(LeeHologram::encode(&field)), z).unwrap();
        assert_eq!(b.source, ReconSource::LeeDecoded);
        for (ca, cb) in a.amplitude.iter().zip(&b.amplitude) {
            for (x, y) in ca.iter().zip(cb) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_hologram_reconstructs_to_zero() {
        let optics = OpticsConfig::default();
        let field = ColorField {
            channels: (0..3)
                .map(|c| ComplexField::zeros(16, 16, optics.wavelengths_m[c], optics.pixel_pitch_m))
                .collect(),
            optics,
        };
        for z in [0.01, 0.02, 0.05] {
            let r = reconstruct(&Cgh::Complex(field.clone()), z).unwrap();
            assert!(r.amplitude.iter().flatten().all(|v| *v == 0.0));
        }
    }

    #[test]
    fn reconstruction_is_linear() {
        let field = point_hologram(32, 32, 140);
        let z = 0.02;
        let a = reconstruct(&Cgh::Complex(field.clone()), z).unwrap();
        let b = reconstruct(&Cgh::Complex(field.scaled(2.5)), z).unwrap();
        for (ca, cb) in a.amplitude.iter().zip(&b.amplitude) {
            for (x, y) in ca.iter().zip(cb) {
                assert!((2.5 * x - y).abs() <= 1e-12 * y.max(1.0));
            }
        }
    }

    #[test]
    fn focus_out_of_range_rejected() {
        let field = point_hologram(16, 16, 100);
        let cgh = Cgh::Complex(field);
        assert!(matches!(reconstruct(&cgh, 0.001), Err(Error::Config(_))));
        assert!(matches!(reconstruct(&cgh, 0.2), Err(Error::Config(_))));
        assert!(matches!(focus_scan(&cgh, &[], &[]), Err(Error::Config(_))));
    }

    #[test]
    fn single_distance_scan_matches_direct() {
        let field = point_hologram(32, 32, 100);
        let cgh = Cgh::Complex(field);
        let region = Region {
            x: 4,
            y: 4,
            width: 20,
            height: 20,
        };
        let scan = focus_scan(&cgh, &[0.02], &[region]).unwrap();
        assert_eq!(scan.len(), 1);
        let direct = reconstruct(&cgh, 0.02).unwrap();
        assert_eq!(scan[0].peak_amplitude, direct.peak().0);
        assert_eq!(scan[0].sharpness[0], sharpness(&direct.luminance(), region).unwrap());
    }

    #[test]
    fn lee_encoding_of_each_channel_is_consistent() {
        let field = point_hologram(16, 16, 60);
        let lee = LeeHologram::encode(&field);
        assert_eq!(lee.channels[1], lee_encode(&field.channels[1]));
    }

    #[test]
    fn png_and_csv_outputs() {
        let field = point_hologram(16, 16, 60);
        let cgh = Cgh::Complex(field);
        let dir = tempfile::tempdir().unwrap();
        let r = reconstruct(&cgh, 0.02).unwrap();
        let side = r.write_png(&dir.path().join("recon.png")).unwrap();
        assert!(side.normalization > 0.0);
        let back: ReconSidecar = imageio::read_json(&dir.path().join("recon.json")).unwrap();
        assert_eq!(back, side);
        let scan = focus_scan(&cgh, &[0.015, 0.02], &[Region::full(16, 8), Region::full(16, 16)]).unwrap();
        write_focus_csv(&dir.path().join("scan.csv"), &scan).unwrap();
        let text = std::fs::read_to_string(dir.path().join("scan.csv")).unwrap();
        assert!(text.starts_with("distance_m,sharpness_front,sharpness_back\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
