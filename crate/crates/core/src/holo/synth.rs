//! Layer-based synthesis: depth bytes are binned into slabs, each slab is
//! propagated to the hologram plane and the results are summed. Occlusion
//! between slabs is ignored.
//!
//! The sum is formed in the spectral domain (one forward FFT per non-empty
//! slab, one inverse FFT per channel), which is the same linear map as
//! propagating every slab separately.

use image::{GrayImage, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use rustfft::num_complex::Complex64;

use super::{ColorField, ComplexField, OpticsConfig, PhaseMode, Propagator};
use crate::error::{Error, Result};
use crate::scenegen::{Frame, Resolution};

/// Per-pixel initial phase in radians, or `None` for zero phase.
pub fn phase_map(mode: PhaseMode, width: usize, height: usize) -> Option<Vec<f64>> {
    match mode {
        PhaseMode::Zero => None,
        PhaseMode::SeededRandom { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Some(
                (0..width * height)
                    .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
                    .collect(),
            )
        }
    }
}

/// Synthesis plan for one resolution: per-channel propagators and the phase map.
#[derive(Debug, Clone)]
pub struct Synthesizer {
    optics: OpticsConfig,
    width: usize,
    height: usize,
    propagators: Vec<Propagator>,
    phase: Option<Vec<f64>>,
}

impl Synthesizer {
    pub fn new(optics: &OpticsConfig, width: usize, height: usize) -> Result<Self> {
        optics.validate()?;
        if width == 0 || height == 0 {
            return Err(Error::config("hologram resolution must be non-zero"));
        }
        let propagators = optics
            .wavelengths_m
            .iter()
            .map(|&l| Propagator::new(width, height, l, optics.pixel_pitch_m))
            .collect();
        Ok(Synthesizer {
            optics: optics.clone(),
            width,
            height,
            propagators,
            phase: phase_map(optics.phase_mode, width, height),
        })
    }

    pub fn optics(&self) -> &OpticsConfig {
        &self.optics
    }

    pub fn resolution(&self) -> Resolution {
        Resolution::new(self.width as u32, self.height as u32)
    }

    pub fn propagator(&self, channel: usize) -> &Propagator {
        &self.propagators[channel]
    }

    pub fn synthesize(&self, frame: &Frame) -> Result<ColorField> {
        self.synthesize_images(&frame.rgb, &frame.depth)
    }

    /// Synthesizes from an RGB image paired with a (possibly estimated) depth map.
    pub fn synthesize_images(&self, rgb: &RgbImage, depth: &GrayImage) -> Result<ColorField> {
        if rgb.dimensions() != depth.dimensions() {
            return Err(Error::data(format!(
                "rgb {:?} and depth {:?} resolutions differ",
                rgb.dimensions(),
                depth.dimensions()
            )));
        }
        let amplitudes: Vec<Vec<f64>> = (0..3)
            .map(|c| rgb.pixels().map(|p| p.0[c] as f64 / 255.0).collect())
            .collect();
        self.synthesize_amplitudes(&amplitudes, depth.as_raw())
    }

    /// Core synthesis from per-channel source amplitudes and depth bytes.
    pub fn synthesize_amplitudes(&self, amplitudes: &[Vec<f64>], depth: &[u8]) -> Result<ColorField> {
        let n = self.width * self.height;
        if amplitudes.len() != 3 || amplitudes.iter().any(|a| a.len() != n) || depth.len() != n {
            return Err(Error::data(format!(
                "source planes do not match the {}x{} synthesis grid",
                self.width, self.height
            )));
        }
        let mut slabs: Vec<Vec<usize>> = vec![Vec::new(); self.optics.layer_count];
        for (i, &d) in depth.iter().enumerate() {
            slabs[self.optics.layer_of(d)].push(i);
        }

        let channels = (0..3)
            .into_par_iter()
            .map(|c| self.synthesize_channel(c, &amplitudes[c], &slabs))
            .collect::<Vec<_>>();
        let field = ColorField {
            channels,
            optics: self.optics.clone(),
        };
        if !field.is_finite() {
            return Err(Error::Numeric(
                "synthesized hologram contains NaN or infinite values".into(),
            ));
        }
        Ok(field)
    }

    fn synthesize_channel(&self, channel: usize, amplitude: &[f64], slabs: &[Vec<usize>]) -> ComplexField {
        let prop = &self.propagators[channel];
        let n = self.width * self.height;
        let zero = Complex64::new(0.0, 0.0);
        let mut acc = vec![zero; n];
        let mut buf = vec![zero; n];
        for (layer, pixels) in slabs.iter().enumerate() {
            if pixels.iter().all(|&i| amplitude[i] == 0.0) {
                continue;
            }
            buf.fill(zero);
            for &i in pixels {
                buf[i] = match &self.phase {
                    None => Complex64::new(amplitude[i], 0.0),
                    Some(phase) => Complex64::from_polar(amplitude[i], phase[i]),
                };
            }
            prop.fft().forward(&mut buf);
            prop.accumulate_transfer(&buf, self.optics.layer_distance(layer), &mut acc);
        }
        prop.fft().inverse(&mut acc);
        ComplexField {
            width: self.width,
            height: self.height,
            wavelength_m: self.optics.wavelengths_m[channel],
            pitch_m: self.optics.pixel_pitch_m,
            data: acc,
        }
    }
}

/// Synthesizes the three color holograms of a frame.
pub fn synthesize(frame: &Frame, optics: &OpticsConfig) -> Result<ColorField> {
    frame.check_consistent()?;
    Synthesizer::new(optics, frame.rgb.width() as usize, frame.rgb.height() as usize)?.synthesize(frame)
}

/// Propagates each `(field, distance)` pair and sums the results.
pub fn superpose_layers(propagator: &Propagator, layers: &[(ComplexField, f64)]) -> Result<ComplexField> {
    let first = &layers.first().ok_or_else(|| Error::config("no layers to superpose"))?.0;
    let mut acc = vec![Complex64::new(0.0, 0.0); first.data.len()];
    for (field, z) in layers {
        let mut spectrum = field.data.clone();
        if spectrum.len() != acc.len() {
            return Err(Error::data("layer fields differ in size"));
        }
        propagator.fft().forward(&mut spectrum);
        propagator.accumulate_transfer(&spectrum, *z, &mut acc);
    }
    propagator.fft().inverse(&mut acc);
    Ok(ComplexField {
        data: acc,
        ..first.clone()
    })
}

/// Nearest-neighbor resampling of both images of a frame.
pub fn upscale_nearest(frame: &Frame, target: Resolution) -> Frame {
    let (w, h) = frame.rgb.dimensions();
    let src_x = |x: u32| (x as u64 * w as u64 / target.width as u64) as u32;
    let src_y = |y: u32| (y as u64 * h as u64 / target.height as u64) as u32;
    Frame {
        rgb: RgbImage::from_fn(target.width, target.height, |x, y| {
            *frame.rgb.get_pixel(src_x(x), src_y(y))
        }),
        depth: GrayImage::from_fn(target.width, target.height, |x, y| {
            *frame.depth.get_pixel(src_x(x), src_y(y))
        }),
        pose: frame.pose,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::viewgeom::camera_pose;
    use image::{Luma, Rgb};
    use std::f64::consts::PI;

    fn frame_from(rgb: RgbImage, depth: GrayImage) -> Frame {
        Frame {
            rgb,
            depth,
            pose: camera_pose(0.0, 0.2).unwrap(),
        }
    }

    fn zero_phase() -> OpticsConfig {
        OpticsConfig {
            phase_mode: PhaseMode::Zero,
            ..OpticsConfig::default()
        }
    }

    #[test]
    fn black_image_gives_zero_field() {
        let f = frame_from(RgbImage::new(16, 8), GrayImage::from_pixel(16, 8, Luma([200])));
        let holo = synthesize(&f, &OpticsConfig::default()).unwrap();
        assert_eq!(holo.energy(), 0.0);
    }

    #[test]
    fn resolution_mismatch_rejected() {
        let f = frame_from(RgbImage::new(16, 8), GrayImage::new(8, 8));
        assert!(matches!(synthesize(&f, &OpticsConfig::default()), Err(Error::Data(_))));
    }

    /// Direct evaluation of the inverse DFT of the transfer function: the
    /// discrete wavelet radiated by one pixel, no FFT involved.
    fn point_kernel(lambda: f64, pitch: f64, w: usize, h: usize, z: f64, src: (usize, usize)) -> Vec<Complex64> {
        let freq = |k: usize, n: usize| {
            let k = if 2 * k < n { k as f64 } else { k as f64 - n as f64 };
            k / (n as f64 * pitch)
        };
        let limit = |n: usize| 1.0 / (lambda * ((2.0 * z / (n as f64 * pitch)).powi(2) + 1.0).sqrt());
        let transfer: Vec<Complex64> = (0..w * h)
            .map(|i| {
                let (fx, fy) = (freq(i % w, w), freq(i / w, h));
                let rad = 1.0 / (lambda * lambda) - fx * fx - fy * fy;
                if rad <= 0.0 || fx.abs() > limit(w) || fy.abs() > limit(h) {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::from_polar(1.0, 2.0 * PI * z * rad.sqrt())
                }
            })
            .collect();
        let mut out = vec![Complex64::new(0.0, 0.0); w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = Complex64::new(0.0, 0.0);
                for ky in 0..h {
                    for kx in 0..w {
                        let dx = (x + w - src.0) % w;
                        let dy = (y + h - src.1) % h;
                        let ang = 2.0 * PI * ((kx * dx) as f64 / w as f64 + (ky * dy) as f64 / h as f64);
                        acc += transfer[ky * w + kx] * Complex64::from_polar(1.0, ang);
                    }
                }
                out[y * w + x] = acc / (w * h) as f64;
            }
        }
        out
    }

    #[test]
    fn single_near_pixel_matches_direct_kernel() {
        let (w, h) = (20, 16);
        let optics = zero_phase();
        let src = (7, 5);
        let mut rgb = RgbImage::new(w as u32, h as u32);
        rgb.put_pixel(src.0 as u32, src.1 as u32, Rgb([255, 255, 255]));
        let mut depth = GrayImage::new(w as u32, h as u32);
        depth.put_pixel(src.0 as u32, src.1 as u32, Luma([255]));
        let holo = synthesize(&frame_from(rgb, depth), &optics).unwrap();
        for c in 0..3 {
            let expect = ComplexField {
                data: point_kernel(
                    optics.wavelengths_m[c],
                    optics.pixel_pitch_m,
                    w,
                    h,
                    optics.z_near_m,
                    src,
                ),
                ..holo.channels[c].clone()
            };
            assert!(holo.channels[c].relative_l2(&expect) < 1e-6);
        }
    }

    #[test]
    fn single_layer_conserves_energy() {
        // A uniform zero-phase source has only a DC component, inside every band limit.
        let rgb = RgbImage::from_pixel(32, 32, Rgb([180, 40, 90]));
        let depth = GrayImage::from_pixel(32, 32, Luma([130]));
        let f = frame_from(rgb, depth);
        let src: f64 = f
            .rgb
            .pixels()
            .flat_map(|p| p.0)
            .map(|v| (v as f64 / 255.0).powi(2))
            .sum();
        let optics = OpticsConfig {
            phase_mode: PhaseMode::Zero,
            ..OpticsConfig::default()
        };
        let holo = synthesize(&f, &optics).unwrap();
        assert!((holo.energy() - src).abs() / src < 1e-9);
    }

    #[test]
    fn layers_with_disjoint_spectra_add_energies() {
        let (w, h) = (32, 32);
        let prop = Propagator::new(w, h, 520e-9, 8e-6);
        // Each layer is a single plane wave on its own low-frequency bin, inside
        // the band limit of every layer distance used here.
        let bins = [(0usize, 0usize), (1, 2), (2, 1), (31, 30)];
        let layers: Vec<(ComplexField, f64)> = bins
            .iter()
            .enumerate()
            .map(|(l, &(kx, ky))| {
                let amp = 0.5 + l as f64 * 0.25;
                let data = (0..w * h)
                    .map(|i| {
                        let (x, y) = (i % w, i / w);
                        let ang = 2.0 * PI * ((kx * x) as f64 / w as f64 + (ky * y) as f64 / h as f64);
                        Complex64::from_polar(amp, ang + l as f64)
                    })
                    .collect();
                (
                    ComplexField::from_data(w, h, 520e-9, 8e-6, data).unwrap(),
                    0.011 + 0.004 * l as f64,
                )
            })
            .collect();
        let total = superpose_layers(&prop, &layers).unwrap();
        let sum: f64 = layers.iter().map(|(f, _)| f.energy()).sum();
        assert!((total.energy() - sum).abs() / sum < 1e-6);
    }

    #[test]
    fn synthesis_is_linear_in_amplitude() {
        let (w, h) = (24, 16);
        let synth = Synthesizer::new(&zero_phase(), w, h).unwrap();
        let depth: Vec<u8> = (0..w * h).map(|i| (i * 37 % 256) as u8).collect();
        let amps: Vec<Vec<f64>> = (0..3)
            .map(|c| (0..w * h).map(|i| ((i * (c + 3)) % 17) as f64 / 16.0).collect())
            .collect();
        let base = synth.synthesize_amplitudes(&amps, &depth).unwrap();
        for alpha in [0.0, 0.25, 0.6, 1.0] {
            let scaled_amps: Vec<Vec<f64>> = amps.iter().map(|a| a.iter().map(|v| v * alpha).collect()).collect();
            let scaled = synth.synthesize_amplitudes(&scaled_amps, &depth).unwrap();
            let expect = base.scaled(alpha);
            for (a, b) in scaled.channels.iter().zip(&expect.channels) {
                let err: f64 = a.data.iter().zip(&b.data).map(|(p, q)| (p - q).norm_sqr()).sum();
                assert!(err.sqrt() <= 1e-12 * base.energy().sqrt().max(1.0));
            }
        }
    }

    #[test]
    fn seeded_phase_is_reproducible() {
        let a = phase_map(PhaseMode::SeededRandom { seed: 42 }, 8, 8).unwrap();
        let b = phase_map(PhaseMode::SeededRandom { seed: 42 }, 8, 8).unwrap();
        let c = phase_map(PhaseMode::SeededRandom { seed: 7 }, 8, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.iter().all(|p| (0.0..std::f64::consts::TAU).contains(p)));
        assert!(phase_map(PhaseMode::Zero, 8, 8).is_none());
    }

    #[test]
    fn upscale_repeats_pixels() {
        let rgb = RgbImage::from_fn(2, 2, |x, y| Rgb([x as u8, y as u8, 0]));
        let f = frame_from(rgb, GrayImage::from_fn(2, 2, |x, y| Luma([(x + 2 * y) as u8])));
        let up = upscale_nearest(&f, Resolution::new(6, 4));
        assert_eq!(up.rgb.get_pixel(5, 3).0, [1, 1, 0]);
        assert_eq!(up.rgb.get_pixel(2, 1).0, [0, 0, 0]);
        assert_eq!(up.depth.get_pixel(3, 2).0, [3]);
    }
}
