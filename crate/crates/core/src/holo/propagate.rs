//! Band-limited angular-spectrum propagation.
//!
//! The transfer function is `exp(i 2π z sqrt(1/λ² − fx² − fy²))` on a grid
//! without zero padding, so propagation is a circular (unitary) operation.
//! Evanescent frequencies are dropped and each axis is limited to
//! `1 / (λ sqrt((2 Δf z)² + 1))` to avoid aliasing of the sampled kernel.

use rustfft::num_complex::Complex64;

use super::{ComplexField, Fft2};
use crate::error::{Error, Result};

/// Frequencies of an `n`-point DFT with sample spacing `pitch`, in FFT order.
pub(crate) fn fft_freqs(n: usize, pitch: f64) -> Vec<f64> {
    let span = n as f64 * pitch;
    (0..n)
        .map(|k| {
            let k = if k < n.div_ceil(2) {
                k as f64
            } else {
                k as f64 - n as f64
            };
            k / span
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Propagator {
    width: usize,
    height: usize,
    wavelength_m: f64,
    pitch_m: f64,
    fft: Fft2,
    fx: Vec<f64>,
    fy: Vec<f64>,
    /// Longitudinal frequency per spectrum sample; `None` when evanescent.
    kz: Vec<Option<f64>>,
}

impl Propagator {
    pub fn new(width: usize, height: usize, wavelength_m: f64, pitch_m: f64) -> Self {
        let fx = fft_freqs(width, pitch_m);
        let fy = fft_freqs(height, pitch_m);
        let inv_l2 = 1.0 / (wavelength_m * wavelength_m);
        let mut kz = Vec::with_capacity(width * height);
        for y in &fy {
            for x in &fx {
                let rad = inv_l2 - x * x - y * y;
                kz.push((rad > 0.0).then(|| rad.sqrt()));
            }
        }
        Propagator {
            width,
            height,
            wavelength_m,
            pitch_m,
            fft: Fft2::new(width, height),
            fx,
            fy,
            kz,
        }
    }

    pub fn for_field(field: &ComplexField) -> Self {
        Propagator::new(field.width, field.height, field.wavelength_m, field.pitch_m)
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Per-axis band limits for a propagation distance.
    pub fn band_limits(&self, distance_m: f64) -> (f64, f64) {
        let limit = |n: usize| {
            let df = 1.0 / (n as f64 * self.pitch_m);
            1.0 / (self.wavelength_m * ((2.0 * df * distance_m).powi(2) + 1.0).sqrt())
        };
        (limit(self.width), limit(self.height))
    }

    /// Whether spectrum sample `(kx, ky)` passes at `distance_m`.
    pub fn passes(&self, kx: usize, ky: usize, distance_m: f64) -> bool {
        let (ux, uy) = self.band_limits(distance_m);
        self.kz[ky * self.width + kx].is_some() && self.fx[kx].abs() <= ux && self.fy[ky].abs() <= uy
    }

    /// Transfer function sampled in FFT order.
    pub fn transfer(&self, distance_m: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.width * self.height];
        self.for_each_transfer(distance_m, |i, h| out[i] = h);
        out
    }

    fn for_each_transfer(&self, distance_m: f64, mut f: impl FnMut(usize, Complex64)) {
        let (ux, uy) = self.band_limits(distance_m);
        let phase_scale = 2.0 * std::f64::consts::PI * distance_m;
        for (ky, fy) in self.fy.iter().enumerate() {
            if fy.abs() > uy {
                continue;
            }
            let row = ky * self.width;
            for (kx, fx) in self.fx.iter().enumerate() {
                if fx.abs() > ux {
                    continue;
                }
                if let Some(kz) = self.kz[row + kx] {
                    let (s, c) = (phase_scale * kz).sin_cos();
                    f(row + kx, Complex64::new(c, s));
                }
            }
        }
    }

    /// Multiplies a spectrum by the transfer function in place.
    pub fn apply_transfer(&self, spectrum: &mut [Complex64], distance_m: f64) {
        let mut out = vec![Complex64::new(0.0, 0.0); spectrum.len()];
        self.for_each_transfer(distance_m, |i, h| out[i] = spectrum[i] * h);
        spectrum.copy_from_slice(&out);
    }

    /// `acc += spectrum * H(distance)`.
    pub fn accumulate_transfer(&self, spectrum: &[Complex64], distance_m: f64, acc: &mut [Complex64]) {
        self.for_each_transfer(distance_m, |i, h| acc[i] += spectrum[i] * h);
    }

    fn check(&self, field: &ComplexField) -> Result<()> {
        field.validate()?;
        if field.width != self.width
            || field.height != self.height
            || field.wavelength_m != self.wavelength_m
            || field.pitch_m != self.pitch_m
        {
            return Err(Error::data(format!(
                "field {}x{} (λ={}, pitch={}) does not match propagator {}x{} (λ={}, pitch={})",
                field.width,
                field.height,
                field.wavelength_m,
                field.pitch_m,
                self.width,
                self.height,
                self.wavelength_m,
                self.pitch_m
            )));
        }
        Ok(())
    }

    pub fn propagate(&self, field: &ComplexField, distance_m: f64) -> Result<ComplexField> {
        self.check(field)?;
        if !distance_m.is_finite() {
            return Err(Error::config("propagation distance must be finite"));
        }
        let mut data = field.data.clone();
        self.fft.forward(&mut data);
        self.apply_transfer(&mut data, distance_m);
        self.fft.inverse(&mut data);
        Ok(ComplexField { data, ..field.clone() })
    }
}

/// One-shot propagation; plan a [`Propagator`] to reuse across calls.
pub fn propagate(field: &ComplexField, distance_m: f64) -> Result<ComplexField> {
    Propagator::for_field(field).propagate(field, distance_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn test_field(w: usize, h: usize) -> ComplexField {
        let data = (0..w * h)
            .map(|i| {
                let (x, y) = ((i % w) as f64, (i / w) as f64);
                Complex64::new((0.3 * x).cos() + 0.1 * y, (0.2 * y).sin())
            })
            .collect();
        ComplexField::from_data(w, h, 520e-9, 8e-6, data).unwrap()
    }

    #[test]
    fn freqs_follow_fft_order() {
        assert_eq!(fft_freqs(4, 0.5), vec![0.0, 0.5, -1.0, -0.5]);
        assert_eq!(fft_freqs(5, 1.0), vec![0.0, 0.2, 0.4, -0.4, -0.2]);
    }

    #[test]
    fn zero_distance_is_identity() {
        let f = test_field(32, 24);
        let out = propagate(&f, 0.0).unwrap();
        assert!(out.relative_l2(&f) < 1e-12);
    }

    #[test]
    fn plane_wave_gains_global_phase() {
        let z = 0.0123;
        let lambda = 520e-9;
        let f = ComplexField::from_data(16, 16, lambda, 8e-6, vec![Complex64::new(0.7, 0.0); 256]).unwrap();
        let out = propagate(&f, z).unwrap();
        let expect = Complex64::from_polar(0.7, 2.0 * PI * z / lambda);
        // The phase is ~1.5e5 rad, so a few ulps of it are ~1e-11.
        for v in &out.data {
            assert!((v - expect).norm() < 1e-9);
        }
    }

    #[test]
    fn transfer_is_unit_modulus_on_passband() {
        let p = Propagator::new(32, 32, 638e-9, 8e-6);
        let h = p.transfer(0.05);
        for ky in 0..32 {
            for kx in 0..32 {
                let m = h[ky * 32 + kx].norm();
                if p.passes(kx, ky, 0.05) {
                    assert!((m - 1.0).abs() < 1e-12);
                } else {
                    assert_eq!(m, 0.0);
                }
            }
        }
        // At 5 cm the band limit keeps only the lowest frequencies of this grid.
        assert!(!p.passes(16, 0, 0.05));
        assert!(p.passes(1, 1, 0.05));
    }

    #[test]
    fn evanescent_components_dropped() {
        // Pitch below half a wavelength puts the grid corners beyond 1/λ.
        let p = Propagator::new(8, 8, 1e-6, 0.3e-6);
        assert!(!p.passes(4, 4, 0.0));
        assert!(p.passes(0, 0, 0.0));
    }

    #[test]
    fn mismatched_field_rejected() {
        let p = Propagator::new(8, 8, 520e-9, 8e-6);
        let f = test_field(8, 4);
        assert!(matches!(p.propagate(&f, 0.01), Err(Error::Data(_))));
    }
}
