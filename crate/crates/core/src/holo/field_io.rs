//! Binary complex-field file.
//!
//! Layout, all little-endian: magic `HSWF`, width `u32`, height `u32`,
//! wavelength `f64`, pitch `f64`, then `width * height` row-major
//! `(re, im)` pairs of `f32`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use super::ComplexField;
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"HSWF";
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 8;

pub fn write_field(path: &Path, field: &ComplexField) -> Result<()> {
    let io = |e| Error::io(path, e);
    let (w, h) = (u32::try_from(field.width), u32::try_from(field.height));
    let (Ok(w), Ok(h)) = (w, h) else {
        return Err(Error::data("field too large for the file format"));
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    out.write_all(FIELD_MAGIC).map_err(io)?;
    out.write_all(&w.to_le_bytes()).map_err(io)?;
    out.write_all(&h.to_le_bytes()).map_err(io)?;
    out.write_all(&field.wavelength_m.to_le_bytes()).map_err(io)?;
    out.write_all(&field.pitch_m.to_le_bytes()).map_err(io)?;
    for c in &field.data {
        out.write_all(&(c.re as f32).to_le_bytes()).map_err(io)?;
        out.write_all(&(c.im as f32).to_le_bytes()).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_field(path: &Path) -> Result<ComplexField> {
    let io = |e| Error::io(path, e);
    let mut bytes = Vec::new();
    BufReader::new(File::open(path).map_err(io)?)
        .read_to_end(&mut bytes)
        .map_err(io)?;
    if bytes.len() < HEADER_LEN || &bytes[..4] != FIELD_MAGIC {
        return Err(Error::data(format!("{} is not a complex field file", path.display())));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as usize;
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (width, height) = (u32_at(4), u32_at(8));
    let (wavelength_m, pitch_m) = (f64_at(12), f64_at(20));
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != width * height * 8 {
        return Err(Error::data(format!(
            "{}: expected {} samples, found {} bytes",
            path.display(),
            width * height,
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            Complex64::new(re as f64, im as f64)
        })
        .collect();
    ComplexField::from_data(width, height, wavelength_m, pitch_m, data)
}
