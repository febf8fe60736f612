//! Sensor effect: Gaussian point-spread blur standing in for the MTF,
//! additive white Gaussian noise, and quantization for export.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imagecore::ImageBuffer;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("blur sigma must be finite and non-negative, got {0}")]
    InvalidBlur(f64),
    #[error("noise sigma must be finite and non-negative, got {0}")]
    InvalidNoise(f64),
    #[error("export depth must be 8 or 16 bits, got {0}")]
    InvalidDepth(u8),
    #[error("export range max must exceed min, got [{0}, {1}]")]
    InvalidRange(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorModel {
    /// Gaussian PSF standard deviation, pixels.
    pub blur_sigma: f64,
    /// Additive noise standard deviation, gray levels.
    pub noise_sigma: f64,
    pub depth: u8,
    pub range: (f64, f64),
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            blur_sigma: 1.0,
            noise_sigma: 0.0,
            depth: 16,
            range: (0.0, 65535.0),
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<(), SensorError> {
        if !(self.blur_sigma.is_finite() && self.blur_sigma >= 0.0) {
            return Err(SensorError::InvalidBlur(self.blur_sigma));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(SensorError::InvalidNoise(self.noise_sigma));
        }
        if self.depth != 8 && self.depth != 16 {
            return Err(SensorError::InvalidDepth(self.depth));
        }
        let (lo, hi) = self.range;
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(SensorError::InvalidRange(lo, hi));
        }
        Ok(())
    }

    pub fn max_code(&self) -> u16 {
        ((1u32 << self.depth) - 1) as u16
    }
}

/// Sampled Gaussian truncated at ±ceil(4σ) and normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / sum).collect()
}

/// Half-sample symmetric reflection (`d c b a | a b c d | d c b a`),
/// repeated as often as the kernel needs.
#[inline]
fn mirror(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

fn convolve_line(src: &[f64], dst: &mut [f64], kernel: &[f64]) {
    let radius = (kernel.len() / 2) as i64;
    let n = src.len();
    for (i, out) in dst.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (k, &w) in kernel.iter().enumerate() {
            acc += w * src[mirror(i as i64 + k as i64 - radius, n)];
        }
        *out = acc;
    }
}

/// Separable Gaussian blur with mirrored borders; σ = 0 is the identity.
pub fn apply_mtf(img: &ImageBuffer, model: &SensorModel) -> ImageBuffer {
    if model.blur_sigma == 0.0 {
        return img.clone();
    }
    let kernel = gaussian_kernel(model.blur_sigma);
    let (w, h) = img.dims();
    let mut rows = vec![0.0; w * h];
    rows.par_chunks_mut(w)
        .zip(img.data().par_chunks(w))
        .for_each(|(dst, src)| convolve_line(src, dst, &kernel));
    // Columns, via a transposed buffer so each line is contiguous.
    let mut cols_in = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            cols_in[x * h + y] = rows[y * w + x];
        }
    }
    let mut cols_out = vec![0.0; w * h];
    cols_out
        .par_chunks_mut(h)
        .zip(cols_in.par_chunks(h))
        .for_each(|(dst, src)| convolve_line(src, dst, &kernel));
    let mut out = ImageBuffer::new(w, h);
    for y in 0..h {
        for x in 0..w {
            out.set(x, y, cols_out[x * h + y]);
        }
    }
    out
}

/// Adds i.i.d. N(0, σ_n²) to every pixel in row-major order.
pub fn apply_noise<R: Rng + ?Sized>(
    img: &ImageBuffer,
    model: &SensorModel,
    rng: &mut R,
) -> ImageBuffer {
    if model.noise_sigma == 0.0 {
        return img.clone();
    }
    let normal = Normal::new(0.0, model.noise_sigma).expect("validated sigma");
    let data = img.data().iter().map(|&v| v + normal.sample(rng)).collect();
    ImageBuffer::from_vec(img.width(), img.height(), data).expect("finite input plus finite noise")
}

/// Linear map from the export range onto `[0, max_code]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizationMapping {
    pub range_min: f64,
    pub range_max: f64,
    pub depth: u8,
    pub max_code: u16,
}

impl QuantizationMapping {
    pub fn from_model(model: &SensorModel) -> Self {
        Self {
            range_min: model.range.0,
            range_max: model.range.1,
            depth: model.depth,
            max_code: model.max_code(),
        }
    }

    pub fn step(&self) -> f64 {
        (self.range_max - self.range_min) / self.max_code as f64
    }

    pub fn dequantize(&self, code: u16) -> f64 {
        self.range_min + code as f64 * self.step()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedImage {
    pub width: usize,
    pub height: usize,
    pub codes: Vec<u16>,
    pub mapping: QuantizationMapping,
    pub saturated_low: usize,
    pub saturated_high: usize,
}

/// `code = round_half_even((v − min)/(max − min)·(2^depth − 1))`, clipped.
pub fn quantize(img: &ImageBuffer, model: &SensorModel) -> QuantizedImage {
    let mapping = QuantizationMapping::from_model(model);
    let (lo, hi) = model.range;
    let top = mapping.max_code as f64;
    let (mut saturated_low, mut saturated_high) = (0, 0);
    let codes = img
        .data()
        .iter()
        .map(|&v| {
            if v < lo {
                saturated_low += 1;
                0
            } else if v > hi {
                saturated_high += 1;
                mapping.max_code
            } else {
                ((v - lo) / (hi - lo) * top).round_ties_even().min(top) as u16
            }
        })
        .collect();
    QuantizedImage {
        width: img.width(),
        height: img.height(),
        codes,
        mapping,
        saturated_low,
        saturated_high,
    }
}
