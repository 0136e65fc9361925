//! Grayscale rasters, synthetic test patterns and homography warping.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::params::pixel_to_frame;
use super::rng::Rng;
use crate::error::{LieError, Result};
use crate::lie::Homography;

/// Single-channel image with values in `[0, 1]`, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            pixels: vec![0.0; width * height],
        }
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(LieError::Config(format!(
                "{} pixels for a {width}×{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(LieError::Config("pixel values must lie in [0, 1]".into()));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    fn at_or_zero(&self, x: isize, y: isize) -> f64 {
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0.0
        } else {
            self.pixels[y as usize * self.width + x as usize]
        }
    }

    /// Bilinear sample at continuous index coordinates (pixel `(i, j)` at
    /// `(i, j)`), with zero padding outside the grid.
    pub fn sample_bilinear(&self, x: f64, y: f64) -> f64 {
        if !(x > -1.0 && y > -1.0 && x < self.width as f64 && y < self.height as f64) {
            return 0.0;
        }
        let (x0, y0) = (x.floor(), y.floor());
        let (fx, fy) = (x - x0, y - y0);
        let (xi, yi) = (x0 as isize, y0 as isize);
        let top = self.at_or_zero(xi, yi) * (1.0 - fx) + self.at_or_zero(xi + 1, yi) * fx;
        let bottom =
            self.at_or_zero(xi, yi + 1) * (1.0 - fx) + self.at_or_zero(xi + 1, yi + 1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        (self.pixels.iter().map(|p| (p - m).powi(2)).sum::<f64>() / self.pixels.len() as f64).sqrt()
    }

    /// Binary 8-bit PGM (P5).
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.pixels.len() + 32);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height).expect("write to Vec");
        out.extend(
            self.pixels
                .iter()
                .map(|p| (p.clamp(0.0, 1.0) * 255.0).round() as u8),
        );
        out
    }
}

/// Inverse-mapping warp: output pixel `p` takes the bilinear sample of `img`
/// at `H⁻¹ p`, where `H` acts in the normalised frame.
pub fn warp_image(img: &GrayImage, h: &Homography) -> GrayImage {
    let (w, ht) = (img.width, img.height);
    let to_frame = pixel_to_frame(w, ht);
    let from_frame = to_frame.inverse().expect("frame map is invertible");
    let back = from_frame * *h.inverse().matrix() * to_frame;
    let mut out = GrayImage::new(w, ht);
    for j in 0..ht {
        for i in 0..w {
            let p = back.mul_vec(&[i as f64 + 0.5, j as f64 + 0.5, 1.0]);
            let v = if p[2].abs() < 1e-12 {
                0.0
            } else {
                img.sample_bilinear(p[0] / p[2] - 0.5, p[1] / p[2] - 0.5)
            };
            out.pixels[j * w + i] = v.clamp(0.0, 1.0);
        }
    }
    out
}

/// Largest tilt of the synthetic bar away from horizontal, in radians.
pub const BAR_MAX_TILT: f64 = std::f64::consts::PI / 6.0;

/// Renders 3–6 Gaussian blobs and one soft-edged bar, rescaled to `[0, 1]`.
pub fn make_synthetic_image(rng: &mut Rng, width: usize, height: usize) -> Result<GrayImage> {
    if width < 8 || height < 8 {
        return Err(LieError::Config(format!(
            "synthetic images need at least 8×8 pixels, got {width}×{height}"
        )));
    }
    let (wf, hf) = (width as f64, height as f64);
    let size = wf.max(hf);
    let mut acc = vec![0.0; width * height];

    let blobs = 3 + rng.below(4);
    for _ in 0..blobs {
        let cx = rng.uniform(0.1, 0.9) * wf;
        let cy = rng.uniform(0.1, 0.9) * hf;
        let sigma = rng.uniform(0.05, 0.2) * size;
        let amp = rng.uniform(0.3, 1.0);
        let inv = 1.0 / (2.0 * sigma * sigma);
        for j in 0..height {
            for i in 0..width {
                let dx = i as f64 + 0.5 - cx;
                let dy = j as f64 + 0.5 - cy;
                acc[j * width + i] += amp * (-(dx * dx + dy * dy) * inv).exp();
            }
        }
    }

    // Bar: a segment with a one-pixel linear falloff at its edge. It is kept
    // near-horizontal and in the upper half so that every image has an "up".
    let cx = rng.uniform(0.3, 0.7) * wf;
    let cy = rng.uniform(0.15, 0.35) * hf;
    let angle = rng.uniform(-BAR_MAX_TILT, BAR_MAX_TILT);
    let half_len = 0.5 * rng.uniform(0.3, 0.7) * size;
    let half_thick = rng.uniform(0.02, 0.06) * size;
    let amp = rng.uniform(0.6, 1.0);
    let (s, c) = angle.sin_cos();
    for j in 0..height {
        for i in 0..width {
            let dx = i as f64 + 0.5 - cx;
            let dy = j as f64 + 0.5 - cy;
            let along = (dx * c + dy * s).abs();
            let across = (-dx * s + dy * c).abs();
            let d = (along - half_len)
                .max(0.0)
                .hypot((across - half_thick).max(0.0));
            let cover = (1.0 - d).clamp(0.0, 1.0);
            acc[j * width + i] += amp * cover;
        }
    }

    let lo = acc.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = acc.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let pixels = if span > 1e-12 {
        acc.iter()
            .map(|v| ((v - lo) / span).clamp(0.0, 1.0))
            .collect()
    } else {
        vec![0.0; width * height]
    };
    GrayImage::from_pixels(width, height, pixels)
}
