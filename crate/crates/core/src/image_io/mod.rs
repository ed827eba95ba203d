//! Raster types, PGM / GMAP serialization and the denoising front end.

mod gmap;
mod pgm;
mod wiener;

pub use gmap::{read_float_map, write_float_map, GMAP_MAGIC, GMAP_VERSION};
pub use pgm::{read_pgm, write_pgm};
pub use wiener::{compute_residual, wiener_denoise, DEFAULT_WIENER_WINDOW, NOISE_FLOOR};

use crate::error::{Error, Result};

/// 8-bit grayscale raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGrid {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageGrid {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    /// Pixel values widened to `f64`, same layout.
    pub fn to_float(&self) -> FloatGrid {
        FloatGrid {
            width: self.width,
            height: self.height,
            values: self.pixels.iter().map(|&p| f64::from(p)).collect(),
        }
    }
}

/// Row-major grid of finite `f64` values (residuals, variances, maps).
#[derive(Debug, Clone, PartialEq)]
pub struct FloatGrid {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl FloatGrid {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height, values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at index {i}"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            values: vec![value; width * height],
        }
    }

    /// Builds a grid by evaluating `f(x, y)` in row-major order.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            values,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.values[y * self.width + x] = value;
    }

    /// Value at a possibly out-of-range coordinate, resolved by mirror padding.
    pub fn get_mirrored(&self, x: isize, y: isize) -> f64 {
        let xi = mirror_index(x, self.width);
        let yi = mirror_index(y, self.height);
        self.values[yi * self.width + xi]
    }

    pub fn same_shape(&self, other: &FloatGrid) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Dimensions {
            width,
            height,
            reason: "empty raster",
        });
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::Dimensions {
            width,
            height,
            reason: "buffer length does not match width*height",
        });
    }
    Ok(())
}

/// Symmetric (half-sample) reflection of `i` into `0..n`:
/// `-1 -> 0`, `-2 -> 1`, `n -> n-1`. Valid for any offset, reflecting
/// repeatedly when the window is larger than the image.
pub fn mirror_index(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}
