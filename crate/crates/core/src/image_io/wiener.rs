use super::{mirror_index, FloatGrid, ImageGrid};
use crate::error::{Error, Result};

pub const DEFAULT_WIENER_WINDOW: usize = 2;

/// Lower bound on the local variance used as a divisor.
pub const NOISE_FLOOR: f64 = 1e-10;

/// Local adaptive Wiener filter over an `window x window` neighbourhood.
///
/// For even windows the neighbourhood spans offsets `-(window-1)/2 ..=
/// window/2`, i.e. the extra row/column lies below/right of the pixel.
/// Borders use mirror padding. The noise power is the mean of all local
/// variances.
///
/// Pixel values are integers, so the window sums of `x` and `x^2` are
/// accumulated exactly in `i64` summed-area tables.
pub fn wiener_denoise(grid: &ImageGrid, window: usize) -> Result<FloatGrid> {
    if !(2..=5).contains(&window) {
        return Err(Error::InvalidParameter(format!(
            "wiener window {window} outside 2..=5"
        )));
    }
    let (w, h) = (grid.width(), grid.height());
    let lo = ((window - 1) / 2) as isize;
    let pw = w + window - 1;
    let ph = h + window - 1;

    // summed-area tables with a leading zero row/column
    let stride = pw + 1;
    let mut sum = vec![0i64; stride * (ph + 1)];
    let mut sum_sq = vec![0i64; stride * (ph + 1)];
    for py in 0..ph {
        let sy = mirror_index(py as isize - lo, h);
        let mut row = 0i64;
        let mut row_sq = 0i64;
        for px in 0..pw {
            let sx = mirror_index(px as isize - lo, w);
            let v = i64::from(grid.get(sx, sy));
            row += v;
            row_sq += v * v;
            let i = (py + 1) * stride + px + 1;
            sum[i] = sum[i - stride] + row;
            sum_sq[i] = sum_sq[i - stride] + row_sq;
        }
    }

    let n = (window * window) as i64;
    let box_sum = |t: &[i64], x: usize, y: usize| {
        let (x1, y1) = (x + window, y + window);
        t[y1 * stride + x1] - t[y * stride + x1] - t[y1 * stride + x] + t[y * stride + x]
    };

    let mut means = Vec::with_capacity(w * h);
    let mut vars = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let s = box_sum(&sum, x, y);
            let s2 = box_sum(&sum_sq, x, y);
            means.push(s as f64 / n as f64);
            // exact integer numerator: n*sum(x^2) - sum(x)^2 >= 0
            vars.push((n * s2 - s * s) as f64 / (n * n) as f64);
        }
    }
    let noise = vars.iter().sum::<f64>() / vars.len() as f64;

    let values = grid
        .pixels()
        .iter()
        .zip(means.iter().zip(&vars))
        .map(|(&px, (&mu, &var))| {
            let gain = (var - noise).max(0.0) / var.max(NOISE_FLOOR);
            mu + gain * (f64::from(px) - mu)
        })
        .collect();
    FloatGrid::new(w, h, values)
}

/// Residual `c - F(c)` of the cover against its Wiener-denoised version.
pub fn compute_residual(grid: &ImageGrid, window: usize) -> Result<FloatGrid> {
    let denoised = wiener_denoise(grid, window)?;
    let values = grid
        .pixels()
        .iter()
        .zip(denoised.values())
        .map(|(&c, &f)| f64::from(c) - f)
        .collect();
    FloatGrid::new(grid.width(), grid.height(), values)
}
