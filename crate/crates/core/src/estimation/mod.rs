//! Blockwise estimation of per-pixel variance and per-clique covariance /
//! correlation from the residual field.
//!
//! Every pixel `n` owns the `p x p` block centred on it (mirror padded at the
//! borders). The block is projected onto the polynomial basis and the
//! remainder `e_n = r_n - r̂_n` is the sample vector: variances are
//! `e_n·e_n / (p^2 - q)` and the covariance of a clique `{m, n}` is
//! `e_m·e_n / (p^2 - q)` with both vectors sampled at the same relative
//! offsets.

mod basis;

pub use basis::{build_basis, fit_block, BasisMatrix, DEFAULT_BLOCK, DEFAULT_DEGREE};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image_io::{compute_residual, FloatGrid, ImageGrid, DEFAULT_WIENER_WINDOW};

pub const VARIANCE_FLOOR: f64 = 0.01;
pub const RHO_LIMIT: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Clique `{(x, y), (x + 1, y)}`, stored at the left pixel.
    Horizontal,
    /// Clique `{(x, y), (x, y + 1)}`, stored at the top pixel.
    Vertical,
}

/// Fitted GMRF parameters.
///
/// `cov_h` / `rho_h` are indexed by the left pixel of a horizontal clique and
/// `cov_v` / `rho_v` by the top pixel of a vertical one; the last column
/// (resp. row) has no clique and holds 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelField {
    pub variance: FloatGrid,
    pub cov_h: FloatGrid,
    pub cov_v: FloatGrid,
    pub rho_h: FloatGrid,
    pub rho_v: FloatGrid,
}

impl ModelField {
    pub fn width(&self) -> usize {
        self.variance.width()
    }

    pub fn height(&self) -> usize {
        self.variance.height()
    }

    /// A field with the given variances and all correlations set to zero.
    pub fn independent(variance: FloatGrid) -> Self {
        let (w, h) = (variance.width(), variance.height());
        let zeros = FloatGrid::zeros(w, h);
        Self {
            variance,
            cov_h: zeros.clone(),
            cov_v: zeros.clone(),
            rho_h: zeros.clone(),
            rho_v: zeros,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationConfig {
    pub wiener_window: usize,
    pub block: usize,
    pub degree: usize,
}

impl Default for EstimationConfig {
    fn default() -> Self {
        Self {
            wiener_window: DEFAULT_WIENER_WINDOW,
            block: DEFAULT_BLOCK,
            degree: DEFAULT_DEGREE,
        }
    }
}

/// Full front end: residual, basis, fused estimation and clamping.
pub fn estimate_from_image(image: &ImageGrid, config: &EstimationConfig) -> Result<ModelField> {
    if image.width() < 3 || image.height() < 3 {
        return Err(Error::Dimensions {
            width: image.width(),
            height: image.height(),
            reason: "the cross neighbourhood needs at least 3x3 pixels",
        });
    }
    let residual = compute_residual(image, config.wiener_window)?;
    let basis = build_basis(config.block, config.degree)?;
    Ok(estimate_model(&residual, &basis))
}

fn gather_block(residual: &FloatGrid, x: usize, y: usize, p: usize, out: &mut [f64]) {
    let r = (p / 2) as isize;
    let mut k = 0;
    for dy in -r..=r {
        for dx in -r..=r {
            out[k] = residual.get_mirrored(x as isize + dx, y as isize + dy);
            k += 1;
        }
    }
}

fn remainder_at(residual: &FloatGrid, basis: &BasisMatrix, x: usize, y: usize) -> Vec<f64> {
    let n = basis.samples();
    let mut block = vec![0.0; n];
    let mut rem = vec![0.0; n];
    gather_block(residual, x, y, basis.p(), &mut block);
    basis.remainder_into(&block, &mut rem);
    rem
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-pixel variance `max(0.01, e·e / (p^2 - q))`.
pub fn estimate_variance(residual: &FloatGrid, basis: &BasisMatrix) -> FloatGrid {
    let dof = basis.dof() as f64;
    FloatGrid::from_fn(residual.width(), residual.height(), |x, y| {
        let e = remainder_at(residual, basis, x, y);
        (dot(&e, &e) / dof).max(VARIANCE_FLOOR)
    })
}

/// Raw (unclamped) clique covariance for one orientation.
pub fn estimate_covariance(
    residual: &FloatGrid,
    basis: &BasisMatrix,
    orientation: Orientation,
) -> FloatGrid {
    let dof = basis.dof() as f64;
    let (w, h) = (residual.width(), residual.height());
    FloatGrid::from_fn(w, h, |x, y| {
        let (nx, ny) = match orientation {
            Orientation::Horizontal => (x + 1, y),
            Orientation::Vertical => (x, y + 1),
        };
        if nx >= w || ny >= h {
            return 0.0;
        }
        let a = remainder_at(residual, basis, x, y);
        let b = remainder_at(residual, basis, nx, ny);
        dot(&a, &b) / dof
    })
}

/// Correlation coefficients from clamped variances and raw covariances,
/// clamped to `|rho| <= 0.99`.
pub fn correlation(variance: FloatGrid, cov_h: FloatGrid, cov_v: FloatGrid) -> ModelField {
    let (w, h) = (variance.width(), variance.height());
    let rho = |cov: &FloatGrid, dx: usize, dy: usize| {
        FloatGrid::from_fn(w, h, |x, y| {
            if x + dx >= w || y + dy >= h {
                return 0.0;
            }
            let s = (variance.get(x, y) * variance.get(x + dx, y + dy)).sqrt();
            clamp_rho(cov.get(x, y) / s)
        })
    };
    let rho_h = rho(&cov_h, 1, 0);
    let rho_v = rho(&cov_v, 0, 1);
    ModelField {
        variance,
        cov_h,
        cov_v,
        rho_h,
        rho_v,
    }
}

/// `|rho| <= 0.99`, sign preserved.
pub fn clamp_rho(rho: f64) -> f64 {
    if rho.abs() > RHO_LIMIT {
        RHO_LIMIT.copysign(rho)
    } else {
        rho
    }
}

/// Fused single-pass estimator: remainders are computed once per pixel,
/// one image row at a time, and reused for the variance and both clique
/// orientations. Equal to calling the separate estimators followed by
/// [`correlation`].
pub fn estimate_model(residual: &FloatGrid, basis: &BasisMatrix) -> ModelField {
    let (w, h) = (residual.width(), residual.height());
    let n = basis.samples();
    let dof = basis.dof() as f64;

    let row_remainders = |y: usize| -> Vec<f64> {
        let mut row = vec![0.0; w * n];
        row.par_chunks_mut(n).enumerate().for_each(|(x, out)| {
            let mut block = vec![0.0; n];
            gather_block(residual, x, y, basis.p(), &mut block);
            basis.remainder_into(&block, out);
        });
        row
    };

    let mut variance = FloatGrid::zeros(w, h);
    let mut cov_h = FloatGrid::zeros(w, h);
    let mut cov_v = FloatGrid::zeros(w, h);
    let mut prev: Option<Vec<f64>> = None;
    for y in 0..h {
        let cur = row_remainders(y);
        for x in 0..w {
            let e = &cur[x * n..(x + 1) * n];
            variance.set(x, y, (dot(e, e) / dof).max(VARIANCE_FLOOR));
            if x + 1 < w {
                cov_h.set(x, y, dot(e, &cur[(x + 1) * n..(x + 2) * n]) / dof);
            }
            if let Some(up) = &prev {
                cov_v.set(x, y - 1, dot(&up[x * n..(x + 1) * n], e) / dof);
            }
        }
        prev = Some(cur);
    }
    correlation(variance, cov_h, cov_v)
}
