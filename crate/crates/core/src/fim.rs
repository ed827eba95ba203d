//! Closed-form binary steganographic Fisher information of a two-pixel
//! Gaussian clique and the quadratic KL-divergence models built on it.
//!
//! All KL values are in bits. Slot convention: whenever a clique belongs to
//! a 4-ary clique tree, the tree centre is pixel 2, so `i22` is the centre's
//! diagonal entry and `i12` the coupling to the neighbour.

use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Symmetric 2x2 Fisher information matrix, stored as its upper triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fim2 {
    pub i11: f64,
    pub i12: f64,
    pub i22: f64,
}

impl Fim2 {
    pub const ZERO: Fim2 = Fim2 {
        i11: 0.0,
        i12: 0.0,
        i22: 0.0,
    };

    /// `[b1, b2] I [b1, b2]^T`.
    pub fn quadratic_form(&self, b1: f64, b2: f64) -> f64 {
        self.i11 * b1 * b1 + 2.0 * self.i12 * b1 * b2 + self.i22 * b2 * b2
    }

    /// Same matrix with the two pixels swapped.
    pub fn swapped(&self) -> Fim2 {
        Fim2 {
            i11: self.i22,
            i12: self.i12,
            i22: self.i11,
        }
    }

    pub fn determinant(&self) -> f64 {
        self.i11 * self.i22 - self.i12 * self.i12
    }
}

/// Parameters of one zero-mean bivariate Gaussian clique. `sigma1` and
/// `sigma2` are variances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CliqueParams {
    pub sigma1: f64,
    pub sigma2: f64,
    pub rho: f64,
    pub delta: f64,
}

impl CliqueParams {
    pub fn new(sigma1: f64, sigma2: f64, rho: f64) -> Self {
        Self {
            sigma1,
            sigma2,
            rho,
            delta: 1.0,
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma1 >= 0.01 && self.sigma2 >= 0.01) {
            return Err(Error::InvalidParameter(format!(
                "clique variances ({}, {}) below 0.01",
                self.sigma1, self.sigma2
            )));
        }
        if !(self.rho.abs() <= 0.99) {
            return Err(Error::InvalidParameter(format!(
                "clique correlation {} outside [-0.99, 0.99]",
                self.rho
            )));
        }
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParameter("quantization step must be positive".into()));
        }
        Ok(())
    }

    /// Covariance `rho * sqrt(sigma1 * sigma2)`.
    pub fn covariance(&self) -> f64 {
        self.rho * (self.sigma1 * self.sigma2).sqrt()
    }
}

/// Fisher information of the clique at zero embedding:
///
/// ```text
/// i11 = 2Δ⁴ / (σ1² (1-ρ²)²)
/// i12 = 2Δ⁴ ρ² / (σ1 σ2 (1-ρ²)²)
/// i22 = 2Δ⁴ / (σ2² (1-ρ²)²)
/// ```
pub fn fim_clique(params: &CliqueParams) -> Fim2 {
    let d4 = params.delta.powi(4);
    let one_minus = 1.0 - params.rho * params.rho;
    let denom = one_minus * one_minus;
    Fim2 {
        i11: 2.0 * d4 / (params.sigma1 * params.sigma1 * denom),
        i12: 2.0 * d4 * params.rho * params.rho / (params.sigma1 * params.sigma2 * denom),
        i22: 2.0 * d4 / (params.sigma2 * params.sigma2 * denom),
    }
}

/// Single-pixel Fisher information `2Δ⁴/σ²` (the uncorrelated limit of
/// [`fim_clique`]).
pub fn fi_single(sigma: f64, delta: f64) -> f64 {
    2.0 * delta.powi(4) / (sigma * sigma)
}

/// Quadratic KL-divergence of one clique, in bits.
pub fn kl_clique(beta1: f64, beta2: f64, fim: &Fim2) -> f64 {
    fim.quadratic_form(beta1, beta2) / (2.0 * LN_2)
}

/// Quadratic KL-divergence of a 4-ary clique tree, in bits:
///
/// ```text
/// D = [ Σ_c θ_c β_cᵀ I_c β_c − (Σ_c θ_c − 1) I₁ β_s² ] / (2 ln 2)
/// ```
///
/// `fims[c]` must hold the tree centre in slot 2; `beta_neighbors[c]` is the
/// neighbour's change probability (slot 1).
pub fn kl_tree(
    beta_center: f64,
    beta_neighbors: &[f64],
    thetas: &[bool],
    fims: &[Fim2],
    fi_center: f64,
) -> Result<f64> {
    if beta_neighbors.len() != thetas.len() || thetas.len() != fims.len() {
        return Err(Error::LengthMismatch(
            "neighbour probabilities, activation flags and FIMs must align",
        ));
    }
    if thetas.len() > 4 {
        return Err(Error::LengthMismatch("a clique tree has at most four cliques"));
    }
    let mut active = 0.0;
    let mut total = 0.0;
    for ((&b, &on), fim) in beta_neighbors.iter().zip(thetas).zip(fims) {
        if on {
            active += 1.0;
            total += fim.quadratic_form(b, beta_center);
        }
    }
    total -= (active - 1.0) * fi_center * beta_center * beta_center;
    Ok(total / (2.0 * LN_2))
}
