//! Adaptive image steganography driven by a four-neighbour Gaussian Markov
//! random field (GMRF) cover model.
//!
//! The pipeline runs in five stages:
//!
//! 1. [`image_io`]: read the 8-bit cover, Wiener-denoise it and form the
//!    residual field.
//! 2. [`estimation`]: fit a local polynomial model blockwise and estimate the
//!    per-pixel variance and per-clique covariance / correlation.
//! 3. [`fim`]: closed-form binary steganographic Fisher information of every
//!    two-pixel clique and the quadratic KL-divergence of a 4-ary clique tree.
//! 4. [`lattice`] + [`optimizer`]: split the image into two checkerboard
//!    sublattices and alternately minimise the total KL-divergence under the
//!    payload constraint.
//! 5. [`embedding`]: turn change probabilities into costs, optionally smooth
//!    them, and simulate ternary embedding.
//!
//! [`oracle`] holds brute-force reference computations (quantised p.m.f.s,
//! exact KL, numerical Fisher information, finite-difference Hessians) that
//! share no numerical kernels with [`fim`].

pub mod cli;
pub mod embedding;
pub mod error;
pub mod estimation;
pub mod fim;
pub mod image_io;
pub mod lattice;
pub mod optimizer;
pub mod oracle;

pub use embedding::{CostMap, StegoResult};
pub use error::{Error, Result};
pub use estimation::{BasisMatrix, ModelField};
pub use fim::{CliqueParams, Fim2};
pub use image_io::{FloatGrid, ImageGrid};
pub use lattice::{CliqueTree, SublatticePartition};
pub use optimizer::{ChangeProbMap, OptimizerConfig};
