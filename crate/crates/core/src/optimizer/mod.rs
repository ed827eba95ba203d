//! Change-probability optimisation by alternating constrained KL
//! minimisation over the two sublattices.
//!
//! With the opposite sublattice frozen, every tree centre contributes an
//! independent scalar problem. Its stationarity condition reads
//! `Γβ + Λ = 2λ ln((1-2β)/β)` where
//!
//! ```text
//! Γ = Σ θ_c I_c[2,2] - (Σ θ_c - 1) I₁
//! Λ = Σ θ_c I_c[1,2] β_neighbour
//! ```
//!
//! and `λ` is fixed by the payload carried by the sublattice.

mod scalar;
mod search;

pub use scalar::{entropy_ternary, solve_beta_pixel, stationarity_residual, BETA_MAX, BETA_MIN};
pub use search::{capacity_bits, total_entropy, PayloadSearch, PayloadTolerance};
pub(crate) use search::search_payload;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimation::ModelField;
use crate::fim::{fi_single, fim_clique, kl_tree, CliqueParams, Fim2};
use crate::image_io::FloatGrid;
use crate::lattice::{
    allocate_cliques, build_trees, CliqueTree, Direction, Sublattice, SublatticePartition,
    DEFAULT_BETA_T,
};

/// One change probability per pixel, each in `[0, 1/3]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChangeProbMap {
    beta: FloatGrid,
}

impl ChangeProbMap {
    pub fn new(beta: FloatGrid) -> Result<Self> {
        if let Some(b) = beta.values().iter().find(|b| !(0.0..=BETA_MAX).contains(*b)) {
            return Err(Error::InvalidParameter(format!(
                "change probability {b} outside [0, 1/3]"
            )));
        }
        Ok(Self { beta })
    }

    pub fn filled(width: usize, height: usize, beta: f64) -> Result<Self> {
        Self::new(FloatGrid::filled(width, height, beta))
    }

    pub fn width(&self) -> usize {
        self.beta.width()
    }

    pub fn height(&self) -> usize {
        self.beta.height()
    }

    pub fn values(&self) -> &[f64] {
        self.beta.values()
    }

    pub fn grid(&self) -> &FloatGrid {
        &self.beta
    }

    pub fn into_grid(self) -> FloatGrid {
        self.beta
    }

    /// `Σ h(β)` over all pixels in row-major order.
    pub fn payload_bits(&self) -> f64 {
        total_entropy(self.values())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub payload_bits: f64,
    pub beta_t: f64,
    pub max_outer_iters: usize,
    pub lambda_ratio_stop: f64,
    pub init_beta_max: f64,
    pub seed: u64,
    pub tolerance: PayloadTolerance,
    pub delta: f64,
}

impl OptimizerConfig {
    pub fn new(payload_bits: f64) -> Self {
        Self {
            payload_bits,
            beta_t: DEFAULT_BETA_T,
            max_outer_iters: 4,
            lambda_ratio_stop: 0.98,
            init_beta_max: 0.001,
            seed: 0,
            tolerance: PayloadTolerance::default(),
            delta: 1.0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, pixels: usize) -> Result<()> {
        let capacity = capacity_bits(pixels);
        if !(self.payload_bits > 0.0) || self.payload_bits >= capacity {
            return Err(Error::InfeasiblePayload {
                requested: self.payload_bits,
                capacity,
            });
        }
        if self.max_outer_iters == 0 {
            return Err(Error::InvalidParameter("at least one outer iteration is needed".into()));
        }
        if !(self.init_beta_max >= 0.0 && self.init_beta_max <= BETA_MAX) {
            return Err(Error::InvalidParameter(format!(
                "initial change probability bound {} outside [0, 1/3]",
                self.init_beta_max
            )));
        }
        Ok(())
    }
}

/// `Γ` and `Λ` of one tree centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoefficients {
    pub gamma: f64,
    pub lambda_coef: f64,
}

/// Correlation of the clique joining `center` to its neighbour in `dir`.
fn clique_rho(model: &ModelField, center: usize, neighbor: usize, dir: Direction) -> f64 {
    match dir {
        Direction::Up => model.rho_v.values()[neighbor],
        Direction::Down => model.rho_v.values()[center],
        Direction::Left => model.rho_h.values()[neighbor],
        Direction::Right => model.rho_h.values()[center],
    }
}

/// FIM of one clique of `tree`, with the tree centre in slot 2.
pub fn tree_clique_fim(
    tree: &CliqueTree,
    model: &ModelField,
    neighbor: usize,
    dir: Direction,
    delta: f64,
) -> Fim2 {
    let var = model.variance.values();
    let params = CliqueParams {
        sigma1: var[neighbor],
        sigma2: var[tree.center],
        rho: clique_rho(model, tree.center, neighbor, dir),
        delta,
    };
    fim_clique(&params)
}

pub fn tree_coefficients(
    tree: &CliqueTree,
    model: &ModelField,
    beta: &[f64],
    delta: f64,
) -> PixelCoefficients {
    let fi = fi_single(model.variance.values()[tree.center], delta);
    let mut active = 0.0;
    let mut gamma = 0.0;
    let mut lambda_coef = 0.0;
    for (dir, n, on) in tree.cliques() {
        if on {
            let f = tree_clique_fim(tree, model, n, dir, delta);
            active += 1.0;
            gamma += f.i22;
            lambda_coef += f.i12 * beta[n];
        }
    }
    gamma -= (active - 1.0) * fi;
    PixelCoefficients { gamma, lambda_coef }
}

/// Result of one constrained sublattice solve; `betas` align with the trees.
#[derive(Debug, Clone, PartialEq)]
pub struct SublatticeSolution {
    pub lambda: f64,
    pub betas: Vec<f64>,
    pub payload: f64,
    pub target: f64,
    pub iterations: usize,
}

/// Lagrange-multiplier search over pixels with precomputed coefficients.
pub fn solve_lambda(
    coefficients: &[PixelCoefficients],
    target_bits: f64,
    tolerance: &PayloadTolerance,
) -> Result<SublatticeSolution> {
    let found = search_payload(coefficients.len(), target_bits, tolerance, |lambda| {
        coefficients
            .par_iter()
            .map(|c| solve_beta_pixel(c.gamma, lambda, c.lambda_coef))
            .collect()
    })?;
    Ok(SublatticeSolution {
        lambda: found.parameter,
        betas: found.betas,
        payload: found.payload,
        target: target_bits,
        iterations: found.iterations,
    })
}

/// Solves one sublattice given the current β of the other one.
pub fn solve_lambda_sublattice(
    trees: &[CliqueTree],
    model: &ModelField,
    beta: &ChangeProbMap,
    target_bits: f64,
    tolerance: &PayloadTolerance,
    delta: f64,
) -> Result<SublatticeSolution> {
    let coefficients: Vec<PixelCoefficients> = trees
        .par_iter()
        .map(|t| tree_coefficients(t, model, beta.values(), delta))
        .collect();
    solve_lambda(&coefficients, target_bits, tolerance)
}

/// `Σ_trees D(T_s) - λ Σ h(β_s)` for the centres of `trees`.
pub fn sublattice_objective(
    trees: &[CliqueTree],
    model: &ModelField,
    beta: &[f64],
    lambda: f64,
    delta: f64,
) -> Result<f64> {
    let mut total = 0.0;
    for tree in trees {
        let mut nb = Vec::with_capacity(4);
        let mut th = Vec::with_capacity(4);
        let mut fims = Vec::with_capacity(4);
        for (dir, n, on) in tree.cliques() {
            nb.push(beta[n]);
            th.push(on);
            fims.push(tree_clique_fim(tree, model, n, dir, delta));
        }
        let fi = fi_single(model.variance.values()[tree.center], delta);
        let b = beta[tree.center];
        total += kl_tree(b, &nb, &th, &fims, fi)? - lambda * entropy_ternary(b);
    }
    Ok(total)
}

/// One row of the λ trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub lattice: Sublattice,
    pub lambda: f64,
    pub payload_error: f64,
}

impl TraceRecord {
    pub const CSV_HEADER: &'static str = "iter,lattice,lambda,payload_error";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{:e},{:e}",
            self.iter,
            self.lattice.label(),
            self.lambda,
            self.payload_error
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimization {
    pub beta: ChangeProbMap,
    pub trace: Vec<TraceRecord>,
    /// Whether the λ-ratio stopping rule fired.
    pub converged: bool,
    pub iterations: usize,
    pub trees_a: Vec<CliqueTree>,
    pub trees_b: Vec<CliqueTree>,
}

impl Optimization {
    /// Number of active cliques in each pixel's own tree.
    pub fn active_clique_map(&self) -> FloatGrid {
        let mut map = FloatGrid::zeros(self.beta.width(), self.beta.height());
        for t in self.trees_a.iter().chain(&self.trees_b) {
            map.values_mut()[t.center] = t.active_count() as f64;
        }
        map
    }

    /// `Σ h(β)` restricted to one sublattice.
    pub fn sublattice_payload(&self, which: Sublattice) -> f64 {
        let trees = match which {
            Sublattice::A => &self.trees_a,
            Sublattice::B => &self.trees_b,
        };
        trees.iter().map(|t| entropy_ternary(self.beta.values()[t.center])).sum()
    }
}

fn lambda_ratio(cur: f64, prev: f64) -> f64 {
    if cur == prev {
        1.0
    } else {
        cur / prev
    }
}

/// Alternating optimisation over the two sublattices.
///
/// `β^B` starts uniform in `[0, init_beta_max]`, `β^A` at [`BETA_MIN`]. Each
/// outer iteration reallocates the cliques from the current β, solves A with
/// B frozen and then B with A frozen. From the second iteration on the loop
/// stops once both `λ(k)/λ(k-1)` exceed `lambda_ratio_stop`.
pub fn alternate_optimize(
    model: &ModelField,
    partition: &SublatticePartition,
    config: &OptimizerConfig,
) -> Result<Optimization> {
    let (w, h) = (model.width(), model.height());
    let n = w * h;
    config.validate(n)?;
    let (mut trees_a, mut trees_b) = build_trees(partition, w, h)?;

    let mut beta = vec![BETA_MIN; n];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for &idx in &partition.b_indices {
        beta[idx] = rng.random::<f64>() * config.init_beta_max;
    }
    let target_a = config.payload_bits * trees_a.len() as f64 / n as f64;
    let target_b = config.payload_bits * trees_b.len() as f64 / n as f64;

    let mut trace = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=config.max_outer_iters {
        iterations = k;
        let current = ChangeProbMap::new(FloatGrid::new(w, h, beta.clone())?)?;
        allocate_cliques(&mut trees_a, &current, config.beta_t);
        allocate_cliques(&mut trees_b, &current, config.beta_t);

        let mut lambdas = [0.0; 2];
        for (slot, (trees, target, which)) in [
            (&trees_a, target_a, Sublattice::A),
            (&trees_b, target_b, Sublattice::B),
        ]
        .into_iter()
        .enumerate()
        {
            let frozen = ChangeProbMap::new(FloatGrid::new(w, h, beta.clone())?)?;
            let sol =
                solve_lambda_sublattice(trees, model, &frozen, target, &config.tolerance, config.delta)?;
            for (t, &b) in trees.iter().zip(&sol.betas) {
                beta[t.center] = b;
            }
            trace.push(TraceRecord {
                iter: k,
                lattice: which,
                lambda: sol.lambda,
                payload_error: sol.payload - target,
            });
            lambdas[slot] = sol.lambda;
        }

        if let Some((pa, pb)) = prev {
            let stop = config.lambda_ratio_stop;
            if lambda_ratio(lambdas[0], pa) > stop && lambda_ratio(lambdas[1], pb) > stop {
                converged = true;
                break;
            }
        }
        prev = Some((lambdas[0], lambdas[1]));
    }

    Ok(Optimization {
        beta: ChangeProbMap::new(FloatGrid::new(w, h, beta)?)?,
        trace,
        converged,
        iterations,
        trees_a,
        trees_b,
    })
}
