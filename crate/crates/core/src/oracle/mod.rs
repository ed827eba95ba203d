//! Brute-force reference computations for the clique model.
//!
//! Nothing here calls into [`crate::fim`] kernels: densities, precision
//! matrices, p.m.f.s and divergences are all evaluated from scratch, so the
//! closed forms can be checked against them.

mod quadrature;
mod verify;

pub use quadrature::{composite, gauss_legendre};
pub use verify::{
    perturbed_i12_kernel, verify, verify_with, CheckResult, FimKernel, VerifyReport, VERIFY_RHOS,
    VERIFY_SIGMAS,
};

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fim::{CliqueParams, Fim2};

/// Largest tolerated probability mass outside the `[-T, T]^2` grid.
pub const TAIL_EPSILON: f64 = 1e-8;
/// Nodes per Gauss-Legendre panel inside one quantisation cell.
const CELL_NODES: usize = 6;

/// Cell probabilities of a quantised clique on `i, j ∈ [-T, T]`; `i` indexes
/// pixel 1 and `j` pixel 2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedPmf2 {
    half_width: usize,
    delta: f64,
    probs: Vec<f64>,
}

impl QuantizedPmf2 {
    pub fn from_probs(half_width: usize, delta: f64, probs: Vec<f64>) -> Result<Self> {
        let side = 2 * half_width + 1;
        if probs.len() != side * side {
            return Err(Error::LengthMismatch("p.m.f. must hold (2T+1)^2 cells"));
        }
        if probs.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::Oracle("p.m.f. entries must be nonnegative".into()));
        }
        Ok(Self {
            half_width,
            delta,
            probs,
        })
    }

    pub fn half_width(&self) -> usize {
        self.half_width
    }

    pub fn side(&self) -> usize {
        2 * self.half_width + 1
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// `p_{i,j}`, zero outside the support.
    pub fn get(&self, i: isize, j: isize) -> f64 {
        let t = self.half_width as isize;
        if i < -t || i > t || j < -t || j > t {
            return 0.0;
        }
        self.probs[((i + t) as usize) * self.side() + (j + t) as usize]
    }

    fn coords(&self, k: usize) -> (isize, isize) {
        let t = self.half_width as isize;
        ((k / self.side()) as isize - t, (k % self.side()) as isize - t)
    }

    /// Second differences `Ω¹` (along pixel 1), `Ω²` (along pixel 2) and the
    /// mixed term `Ω³` at cell `(i, j)`.
    fn omegas(&self, i: isize, j: isize) -> (f64, f64, f64) {
        let p = |a, b| self.get(a, b);
        let c = p(i, j);
        let s1 = p(i - 1, j) + p(i + 1, j);
        let s2 = p(i, j - 1) + p(i, j + 1);
        let corners = p(i - 1, j - 1) + p(i - 1, j + 1) + p(i + 1, j - 1) + p(i + 1, j + 1);
        (s1 - 2.0 * c, s2 - 2.0 * c, corners - 2.0 * s1 - 2.0 * s2 + 4.0 * c)
    }
}

/// Bivariate zero-mean Gaussian in the oracle's own parametrisation.
#[derive(Debug, Clone, Copy)]
struct Gaussian2 {
    s1: f64,
    s2: f64,
    cov: f64,
    /// precision matrix entries
    g11: f64,
    g12: f64,
    g22: f64,
    norm: f64,
}

impl Gaussian2 {
    fn new(params: &CliqueParams) -> Result<Self> {
        let (s1, s2) = (params.sigma1, params.sigma2);
        if !(s1 > 0.0 && s2 > 0.0 && params.rho.abs() < 1.0 && params.delta > 0.0) {
            return Err(Error::Oracle(format!("degenerate clique parameters {params:?}")));
        }
        let cov = params.rho * (s1 * s2).sqrt();
        let det = s1 * s2 - cov * cov;
        Ok(Self {
            s1,
            s2,
            cov,
            g11: s2 / det,
            g12: -cov / det,
            g22: s1 / det,
            norm: 1.0 / (2.0 * PI * det.sqrt()),
        })
    }

    fn density(&self, x1: f64, x2: f64) -> f64 {
        let q = self.g11 * x1 * x1 + 2.0 * self.g12 * x1 * x2 + self.g22 * x2 * x2;
        self.norm * (-0.5 * q).exp()
    }

    /// `x = L z` with `L` the lower Cholesky factor of the covariance.
    fn from_white(&self, z1: f64, z2: f64) -> (f64, f64) {
        let l11 = self.s1.sqrt();
        let l21 = self.cov / l11;
        let l22 = (self.s2 - l21 * l21).sqrt();
        (l11 * z1, l21 * z1 + l22 * z2)
    }

    /// `E[g(X)]` by tensor Gauss-Legendre in whitened coordinates over
    /// `[-10, 10]^2`.
    fn expect(&self, g: impl Fn(f64, f64) -> f64 + Sync) -> f64 {
        let rule = composite(-10.0, 10.0, 40, 8);
        let phi = |z: f64| (-0.5 * z * z).exp() / (2.0 * PI).sqrt();
        rule.par_iter()
            .map(|&(z1, w1)| {
                let mut acc = 0.0;
                for &(z2, w2) in &rule {
                    let (x1, x2) = self.from_white(z1, z2);
                    acc += w2 * phi(z2) * g(x1, x2);
                }
                w1 * phi(z1) * acc
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum()
    }
}

/// Smallest half-width with `T Δ >= 8 max(√σ1, √σ2)`.
pub fn default_half_width(params: &CliqueParams) -> usize {
    (8.0 * params.sigma1.max(params.sigma2).sqrt() / params.delta).ceil() as usize
}

fn cell_rule(i: isize, delta: f64, panels: usize) -> Vec<(f64, f64)> {
    let c = i as f64 * delta;
    composite(c - 0.5 * delta, c + 0.5 * delta, panels, CELL_NODES)
}

/// Cell probabilities by composite Gauss-Legendre integration of the
/// density over every `Δ x Δ` cell. Each axis of a cell is split into
/// `ceil(2Δ / √(σ_axis (1-ρ²)))` panels, at most half a conditional
/// standard deviation wide.
pub fn cover_pmf(params: &CliqueParams, half_width: usize) -> Result<QuantizedPmf2> {
    let g = Gaussian2::new(params)?;
    let delta = params.delta;
    let shrink = 1.0 - params.rho * params.rho;
    let panels = |s: f64| ((2.0 * delta / (s * shrink).sqrt()).ceil() as usize).max(1);
    let (m1, m2) = (panels(params.sigma1), panels(params.sigma2));
    let t = half_width as isize;
    let rules2: Vec<Vec<(f64, f64)>> = (-t..=t).map(|j| cell_rule(j, delta, m2)).collect();
    let probs: Vec<f64> = (-t..=t)
        .into_par_iter()
        .flat_map_iter(|i| {
            let r1 = cell_rule(i, delta, m1);
            let g = &g;
            rules2.iter().map(move |r2| {
                let mut acc = 0.0;
                for &(x1, w1) in &r1 {
                    let mut row = 0.0;
                    for &(x2, w2) in r2 {
                        row += w2 * g.density(x1, x2);
                    }
                    acc += w1 * row;
                }
                acc
            })
        })
        .collect();
    let pmf = QuantizedPmf2::from_probs(half_width, delta, probs)?;
    check_tail(&pmf)?;
    Ok(pmf)
}

/// Mean-value-theorem approximation `p = Δ² f(iΔ, jΔ)`.
pub fn cover_pmf_midpoint(params: &CliqueParams, half_width: usize) -> Result<QuantizedPmf2> {
    let g = Gaussian2::new(params)?;
    let delta = params.delta;
    let t = half_width as isize;
    let mut probs = Vec::with_capacity((2 * half_width + 1).pow(2));
    for i in -t..=t {
        for j in -t..=t {
            probs.push(delta * delta * g.density(i as f64 * delta, j as f64 * delta));
        }
    }
    let pmf = QuantizedPmf2::from_probs(half_width, delta, probs)?;
    check_tail(&pmf)?;
    Ok(pmf)
}

fn check_tail(pmf: &QuantizedPmf2) -> Result<()> {
    let tail = 1.0 - pmf.total();
    if tail > TAIL_EPSILON {
        return Err(Error::Oracle(format!(
            "tail mass {tail:e} beyond half-width {}; enlarge the support",
            pmf.half_width
        )));
    }
    Ok(())
}

/// Stego p.m.f. of the symmetric ternary model applied independently to
/// both pixels with change probabilities `beta1`, `beta2`.
pub fn stego_pmf(cover: &QuantizedPmf2, beta1: f64, beta2: f64) -> QuantizedPmf2 {
    let stay1 = 1.0 - 2.0 * beta1;
    let stay2 = 1.0 - 2.0 * beta2;
    let probs = (0..cover.probs.len())
        .map(|k| {
            let (i, j) = cover.coords(k);
            let p = |a, b| cover.get(a, b);
            p(i, j) * stay1 * stay2
                + (p(i - 1, j) + p(i + 1, j)) * beta1 * stay2
                + (p(i, j - 1) + p(i, j + 1)) * stay1 * beta2
                + (p(i - 1, j - 1) + p(i - 1, j + 1) + p(i + 1, j - 1) + p(i + 1, j + 1))
                    * beta1
                    * beta2
        })
        .collect();
    QuantizedPmf2 {
        half_width: cover.half_width,
        delta: cover.delta,
        probs,
    }
}

/// `Σ p log2(p/q)`.
pub fn kl_exact(p: &QuantizedPmf2, q: &QuantizedPmf2) -> Result<f64> {
    if p.probs.len() != q.probs.len() {
        return Err(Error::LengthMismatch("p.m.f.s must share the support"));
    }
    let mut acc = 0.0;
    for (&a, &b) in p.probs.iter().zip(&q.probs) {
        if a > 0.0 {
            if !(b > 0.0) {
                return Err(Error::Oracle("q vanishes where p does not".into()));
            }
            acc += a * (a / b).ln();
        }
    }
    Ok(acc / LN_2)
}

/// `x - ln(1 + x)`, accurate for small `|x|`.
fn x_minus_log1p(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        let mut term = x * x;
        let mut acc = 0.0;
        for k in 2..=14 {
            acc += if k % 2 == 0 { term } else { -term } / k as f64;
            term *= x;
        }
        acc
    } else {
        x - x.ln_1p()
    }
}

/// `KL(p || stego_pmf(p, β1, β2))` in bits, evaluated from the exact
/// perturbation `q - p = β1 Ω¹ + β2 Ω² + β1 β2 Ω³` so that very small
/// divergences keep full relative precision.
pub fn kl_exact_beta(cover: &QuantizedPmf2, beta1: f64, beta2: f64) -> f64 {
    let (terms, mass) = (0..cover.probs.len())
        .into_par_iter()
        .map(|k| {
            let p = cover.probs[k];
            if p <= 0.0 {
                return (0.0, 0.0);
            }
            let (i, j) = cover.coords(k);
            let (o1, o2, o3) = cover.omegas(i, j);
            let d = beta1 * o1 + beta2 * o2 + beta1 * beta2 * o3;
            (p * x_minus_log1p(d / p), d)
        })
        .collect::<Vec<(f64, f64)>>()
        .into_iter()
        .fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    (terms - mass) / LN_2
}

/// Fisher information from the discrete sums `Σ Ω^a Ω^b / p` on a given
/// p.m.f.
pub fn fim_from_pmf(pmf: &QuantizedPmf2) -> Fim2 {
    let mut f = Fim2::ZERO;
    for k in 0..pmf.probs.len() {
        let p = pmf.probs[k];
        if p <= 0.0 {
            continue;
        }
        let (i, j) = pmf.coords(k);
        let (o1, o2, _) = pmf.omegas(i, j);
        f.i11 += o1 * o1 / p;
        f.i12 += o1 * o2 / p;
        f.i22 += o2 * o2 / p;
    }
    f
}

/// Discrete Fisher information of the quantised clique on `[-T, T]^2`.
pub fn fim_numeric(params: &CliqueParams, half_width: usize) -> Result<Fim2> {
    Ok(fim_from_pmf(&cover_pmf(params, half_width)?))
}

/// Continuous-limit Fisher information: `Δ⁴ E[a_k a_l]` with
/// `a_1 = (γ11 x1 + γ12 x2)² - γ11` and `a_2 = (γ12 x1 + γ22 x2)² - γ22`,
/// evaluated by quadrature.
pub fn fim_quadrature(params: &CliqueParams) -> Result<Fim2> {
    let g = Gaussian2::new(params)?;
    let d4 = params.delta.powi(4);
    let a1 = |x1: f64, x2: f64| (g.g11 * x1 + g.g12 * x2).powi(2) - g.g11;
    let a2 = |x1: f64, x2: f64| (g.g12 * x1 + g.g22 * x2).powi(2) - g.g22;
    Ok(Fim2 {
        i11: d4 * g.expect(|x, y| a1(x, y) * a1(x, y)),
        i12: d4 * g.expect(|x, y| a1(x, y) * a2(x, y)),
        i22: d4 * g.expect(|x, y| a2(x, y) * a2(x, y)),
    })
}

/// One-sided second-order finite-difference Hessian of
/// [`kl_exact_beta`] at `β = 0`, in bits.
pub fn hessian_fd_pmf(cover: &QuantizedPmf2, h: f64) -> Result<[[f64; 2]; 2]> {
    if !(h > 0.0 && 3.0 * h <= 1.0 / 3.0) {
        return Err(Error::Oracle(format!("step {h} leaves the feasible set")));
    }
    let f = |a: usize, b: usize| kl_exact_beta(cover, a as f64 * h, b as f64 * h);
    let h2 = h * h;
    // (2 f0 - 5 f1 + 4 f2 - f3) / h²
    let d11 = (2.0 * f(0, 0) - 5.0 * f(1, 0) + 4.0 * f(2, 0) - f(3, 0)) / h2;
    let d22 = (2.0 * f(0, 0) - 5.0 * f(0, 1) + 4.0 * f(0, 2) - f(0, 3)) / h2;
    // tensor product of (-3 f0 + 4 f1 - f2) / 2h
    let c = [-3.0, 4.0, -1.0];
    let mut d12 = 0.0;
    for (a, ca) in c.iter().enumerate() {
        for (b, cb) in c.iter().enumerate() {
            d12 += ca * cb * f(a, b);
        }
    }
    d12 /= 4.0 * h2;
    Ok([[d11, d12], [d12, d22]])
}

pub fn hessian_fd(params: &CliqueParams, h: f64) -> Result<[[f64; 2]; 2]> {
    let pmf = cover_pmf(params, default_half_width(params))?;
    hessian_fd_pmf(&pmf, h)
}

/// One moment compared against its closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub name: &'static str,
    pub quadrature: f64,
    pub closed_form: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IsserlisReport {
    pub moments: Vec<MomentCheck>,
    pub tolerance: f64,
}

impl IsserlisReport {
    pub fn max_error(&self) -> f64 {
        self.moments.iter().map(|m| m.error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_error() <= self.tolerance
    }
}

/// Second and fourth moments by quadrature against the Isserlis forms.
/// Errors are relative, with the moment's natural scale `√σ1^a √σ2^b` as a
/// floor so vanishing moments are compared absolutely.
pub fn isserlis_check(params: &CliqueParams) -> Result<IsserlisReport> {
    let g = Gaussian2::new(params)?;
    let (s1, s2, c) = (g.s1, g.s2, g.cov);
    let cases: [(&'static str, i32, i32, f64); 6] = [
        ("E[X1^2]", 2, 0, s1),
        ("E[X2^2]", 0, 2, s2),
        ("E[X1 X2]", 1, 1, c),
        ("E[X1^4]", 4, 0, 3.0 * s1 * s1),
        ("E[X1^3 X2]", 3, 1, 3.0 * s1 * c),
        ("E[X1^2 X2^2]", 2, 2, s1 * s2 + 2.0 * c * c),
    ];
    let moments = cases
        .iter()
        .map(|&(name, a, b, closed_form)| {
            let quadrature = g.expect(|x, y| x.powi(a) * y.powi(b));
            let scale = s1.sqrt().powi(a) * s2.sqrt().powi(b);
            MomentCheck {
                name,
                quadrature,
                closed_form,
                error: (quadrature - closed_form).abs() / closed_form.abs().max(scale),
            }
        })
        .collect();
    Ok(IsserlisReport {
        moments,
        tolerance: 0.01,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erf;

    fn unit(rho: f64) -> CliqueParams {
        CliqueParams::new(1.0, 1.0, rho)
    }

    /// 1-D cell probabilities of N(0, σ) from the error function.
    fn cell_1d(i: isize, sigma: f64) -> f64 {
        let cdf = |x: f64| 0.5 * (1.0 + erf(x / (2.0 * sigma).sqrt()));
        cdf(i as f64 + 0.5) - cdf(i as f64 - 0.5)
    }

    #[test]
    fn independent_pmf_factorises() {
        let params = CliqueParams::new(2.0, 0.7, 0.0);
        let t = default_half_width(&params);
        let p = cover_pmf(&params, t).unwrap();
        let t = t as isize;
        for i in -t..=t {
            for j in -t..=t {
                let expect = cell_1d(i, 2.0) * cell_1d(j, 0.7);
                assert!((p.get(i, j) - expect).abs() <= 1e-10);
            }
        }
        let q = cover_pmf(&unit(0.0), 8).unwrap();
        assert!((q.get(0, 0) - 0.38292f64.powi(2)).abs() <= 1e-4);
        assert!((q.get(0, 0) - 0.146631496308).abs() <= 1e-10);
    }

    #[test]
    fn pmf_is_centrally_symmetric() {
        let params = CliqueParams::new(3.0, 1.5, -0.6);
        let p = cover_pmf(&params, default_half_width(&params)).unwrap();
        let t = p.half_width() as isize;
        for i in -t..=t {
            for j in -t..=t {
                assert!((p.get(i, j) - p.get(-i, -j)).abs() <= 1e-15);
            }
        }
        assert!(p.total() >= 1.0 - TAIL_EPSILON && p.total() <= 1.0 + 1e-12);
    }

    #[test]
    fn narrow_support_is_rejected() {
        assert!(cover_pmf(&CliqueParams::new(25.0, 25.0, 0.0), 10).is_err());
    }

    #[test]
    fn midpoint_mode_approximates_cells() {
        let l1 = |s: f64| {
            let params = CliqueParams::new(s, s, 0.3);
            let t = default_half_width(&params);
            let a = cover_pmf(&params, t).unwrap();
            let b = cover_pmf_midpoint(&params, t).unwrap();
            a.probs().iter().zip(b.probs()).map(|(x, y)| (x - y).abs()).sum::<f64>()
        };
        let (coarse, fine) = (l1(25.0), l1(100.0));
        assert!(coarse <= 5e-3);
        // the midpoint error shrinks like Δ²/σ
        assert!(fine <= coarse / 3.0);
    }

    #[test]
    fn stego_identity_and_mass() {
        let p = cover_pmf(&unit(0.4), 8).unwrap();
        assert_eq!(stego_pmf(&p, 0.0, 0.0), p);
        for (b1, b2) in [(0.01, 0.2), (1.0 / 3.0, 0.05), (0.3, 0.3)] {
            let q = stego_pmf(&p, b1, b2);
            assert!((q.total() - p.total()).abs() <= 1e-12);
            assert!(q.probs().iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn point_mass_spreads_uniformly() {
        let mut probs = vec![0.0; 25];
        probs[12] = 1.0;
        let p = QuantizedPmf2::from_probs(2, 1.0, probs).unwrap();
        let q = stego_pmf(&p, 1.0 / 3.0, 1.0 / 3.0);
        for i in -2..=2isize {
            for j in -2..=2isize {
                let expect = if i.abs() <= 1 && j.abs() <= 1 { 1.0 / 9.0 } else { 0.0 };
                assert!((q.get(i, j) - expect).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn exact_kl_basic_laws() {
        let p = cover_pmf(&unit(0.2), 8).unwrap();
        assert_eq!(kl_exact(&p, &p).unwrap(), 0.0);
        assert_eq!(kl_exact_beta(&p, 0.0, 0.0), 0.0);
        let mut prev = 0.0;
        for b in [0.001, 0.01, 0.05, 0.1, 0.2, 1.0 / 3.0] {
            let direct = kl_exact(&p, &stego_pmf(&p, b, 0.02)).unwrap();
            let stable = kl_exact_beta(&p, b, 0.02);
            assert!(direct >= 0.0 && stable > prev);
            assert!((direct - stable).abs() <= 1e-9 * (1.0 + stable));
            prev = stable;
        }
        let z = QuantizedPmf2::from_probs(1, 1.0, vec![0.0; 9]).unwrap();
        let mut one = vec![0.0; 9];
        one[4] = 1.0;
        let o = QuantizedPmf2::from_probs(1, 1.0, one).unwrap();
        assert!(kl_exact(&o, &z).is_err());
    }

    #[test]
    fn exact_kl_unit_clique() {
        // frozen from an independent NumPy evaluation (12-point GL per cell)
        let p = cover_pmf(&unit(0.0), 8).unwrap();
        let kl = kl_exact_beta(&p, 0.01, 0.01);
        assert!((kl - 2.528563366e-4).abs() <= 1e-12);
        // within 10% of the quadratic model 1e-4·(2+2)/(2 ln 2)
        let quad = 4e-4 / (2.0 * LN_2);
        assert!((kl - quad).abs() / quad <= 0.13);
    }

    #[test]
    fn discrete_fim_reference_values() {
        // frozen from an independent NumPy evaluation
        let f = fim_numeric(&unit(0.0), 8).unwrap();
        assert!((f.i11 - 1.8454715811).abs() <= 1e-8);
        assert!((f.i22 - 1.8454715811).abs() <= 1e-8);
        assert!(f.i12.abs() <= 1e-12);
        let g = fim_numeric(&unit(0.5), 8).unwrap();
        assert!((g.i11 - 3.140925231).abs() <= 1e-8);
        assert!((g.i12 - 0.614964132).abs() <= 1e-8);
    }

    #[test]
    fn discrete_fim_approaches_closed_form_for_coarse_quantisation() {
        let closed = |s: f64, r: f64| 2.0 / (s * s * (1.0 - r * r).powi(2));
        let mut prev = f64::INFINITY;
        for s in [1.0, 4.0, 25.0, 100.0] {
            let params = CliqueParams::new(s, s, 0.3);
            let f = fim_numeric(&params, default_half_width(&params)).unwrap();
            let err = (f.i11 - closed(s, 0.3)).abs() / closed(s, 0.3);
            assert!(err < prev);
            prev = err;
        }
        assert!(prev <= 0.01);
        // scaling law σ1 x4 -> i11 / 16 in the fine-quantisation regime
        let a = fim_numeric(&CliqueParams::new(25.0, 25.0, 0.0), 40).unwrap();
        let b = fim_numeric(&CliqueParams::new(100.0, 25.0, 0.0), 80).unwrap();
        assert!((b.i11 * 16.0 / a.i11 - 1.0).abs() <= 0.01);
    }

    #[test]
    fn continuous_integrals_match_isserlis_closed_form() {
        for (s1, s2, r) in [(1.0, 1.0, 0.0), (1.0, 1.0, 0.5), (0.5, 100.0, -0.9), (4.0, 25.0, 0.6)] {
            let f = fim_quadrature(&CliqueParams::new(s1, s2, r)).unwrap();
            let k = (1.0 - r * r) * (1.0f64 - r * r);
            let e11 = 2.0 / (s1 * s1 * k);
            let e12 = 2.0 * r * r / (s1 * s2 * k);
            let e22 = 2.0 / (s2 * s2 * k);
            assert!((f.i11 - e11).abs() <= 1e-9 * e11);
            assert!((f.i22 - e22).abs() <= 1e-9 * e22);
            assert!((f.i12 - e12).abs() <= 1e-9 * e11.max(e22));
        }
        let f = fim_quadrature(&unit(0.5)).unwrap();
        assert!((f.i11 - 3.5556).abs() <= 1e-3 && (f.i12 - 0.8889).abs() <= 1e-3);
    }

    #[test]
    fn hessian_matches_discrete_fim() {
        let p = cover_pmf(&unit(0.0), 8).unwrap();
        let h = hessian_fd_pmf(&p, 1e-3).unwrap();
        let f = fim_from_pmf(&p);
        assert!((h[0][0] - f.i11 / LN_2).abs() / (f.i11 / LN_2) <= 0.02);
        assert!((h[1][1] - f.i22 / LN_2).abs() / (f.i22 / LN_2) <= 0.02);
        assert!(h[0][1].abs() <= 0.05);
        assert_eq!(h[0][1], h[1][0]);
        // ≈ 1.8455 / ln 2
        assert!((h[0][0] - 2.6625).abs() <= 0.01);
        assert!(hessian_fd_pmf(&p, 0.2).is_err());

        let q = cover_pmf(&unit(0.6), 8).unwrap();
        let h = hessian_fd_pmf(&q, 1e-3).unwrap();
        let f = fim_from_pmf(&q);
        assert!((h[0][1] - f.i12 / LN_2).abs() / (f.i12 / LN_2) <= 0.02);
    }

    #[test]
    fn isserlis_examples() {
        let r = isserlis_check(&unit(0.0)).unwrap();
        assert!(r.passed());
        let m = |r: &IsserlisReport, n: &str| r.moments.iter().find(|m| m.name == n).unwrap().quadrature;
        assert!((m(&r, "E[X1^2 X2^2]") - 1.0).abs() <= 1e-10);
        assert!((m(&r, "E[X1^4]") - 3.0).abs() <= 1e-10);
        let r = isserlis_check(&unit(0.5)).unwrap();
        assert!((m(&r, "E[X1^2 X2^2]") - 1.5).abs() <= 1e-10);
        assert!(isserlis_check(&CliqueParams::new(100.0, 0.5, -0.9)).unwrap().passed());
    }

    #[test]
    fn mixed_stego_term_has_no_net_mass() {
        // the β1β2 coefficient Ω³ sums to zero away from the border
        let mut probs = vec![0.0; 49];
        for (k, v) in probs.iter_mut().enumerate() {
            let (i, j) = ((k / 7) as isize - 3, (k % 7) as isize - 3);
            if i.abs() <= 1 && j.abs() <= 1 {
                *v = (1 + k % 5) as f64 / 32.0;
            }
        }
        let p = QuantizedPmf2::from_probs(3, 1.0, probs).unwrap();
        let total: f64 = (0..49).map(|k| {
            let (i, j) = p.coords(k);
            p.omegas(i, j).2
        }).sum();
        assert!(total.abs() <= 1e-12);
    }
}
