use std::f64::consts::LN_2;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::{
    cover_pmf, default_half_width, fim_from_pmf, fim_quadrature, hessian_fd_pmf, isserlis_check,
    kl_exact_beta, stego_pmf,
};
use crate::fim::{fi_single, kl_clique, kl_tree, CliqueParams, Fim2};

pub const VERIFY_SIGMAS: [f64; 5] = [0.5, 1.0, 4.0, 25.0, 100.0];
pub const VERIFY_RHOS: [f64; 7] = [0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9];

/// A closed-form clique FIM implementation under test.
pub type FimKernel = fn(&CliqueParams) -> Fim2;

/// [`crate::fim::fim_clique`] with `i12` inflated by 5%.
pub fn perturbed_i12_kernel(params: &CliqueParams) -> Fim2 {
    let f = crate::fim::fim_clique(params);
    Fim2 {
        i12: 1.05 * f.i12,
        ..f
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    pub max_error: f64,
    pub tolerance: f64,
    /// Informational checks are reported but never fail the battery.
    pub gating: bool,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.gating).all(CheckResult::passed)
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<34} {:>6} {:>6} {:>12} {:>10}  status",
            "check", "cases", "fail", "max_error", "tolerance"
        );
        for c in &self.checks {
            let status = match (c.gating, c.passed()) {
                (true, true) => "PASS",
                (true, false) => "FAIL",
                (false, true) => "info ok",
                (false, false) => "info",
            };
            let _ = writeln!(
                out,
                "{:<34} {:>6} {:>6} {:>12.3e} {:>10.1e}  {}",
                c.name, c.cases, c.failures, c.max_error, c.tolerance, status
            );
        }
        out
    }
}

/// `|a - b| / max(|b|, floor)`.
fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Entrywise relative error, with `floor_frac·√(i11 i22)` as the floor of
/// the off-diagonal entry.
fn fim_error(a: &Fim2, b: &Fim2, floor_frac: f64) -> f64 {
    let floor = floor_frac * (b.i11 * b.i22).sqrt();
    rel(a.i11, b.i11, 0.0)
        .max(rel(a.i22, b.i22, 0.0))
        .max(rel(a.i12, b.i12, floor))
}

#[derive(Default, Clone, Copy)]
struct Tally {
    cases: usize,
    failures: usize,
    max_error: f64,
}

impl Tally {
    fn add(&mut self, err: f64, tol: f64) {
        self.cases += 1;
        if !(err <= tol) {
            self.failures += 1;
        }
        if err > self.max_error || err.is_nan() {
            self.max_error = err;
        }
    }

    fn merge(mut self, o: Tally) -> Tally {
        self.cases += o.cases;
        self.failures += o.failures;
        if o.max_error > self.max_error || o.max_error.is_nan() {
            self.max_error = o.max_error;
        }
        self
    }
}

/// Smallest conditional variance `min(σ1, σ2)·(1 − ρ²)` at which a
/// stencil of width `1e-3` stays inside the quadratic regime of every cell.
pub const FD_RESOLVED_MIN_VARIANCE: f64 = 0.5;

const N_CHECKS: usize = 8;

const CHECKS: [(&str, f64, bool); N_CHECKS] = [
    ("closed_form_vs_continuous_integral", 0.01, true),
    ("fd_hessian_vs_discrete_fim", 0.02, true),
    ("isserlis_moments", 0.01, true),
    ("tree_kl_single_clique", 1e-12, true),
    ("stego_pmf_mass", 1e-8, true),
    ("discrete_fim_vs_closed_form", 0.01, false),
    ("quadratic_kl_vs_exact", 0.10, false),
    ("fd_hessian_vs_discrete_fim_all", 0.02, false),
];

fn run_case(kernel: FimKernel, params: &CliqueParams) -> [Tally; N_CHECKS] {
    let mut t = [Tally::default(); N_CHECKS];
    let closed = kernel(params);

    match fim_quadrature(params) {
        Ok(q) => t[0].add(fim_error(&closed, &q, 1e-9), CHECKS[0].1),
        Err(_) => t[0].add(f64::INFINITY, CHECKS[0].1),
    }

    let pmf = match cover_pmf(params, default_half_width(params)) {
        Ok(p) => p,
        Err(_) => {
            for k in [1, 4, 5, 6, 7] {
                t[k].add(f64::INFINITY, CHECKS[k].1);
            }
            return t;
        }
    };
    let discrete = fim_from_pmf(&pmf);
    match hessian_fd_pmf(&pmf, 1e-3) {
        Ok(h) => {
            let hf = Fim2 {
                i11: h[0][0] * LN_2,
                i12: h[0][1] * LN_2,
                i22: h[1][1] * LN_2,
            };
            let err = fim_error(&hf, &discrete, 1e-3);
            if params.sigma1.min(params.sigma2) * (1.0 - params.rho * params.rho)
                >= FD_RESOLVED_MIN_VARIANCE
            {
                t[1].add(err, CHECKS[1].1);
            }
            t[7].add(err, CHECKS[7].1);
        }
        Err(_) => {
            t[1].add(f64::INFINITY, CHECKS[1].1);
            t[7].add(f64::INFINITY, CHECKS[7].1);
        }
    }

    match isserlis_check(params) {
        Ok(r) => t[2].add(r.max_error(), CHECKS[2].1),
        Err(_) => t[2].add(f64::INFINITY, CHECKS[2].1),
    }

    let fi = fi_single(params.sigma2, params.delta);
    for (bn, bs) in [(0.01, 0.02), (0.2, 0.05)] {
        let tree = kl_tree(bs, &[0.3, bn], &[false, true], &[Fim2::ZERO, closed], fi);
        let single = kl_clique(bn, bs, &closed);
        let err = match tree {
            Ok(v) => rel(v, single, f64::MIN_POSITIVE),
            Err(_) => f64::INFINITY,
        };
        t[3].add(err, CHECKS[3].1);
    }

    for (b1, b2) in [(0.05, 0.05), (1.0 / 3.0, 0.01)] {
        let q = stego_pmf(&pmf, b1, b2);
        t[4].add((q.total() - pmf.total()).abs(), CHECKS[4].1);
    }

    t[5].add(fim_error(&discrete, &closed, 1e-9), CHECKS[5].1);

    for b in [0.005, 0.01, 0.02] {
        let exact = kl_exact_beta(&pmf, b, b);
        t[6].add(rel(kl_clique(b, b, &closed), exact, 0.0), CHECKS[6].1);
    }
    t
}

/// Runs the battery on the default parameter lattice.
pub fn verify(kernel: FimKernel) -> VerifyReport {
    verify_with(kernel, &VERIFY_SIGMAS, &VERIFY_RHOS)
}

/// Runs the battery on every `(σ1, σ2, ρ)` with `Δ = 1`.
pub fn verify_with(kernel: FimKernel, sigmas: &[f64], rhos: &[f64]) -> VerifyReport {
    let mut cases = Vec::new();
    for &s1 in sigmas {
        for &s2 in sigmas {
            for &r in rhos {
                cases.push(CliqueParams::new(s1, s2, r));
            }
        }
    }
    let tallies: Vec<[Tally; N_CHECKS]> = cases.par_iter().map(|p| run_case(kernel, p)).collect();
    let mut total = [Tally::default(); N_CHECKS];
    for t in tallies {
        for k in 0..N_CHECKS {
            total[k] = total[k].merge(t[k]);
        }
    }
    VerifyReport {
        checks: CHECKS
            .iter()
            .zip(total)
            .map(|(&(name, tolerance, gating), t)| CheckResult {
                name,
                cases: t.cases,
                failures: t.failures,
                max_error: t.max_error,
                tolerance,
                gating,
            })
            .collect(),
    }
}
