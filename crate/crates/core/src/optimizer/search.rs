use super::scalar::{entropy_ternary, BETA_MAX};
use crate::error::{Error, Result};

const BRACKET_LO: f64 = 1e-6;
const BRACKET_HI: f64 = 1e6;
const MAX_BISECTIONS: usize = 80;
const MAX_EXPANSIONS: usize = 2100;

/// Acceptance band of a payload search: `|Σh - target| <= max(relative *
/// target, absolute_bits)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayloadTolerance {
    pub relative: f64,
    pub absolute_bits: f64,
}

impl Default for PayloadTolerance {
    fn default() -> Self {
        Self {
            relative: 1e-6,
            absolute_bits: 0.1,
        }
    }
}

impl PayloadTolerance {
    pub fn bits(&self, target: f64) -> f64 {
        (self.relative * target).max(self.absolute_bits)
    }
}

/// Outcome of a payload search over a parameter `t` on which the payload is
/// nondecreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PayloadSearch {
    pub parameter: f64,
    pub betas: Vec<f64>,
    pub payload: f64,
    pub iterations: usize,
}

/// Sum of ternary entropies in slice order.
pub fn total_entropy(betas: &[f64]) -> f64 {
    betas.iter().map(|&b| entropy_ternary(b)).sum()
}

/// Capacity of `n` ternary pixels in bits.
pub fn capacity_bits(n: usize) -> f64 {
    n as f64 * 3f64.log2()
}

/// Finds `t` with `|Σh(β(t)) - target|` within tolerance, for a map `solve`
/// whose payload is nondecreasing in `t`. The bracket starts at
/// `[1e-6, 1e6]`, is widened by halving / doubling, and is then bisected
/// geometrically for at most 80 steps.
pub(crate) fn search_payload<F>(
    n: usize,
    target: f64,
    tolerance: &PayloadTolerance,
    solve: F,
) -> Result<PayloadSearch>
where
    F: Fn(f64) -> Vec<f64>,
{
    if !target.is_finite() || target < 0.0 {
        return Err(Error::InvalidParameter(format!("payload {target} must be finite and >= 0")));
    }
    let capacity = capacity_bits(n);
    let tol = tolerance.bits(target);
    if target > capacity + tol {
        return Err(Error::InfeasiblePayload {
            requested: target,
            capacity,
        });
    }
    if target >= capacity - tol {
        let betas = vec![BETA_MAX; n];
        let payload = total_entropy(&betas);
        return Ok(PayloadSearch {
            parameter: f64::INFINITY,
            betas,
            payload,
            iterations: 0,
        });
    }

    let eval = |t: f64| {
        let betas = solve(t);
        let payload = total_entropy(&betas);
        (betas, payload)
    };
    let done = |p: f64| (p - target).abs() <= tol;
    let found = |t: f64, (betas, payload): (Vec<f64>, f64), iterations| PayloadSearch {
        parameter: t,
        betas,
        payload,
        iterations,
    };

    let mut lo = BRACKET_LO;
    let mut at_lo = eval(lo);
    let mut steps = 0;
    while at_lo.1 > target {
        if done(at_lo.1) {
            return Ok(found(lo, at_lo, 0));
        }
        lo *= 0.5;
        steps += 1;
        if lo == 0.0 || steps > MAX_EXPANSIONS {
            return Err(Error::Unbracketable("payload stays above target as the multiplier shrinks"));
        }
        at_lo = eval(lo);
    }
    if done(at_lo.1) {
        return Ok(found(lo, at_lo, 0));
    }
    let mut hi = BRACKET_HI.max(lo);
    let mut at_hi = eval(hi);
    steps = 0;
    while at_hi.1 < target {
        if done(at_hi.1) {
            return Ok(found(hi, at_hi, 0));
        }
        hi *= 2.0;
        steps += 1;
        if !hi.is_finite() || steps > MAX_EXPANSIONS {
            return Err(Error::Unbracketable("payload stays below target as the multiplier grows"));
        }
        at_hi = eval(hi);
    }
    if done(at_hi.1) {
        return Ok(found(hi, at_hi, 0));
    }

    let mut best: Option<(f64, (Vec<f64>, f64))> = None;
    for it in 1..=MAX_BISECTIONS {
        let mid = (0.5 * (lo.ln() + hi.ln())).exp();
        let at_mid = eval(mid);
        if done(at_mid.1) {
            return Ok(found(mid, at_mid, it));
        }
        if at_mid.1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
        let better = best
            .as_ref()
            .is_none_or(|(_, (_, p))| (at_mid.1 - target).abs() < (p - target).abs());
        if better {
            best = Some((mid, at_mid));
        }
    }
    let (t, at) = best.expect("at least one bisection step");
    Ok(found(t, at, MAX_BISECTIONS))
}
