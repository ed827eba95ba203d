use std::f64::consts::LN_2;

/// Numerical floor on change probabilities; keeps `ln((1-2β)/β)` finite.
pub const BETA_MIN: f64 = 1e-9;
pub const BETA_MAX: f64 = 1.0 / 3.0;

const RESIDUAL_TOL: f64 = 1e-10;
const INTERVAL_TOL: f64 = 1e-12;
const MAX_STEPS: usize = 200;
const SCAN_POINTS: usize = 64;

/// Ternary embedding entropy in bits,
/// `h(β) = -2β log2 β - (1-2β) log2(1-2β)`, with `0 log 0 = 0`.
pub fn entropy_ternary(beta: f64) -> f64 {
    let xlx = |x: f64| if x > 0.0 { x * x.ln() } else { 0.0 };
    -(2.0 * xlx(beta) + xlx(1.0 - 2.0 * beta)) / LN_2
}

/// Stationarity condition of the per-pixel Lagrangian,
/// `Γβ + Λ - 2λ ln((1-2β)/β)`.
pub fn stationarity_residual(beta: f64, gamma: f64, lambda_coef: f64, lagrange: f64) -> f64 {
    gamma * beta + lambda_coef - 2.0 * lagrange * ((1.0 - 2.0 * beta) / beta).ln()
}

fn residual_slope(beta: f64, gamma: f64, lagrange: f64) -> f64 {
    gamma + 2.0 * lagrange / (beta * (1.0 - 2.0 * beta))
}

/// Root of [`stationarity_residual`] in `[BETA_MIN, 1/3]`.
///
/// For `Γ >= 0` the residual is strictly increasing, so the root is bracketed
/// by the two ends (or clamped to them) and refined by Newton steps that fall
/// back to bisection whenever they leave the bracket. For `Γ < 0` a
/// logarithmic sign scan locates the first crossing first.
pub fn solve_beta_pixel(gamma: f64, lagrange: f64, lambda_coef: f64) -> f64 {
    let f = |b: f64| stationarity_residual(b, gamma, lambda_coef, lagrange);
    let (mut lo, mut hi) = (BETA_MIN, BETA_MAX);
    let (f_lo, f_hi) = (f(lo), f(hi));
    if gamma >= 0.0 {
        if f_hi <= 0.0 {
            return BETA_MAX;
        }
        if f_lo >= 0.0 {
            return BETA_MIN;
        }
    } else {
        match sign_scan(&f) {
            Some((a, b)) => {
                lo = a;
                hi = b;
            }
            None if f_hi <= 0.0 => return BETA_MAX,
            None => return BETA_MIN,
        }
    }
    refine(&f, |b| residual_slope(b, gamma, lagrange), lo, hi)
}

/// First sub-interval of a log-spaced grid on which the residual goes from
/// negative to non-negative.
fn sign_scan(f: &impl Fn(f64) -> f64) -> Option<(f64, f64)> {
    let (a, b) = (BETA_MIN.ln(), BETA_MAX.ln());
    let point = |k: usize| {
        if k == SCAN_POINTS {
            BETA_MAX
        } else {
            (a + (b - a) * k as f64 / SCAN_POINTS as f64).exp()
        }
    };
    let mut prev = point(0);
    let mut f_prev = f(prev);
    for k in 1..=SCAN_POINTS {
        let cur = point(k);
        let f_cur = f(cur);
        if f_prev < 0.0 && f_cur >= 0.0 {
            return Some((prev, cur));
        }
        prev = cur;
        f_prev = f_cur;
    }
    None
}

fn refine(f: &impl Fn(f64) -> f64, slope: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut x = 0.5 * (lo + hi);
    for _ in 0..MAX_STEPS {
        let fx = f(x);
        if fx.abs() <= RESIDUAL_TOL {
            return x;
        }
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if hi - lo <= INTERVAL_TOL {
            return 0.5 * (lo + hi);
        }
        let d = slope(x);
        let newton = x - fx / d;
        x = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Plain bisection on an increasing function.
    fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if f(m) < 0.0 {
                lo = m;
            } else {
                hi = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn entropy_values() {
        assert_eq!(entropy_ternary(0.0), 0.0);
        assert!((entropy_ternary(1.0 / 3.0) - 3f64.log2()).abs() <= 1e-15);
        assert!((entropy_ternary(1.0 / 3.0) - 1.58496).abs() <= 1e-5);
        // -0.2 log2 0.1 - 0.8 log2 0.8
        let direct = 0.2 * 10f64.log2() - 0.8 * 0.8f64.log2();
        assert!((entropy_ternary(0.1) - direct).abs() <= 1e-15);
        assert!((entropy_ternary(0.1) - 0.92193).abs() <= 1e-5);
    }

    #[test]
    fn residual_plug_in() {
        let (g, l) = (3.7, 0.4);
        assert!((stationarity_residual(1.0 / 3.0, g, l, 5.0) - (g / 3.0 + l)).abs() <= 1e-12);
        let expect = 0.25 * g + l - 2.0 * 1.3 * 2f64.ln();
        assert!((stationarity_residual(0.25, g, l, 1.3) - expect).abs() <= 1e-12);
    }

    #[test]
    fn reference_root() {
        let oracle = bisect(|b| stationarity_residual(b, 2.0, 0.0, 1.0), 1e-12, 1.0 / 3.0);
        assert!((oracle - 0.2987).abs() <= 1e-4);
        let b = solve_beta_pixel(2.0, 1.0, 0.0);
        assert!((b - 0.2987).abs() <= 1e-4);
        assert!((b - oracle).abs() <= 1e-11);
    }

    #[test]
    fn asymptotes_and_clamps() {
        assert!((solve_beta_pixel(2.0, 1e9, 0.0) - BETA_MAX).abs() <= 1e-8);
        assert_eq!(solve_beta_pixel(2.0, 1e-12, 0.5), BETA_MIN);
        // residual negative on the whole interval
        assert_eq!(solve_beta_pixel(-100.0, 1.0, 0.0), BETA_MAX);
    }

    #[test]
    fn negative_gamma_uses_scan() {
        // f(1/3) = -1/3 + 1 > 0, so a crossing exists below 1/3
        let (g, l, lam) = (-1.0, 1.0, 0.3);
        let b = solve_beta_pixel(g, lam, l);
        assert!(b > BETA_MIN && b < BETA_MAX);
        assert!(stationarity_residual(b, g, l, lam).abs() <= 1e-8);
    }

    proptest! {
        #[test]
        fn root_satisfies_residual(g in 0.0f64..1e6, l in 0.0f64..1e4, lam in 1e-3f64..1e3) {
            let b = solve_beta_pixel(g, lam, l);
            prop_assert!((BETA_MIN..=BETA_MAX).contains(&b));
            if b > BETA_MIN && b < BETA_MAX {
                let r = stationarity_residual(b, g, l, lam);
                let scale = residual_slope(b, g, lam) * 1e-12;
                prop_assert!(r.abs() <= 1e-10 || r.abs() <= scale * 2.0);
            }
        }

        #[test]
        fn monotone_in_parameters(g in 0.0f64..100.0, l in 0.0f64..10.0, lam in 1e-2f64..10.0,
                                  dg in 0.0f64..10.0, dl in 0.0f64..1.0, k in 1.0f64..3.0) {
            let b = solve_beta_pixel(g, lam, l);
            prop_assert!(solve_beta_pixel(g, lam * k, l) >= b - 1e-12);
            prop_assert!(solve_beta_pixel(g + dg, lam, l) <= b + 1e-12);
            prop_assert!(solve_beta_pixel(g, lam, l + dl) <= b + 1e-12);
        }

        #[test]
        fn entropy_is_bounded(b in 0.0f64..(1.0 / 3.0)) {
            let h = entropy_ternary(b);
            prop_assert!(h >= 0.0 && h <= 3f64.log2() + 1e-15);
        }
    }
}
