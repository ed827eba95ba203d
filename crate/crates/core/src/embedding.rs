//! Costs, cost smoothing, payload-limited re-derivation of change
//! probabilities and simulated ternary embedding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image_io::{FloatGrid, ImageGrid};
use crate::optimizer::{search_payload, ChangeProbMap, PayloadTolerance, BETA_MAX, BETA_MIN};

pub const DEFAULT_SMOOTHING_KERNEL: usize = 7;

/// Per-pixel embedding cost `d = ln(1/β - 2) >= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMap {
    cost: FloatGrid,
}

impl CostMap {
    pub fn new(cost: FloatGrid) -> Result<Self> {
        if let Some(d) = cost.values().iter().find(|d| !(**d >= 0.0)) {
            return Err(Error::InvalidParameter(format!("cost {d} is negative")));
        }
        Ok(Self { cost })
    }

    pub fn values(&self) -> &[f64] {
        self.cost.values()
    }

    pub fn grid(&self) -> &FloatGrid {
        &self.cost
    }

    pub fn into_grid(self) -> FloatGrid {
        self.cost
    }
}

pub fn probs_to_costs(beta: &ChangeProbMap) -> CostMap {
    let cost = beta
        .values()
        .iter()
        .map(|&b| {
            let b = b.clamp(BETA_MIN, BETA_MAX);
            (1.0 / b - 2.0).ln().max(0.0)
        })
        .collect();
    CostMap {
        cost: FloatGrid::new(beta.width(), beta.height(), cost).expect("shape preserved"),
    }
}

fn box_pass(src: &FloatGrid, kernel: usize, horizontal: bool) -> FloatGrid {
    let r = (kernel / 2) as isize;
    let norm = 1.0 / kernel as f64;
    FloatGrid::from_fn(src.width(), src.height(), |x, y| {
        let (x, y) = (x as isize, y as isize);
        let mut s = 0.0;
        for k in -r..=r {
            s += if horizontal {
                src.get_mirrored(x + k, y)
            } else {
                src.get_mirrored(x, y + k)
            };
        }
        s * norm
    })
}

/// `kernel x kernel` moving average with mirror padding.
pub fn smooth_costs(cost: &CostMap, kernel: usize) -> Result<CostMap> {
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "smoothing kernel {kernel} must be odd"
        )));
    }
    let rows = box_pass(&cost.cost, kernel, true);
    let out = box_pass(&rows, kernel, false);
    // averages of nonnegative values; clear rounding-level negatives
    let values = out.into_values().into_iter().map(|v| v.max(0.0)).collect();
    Ok(CostMap {
        cost: FloatGrid::new(cost.cost.width(), cost.cost.height(), values)?,
    })
}

/// `β = e^{-λd} / (1 + 2e^{-λd})`.
pub fn gibbs_beta(cost: f64, lambda: f64) -> f64 {
    if cost == 0.0 {
        return BETA_MAX;
    }
    let e = (-lambda * cost).exp();
    e / (1.0 + 2.0 * e)
}

/// Payload-limited sender: finds `λ > 0` so that the Gibbs probabilities of
/// `cost` carry `payload_bits`. Returns the probabilities and `λ`.
pub fn costs_to_probs(
    cost: &CostMap,
    payload_bits: f64,
    tolerance: &PayloadTolerance,
) -> Result<(ChangeProbMap, f64)> {
    let d = cost.values();
    // payload grows with t = 1/λ
    let found = search_payload(d.len(), payload_bits, tolerance, |t| {
        let lambda = 1.0 / t;
        d.par_iter().map(|&c| gibbs_beta(c, lambda)).collect()
    })?;
    let (w, h) = (cost.cost.width(), cost.cost.height());
    let map = ChangeProbMap::new(FloatGrid::new(w, h, found.betas)?)?;
    Ok((map, 1.0 / found.parameter))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StegoResult {
    pub stego: ImageGrid,
    /// Row-major changes in `{-1, 0, +1}`.
    pub changes: Vec<i8>,
    pub seed: u64,
    /// Fraction of changed pixels in sublattice A and in sublattice B.
    pub realized_change_rate: [f64; 2],
}

impl StegoResult {
    pub fn change_grid(&self) -> FloatGrid {
        let values = self.changes.iter().map(|&c| f64::from(c)).collect();
        FloatGrid::new(self.stego.width(), self.stego.height(), values).expect("shape preserved")
    }

    pub fn changed_pixels(&self) -> usize {
        self.changes.iter().filter(|&&c| c != 0).count()
    }
}

/// Draws one uniform `u` per pixel in row-major order from ChaCha8 seeded
/// with `seed`: `u < β` gives +1, `β <= u < 2β` gives -1. A +1 at 255
/// becomes -1 and a -1 at 0 becomes +1.
pub fn simulate_embedding(cover: &ImageGrid, beta: &ChangeProbMap, seed: u64) -> Result<StegoResult> {
    let (w, h) = (cover.width(), cover.height());
    if beta.width() != w || beta.height() != h {
        return Err(Error::Dimensions {
            width: beta.width(),
            height: beta.height(),
            reason: "change probabilities do not match the cover",
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pixels = cover.pixels().to_vec();
    let mut changes = vec![0i8; pixels.len()];
    let mut changed = [0usize; 2];
    let mut counts = [0usize; 2];
    for (i, (px, &b)) in pixels.iter_mut().zip(beta.values()).enumerate() {
        let u: f64 = rng.random();
        let mut c = if u < b {
            1i8
        } else if u < 2.0 * b {
            -1
        } else {
            0
        };
        if c == 1 && *px == 255 {
            c = -1;
        } else if c == -1 && *px == 0 {
            c = 1;
        }
        *px = (i16::from(*px) + i16::from(c)) as u8;
        changes[i] = c;
        let lattice = ((i / w) + (i % w)) % 2;
        counts[lattice] += 1;
        if c != 0 {
            changed[lattice] += 1;
        }
    }
    let rate = |k: usize| if counts[k] == 0 { 0.0 } else { changed[k] as f64 / counts[k] as f64 };
    Ok(StegoResult {
        stego: ImageGrid::new(w, h, pixels)?,
        changes,
        seed,
        realized_change_rate: [rate(0), rate(1)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{entropy_ternary, total_entropy};
    use proptest::prelude::*;

    fn tight() -> PayloadTolerance {
        PayloadTolerance {
            relative: 0.0,
            absolute_bits: 1e-9,
        }
    }

    #[test]
    fn cost_values() {
        let m = ChangeProbMap::new(FloatGrid::new(2, 1, vec![1.0 / 3.0, 0.1]).unwrap()).unwrap();
        let c = probs_to_costs(&m);
        assert_eq!(c.values()[0], 0.0);
        assert!((c.values()[1] - 8f64.ln()).abs() <= 1e-12);
        assert!((c.values()[1] - 2.0794).abs() <= 1e-4);
        assert!((gibbs_beta(c.values()[1], 1.0) - 0.1).abs() <= 1e-12);
        // β = 0 is floored, cost stays finite
        let z = probs_to_costs(&ChangeProbMap::filled(1, 1, 0.0).unwrap());
        assert!(z.values()[0].is_finite());
    }

    #[test]
    fn smoothing_examples() {
        let flat = CostMap::new(FloatGrid::filled(9, 9, 2.5)).unwrap();
        let s = smooth_costs(&flat, 7).unwrap();
        assert!(s.values().iter().all(|&v| (v - 2.5).abs() <= 1e-12));

        let mut spike = FloatGrid::zeros(15, 15);
        spike.set(7, 7, 49.0);
        let s = smooth_costs(&CostMap::new(spike).unwrap(), 7).unwrap();
        for y in 0..15 {
            for x in 0..15 {
                let inside = (4..=10).contains(&x) && (4..=10).contains(&y);
                let expect = if inside { 1.0 } else { 0.0 };
                assert!((s.grid().get(x, y) - expect).abs() <= 1e-12);
            }
        }
        assert!(smooth_costs(&flat, 4).is_err());
    }

    #[test]
    fn payload_limited_sender() {
        let d = CostMap::new(FloatGrid::filled(10, 10, 8f64.ln())).unwrap();
        let target = 100.0 * entropy_ternary(0.1);
        assert!((target - 92.193).abs() <= 1e-3);
        let (b, lambda) = costs_to_probs(&d, target, &tight()).unwrap();
        assert!((lambda - 1.0).abs() <= 1e-6);
        assert!(b.values().iter().all(|&v| (v - 0.1).abs() <= 1e-6));

        let (full, _) = costs_to_probs(&d, 100.0 * 3f64.log2(), &PayloadTolerance::default()).unwrap();
        assert!(full.values().iter().all(|&v| v == 1.0 / 3.0));

        let pair = CostMap::new(FloatGrid::new(2, 1, vec![0.0, 30.0]).unwrap()).unwrap();
        // the zero-cost pixel alone carries log2 3 bits
        let (b, _) = costs_to_probs(&pair, 1.6, &tight()).unwrap();
        assert!(b.values()[0] > 100.0 * b.values()[1]);

        assert!(costs_to_probs(&d, 200.0, &PayloadTolerance::default()).is_err());
    }

    #[test]
    fn zero_beta_leaves_cover_unchanged() {
        let cover = ImageGrid::new(4, 3, (0..12).map(|i| (i * 20) as u8).collect()).unwrap();
        let r = simulate_embedding(&cover, &ChangeProbMap::filled(4, 3, 0.0).unwrap(), 3).unwrap();
        assert_eq!(r.stego, cover);
        assert_eq!(r.changed_pixels(), 0);
    }

    #[test]
    fn saturation_flips_direction() {
        let cover = ImageGrid::new(2, 1, vec![0, 255]).unwrap();
        let beta = ChangeProbMap::filled(2, 1, 1.0 / 3.0).unwrap();
        for seed in 0..50 {
            let r = simulate_embedding(&cover, &beta, seed).unwrap();
            assert!(r.changes[0] >= 0 && r.changes[1] <= 0);
            for (c, (&a, &b)) in r.changes.iter().zip(cover.pixels().iter().zip(r.stego.pixels())) {
                assert_eq!(i16::from(b) - i16::from(a), i16::from(*c));
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let cover = ImageGrid::filled(32, 32, 128).unwrap();
        let beta = ChangeProbMap::filled(32, 32, 0.2).unwrap();
        let a = simulate_embedding(&cover, &beta, 42).unwrap();
        let b = simulate_embedding(&cover, &beta, 42).unwrap();
        let c = simulate_embedding(&cover, &beta, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.changes, c.changes);
    }

    #[test]
    fn change_count_concentration() {
        let cover = ImageGrid::filled(128, 128, 100).unwrap();
        let beta_v: Vec<f64> = (0..128 * 128).map(|i| (i % 7) as f64 * 0.04).collect();
        let beta = ChangeProbMap::new(FloatGrid::new(128, 128, beta_v.clone()).unwrap()).unwrap();
        let r = simulate_embedding(&cover, &beta, 8).unwrap();
        let expected: f64 = beta_v.iter().map(|b| 2.0 * b).sum();
        let sd: f64 = beta_v.iter().map(|b| 2.0 * b * (1.0 - 2.0 * b)).sum::<f64>().sqrt();
        assert!((r.changed_pixels() as f64 - expected).abs() <= 4.0 * sd);
    }

    proptest! {
        #[test]
        fn round_trip_through_costs(v in prop::collection::vec(1e-6f64..(1.0 / 3.0), 12)) {
            let m = ChangeProbMap::new(FloatGrid::new(4, 3, v.clone()).unwrap()).unwrap();
            let c = probs_to_costs(&m);
            for (&b, &d) in v.iter().zip(c.values()) {
                prop_assert!((gibbs_beta(d, 1.0) - b).abs() <= 1e-12);
            }
            let (back, _) = costs_to_probs(&c, total_entropy(&v), &tight()).unwrap();
            for (a, b) in back.values().iter().zip(&v) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }

        #[test]
        fn costs_decrease_with_beta(a in 1e-9f64..0.33, b in 1e-9f64..0.33) {
            prop_assume!(a < b);
            let m = ChangeProbMap::new(FloatGrid::new(2, 1, vec![a, b]).unwrap()).unwrap();
            let c = probs_to_costs(&m);
            prop_assert!(c.values()[0] > c.values()[1]);
        }

        #[test]
        fn smoothing_stays_within_bounds(v in prop::collection::vec(0.0f64..20.0, 48), k in prop::sample::select(vec![1usize, 3, 5, 7])) {
            let c = CostMap::new(FloatGrid::new(8, 6, v.clone()).unwrap()).unwrap();
            let s = smooth_costs(&c, k).unwrap();
            let (lo, hi) = (c.grid().min(), c.grid().max());
            prop_assert!(s.values().iter().all(|&x| x >= lo - 1e-12 && x <= hi + 1e-12));
        }
    }
}
