#![allow(dead_code)]

use std::path::{Path, PathBuf};

use gmrf_stego::image_io::{write_pgm, ImageGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Gray level 128 plus i.i.d. Gaussian noise whose variance follows `var`.
pub fn noise_image(w: usize, h: usize, seed: u64, var: impl Fn(usize, usize) -> f64) -> ImageGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut px = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let n = Normal::new(0.0, var(x, y).sqrt()).unwrap();
            let v: f64 = 128.0 + n.sample(&mut rng);
            px.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }
    ImageGrid::new(w, h, px).unwrap()
}

/// Left half with variance `low`, right half with variance `high`.
pub fn two_texture(w: usize, h: usize, seed: u64, low: f64, high: f64) -> ImageGrid {
    noise_image(w, h, seed, |x, _| if x < w / 2 { low } else { high })
}

/// Smooth gradient with a noisy band, so estimates vary across the frame.
pub fn mixed_scene(w: usize, h: usize, seed: u64) -> ImageGrid {
    let base = noise_image(w, h, seed, |x, y| {
        let r = (x as f64 / w as f64 - 0.5).powi(2) + (y as f64 / h as f64 - 0.5).powi(2);
        1.0 + 60.0 * (-8.0 * r).exp()
    });
    let mut img = base;
    for y in 0..h {
        for x in 0..w {
            let g = (x + y) as f64 * 40.0 / (w + h) as f64 - 20.0;
            let v = f64::from(img.get(x, y)) + g;
            img.set(x, y, v.round().clamp(0.0, 255.0) as u8);
        }
    }
    img
}

pub fn save_pgm(dir: &Path, name: &str, img: &ImageGrid) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, write_pgm(img)).unwrap();
    p
}

/// Runs the CLI in-process and returns `(exit code, stdout)`.
pub fn run_cli(args: &[&str]) -> (i32, String) {
    let mut out = Vec::new();
    let mut full = vec!["gmrf-stego"];
    full.extend_from_slice(args);
    let code = gmrf_stego::cli::run_with_output(full, &mut out);
    (code, String::from_utf8(out).unwrap())
}
