#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use segloss::{MaskField, ProbField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random pair with p anywhere in [0, 1] and a mask holding both labels.
pub fn random_pair(h: usize, w: usize, rng: &mut impl Rng) -> (ProbField, MaskField) {
    let n = h * w;
    let p: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..=1.0)).collect();
    let mut y: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(0.4))).collect();
    if n > 1 {
        y[0] = 1;
        y[n - 1] = 0;
    }
    (
        ProbField::new(h, w, p).unwrap(),
        MaskField::new(h, w, y).unwrap(),
    )
}

pub fn random_mask(h: usize, w: usize, density: f64, rng: &mut impl Rng) -> MaskField {
    let y = (0..h * w)
        .map(|_| u8::from(rng.random_bool(density)))
        .collect();
    MaskField::new(h, w, y).unwrap()
}

/// Filled disk of the given radius centred on `centre` in both axes.
pub fn disk(size: usize, centre: f64, radius: f64) -> MaskField {
    let values = (0..size * size)
        .map(|i| {
            let (r, c) = ((i / size) as f64, (i % size) as f64);
            u8::from((r - centre).powi(2) + (c - centre).powi(2) <= radius * radius)
        })
        .collect();
    MaskField::new(size, size, values).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}
