use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::field::TimeGrid;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random trigonometric series vanishing at `t = 0`.
pub fn random_smooth_series(rng: &mut ChaCha8Rng, grid: &TimeGrid, modes: usize) -> Vec<f64> {
    let horizon = grid.horizon();
    let coeffs: Vec<(f64, f64)> = (1..=modes)
        .map(|k| {
            let k = k as f64;
            (rng.random_range(-1.0..1.0) / k, rng.random_range(-1.0..1.0) / k)
        })
        .collect();
    grid.nodes()
        .map(|t| {
            let s = std::f64::consts::PI * t / horizon;
            coeffs
                .iter()
                .enumerate()
                .map(|(i, (a, b))| {
                    let k = (i + 1) as f64;
                    a * (0.5 * k * s).sin() + b * (1.0 - (k * s).cos())
                })
                .sum()
        })
        .collect()
}
