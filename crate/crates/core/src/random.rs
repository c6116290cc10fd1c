//! Seeded random fields for property batteries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{Field, TorusGrid};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Sum of `bumps` periodic Gaussians with random centres, widths in
/// `[max(4h, L/40), L/8]` and amplitudes in `[0.1, 1]`. Nonnegative and
/// resolved by the grid.
pub fn smooth_positive_field<R: Rng>(grid: &TorusGrid, rng: &mut R, bumps: usize) -> Field {
    let l = grid.length();
    let lo = (4.0 * grid.spacing()).max(l / 40.0);
    let hi = (l / 8.0).max(lo);
    let params: Vec<([f64; 2], f64, f64)> = (0..bumps)
        .map(|_| {
            let c = [
                rng.random_range(-0.5..0.5) * l,
                rng.random_range(-0.5..0.5) * l,
            ];
            let w = rng.random_range(lo..=hi);
            let a = rng.random_range(0.1..=1.0);
            (c, w, a)
        })
        .collect();
    Field::from_fn(grid, |x| {
        params
            .iter()
            .map(|(c, w, a)| {
                let d = grid.periodic_distance(&x, c);
                a * (-0.5 * d * d / (w * w)).exp()
            })
            .sum()
    })
    .expect("finite by construction")
}

/// Independent standard normal values at every grid point.
pub fn gaussian_field<R: Rng>(grid: &TorusGrid, rng: &mut R) -> Field {
    let values = (0..grid.len())
        .map(|_| rng.sample(StandardNormal))
        .collect();
    Field::new(grid, values).expect("finite by construction")
}
