//! Input generators shared by the criterion benches.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random_frames(t: usize, d: usize, seed: u64) -> Array2<f32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((t, d), |_| rng.gen_range(-1.0f32..1.0))
}

pub fn random_scores(n: usize, seed: u64) -> (Vec<f64>, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scores = (0..n).map(|_| rng.gen::<f64>()).collect();
    let positives = (0..n).map(|_| rng.gen_bool(0.3)).collect();
    (scores, positives)
}
