#![allow(dead_code)]

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thermoshift::{Potential, ShiftSystem};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

/// Strongly connected SFT on `2..=max_alphabet` symbols, redrawn until
/// connected.
pub fn random_sft(rng: &mut ChaCha8Rng, max_alphabet: usize) -> ShiftSystem {
    loop {
        let a = rng.gen_range(2..=max_alphabet);
        let rows: Vec<Vec<bool>> = (0..a).map(|_| (0..a).map(|_| rng.gen_bool(0.6)).collect()).collect();
        if let Ok(s) = ShiftSystem::new(rows) {
            if s.is_strongly_connected() {
                return s;
            }
        }
    }
}

/// Potential of memory 1 or 2 with values in `[0, 1]`.
pub fn random_potential(rng: &mut ChaCha8Rng, sys: &ShiftSystem, max_memory: usize) -> Potential<f64> {
    let m = rng.gen_range(1..=max_memory);
    Potential::from_fn(sys, m, |_| rng.gen_range(0.0..=1.0)).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
