//! Counter-based standard normal draws.
//!
//! Every draw is addressed by `(seed, stream, index)`: the seed keys a ChaCha8
//! generator, the stream selects an independent ChaCha stream and the index
//! selects a fixed four-word block inside it. A draw can therefore be
//! regenerated in isolation, and reading a run of consecutive indices gives the
//! same values as addressing each one separately.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Stream namespaces, so tables, paths and Brownian trees never share draws.
pub mod domain {
    pub const TABLE: u64 = 1;
    pub const PATH: u64 = 2;
    pub const TREE: u64 = 3;
}

const WORDS_PER_DRAW: u128 = 4;

pub fn stream_id(domain: u64, component: u64) -> u64 {
    (domain << 48) ^ component
}

fn open_unit(bits: u64) -> f64 {
    // (0, 1]: never zero so the logarithm stays finite.
    ((bits >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
}

fn box_muller(a: u64, b: u64) -> f64 {
    let u1 = open_unit(a);
    let u2 = open_unit(b);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Fill `out` with draws `start, start + 1, ...` of the given stream.
pub fn fill_normals(seed: u64, stream: u64, start: u64, out: &mut [f64]) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng.set_word_pos(start as u128 * WORDS_PER_DRAW);
    for x in out.iter_mut() {
        let a = rng.next_u64();
        let b = rng.next_u64();
        *x = box_muller(a, b);
    }
}

/// A single draw addressed by `(seed, stream, index)`.
pub fn normal_at(seed: u64, stream: u64, index: u64) -> f64 {
    let mut x = [0.0];
    fill_normals(seed, stream, index, &mut x);
    x[0]
}
