//! Position-derived random streams.
//!
//! Every random draw in the pipeline comes from a ChaCha8 stream cipher
//! keyed by the run seed. ChaCha is counter based: the 64-bit stream id
//! selects an independent keystream, so a stream can be derived from a
//! window position (or any other work-item coordinate) and produce the
//! same numbers no matter which worker evaluates it or in what order.
//!
//! Stream ids are laid out as `purpose (8 bits) | a (28 bits) | b (28 bits)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const COORD_BITS: u32 = 28;
const COORD_MASK: u64 = (1 << COORD_BITS) - 1;

/// What a stream is used for; keeps streams for different purposes disjoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    /// Replacement samples for the window with top-left corner `(row, col)`.
    Window = 1,
    /// Patch positions when extracting a training corpus.
    Corpus = 2,
    /// Unit subsampling within a feature map.
    UnitSubsample = 3,
    /// Free for tests and tooling.
    Auxiliary = 4,
}

/// A reproducible random stream.
#[derive(Debug, Clone)]
pub struct Stream {
    rng: ChaCha8Rng,
}

impl Stream {
    pub fn new(seed: u64, purpose: Purpose, a: u64, b: u64) -> Self {
        debug_assert!(a <= COORD_MASK && b <= COORD_MASK);
        let id = ((purpose as u64) << (2 * COORD_BITS)) | ((a & COORD_MASK) << COORD_BITS) | (b & COORD_MASK);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id);
        Self { rng }
    }

    /// Stream for the window whose top-left inner corner is `(row, col)`.
    pub fn for_window(seed: u64, row: usize, col: usize) -> Self {
        Self::new(seed, Purpose::Window, row as u64, col as u64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`. `n` must be non-zero.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }
}
