//! Seeded random number generation.
//!
//! All randomness in the crate flows through [`Rng`] (ChaCha8), a named,
//! documented PRNG whose output is identical across platforms. Independent
//! subsystems draw from independent streams of the same seed, so runs are
//! reproducible and restarts do not share randomness.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

/// Logical stream ids. Keeping them in one place avoids accidental overlap.
pub mod stream {
    pub const INIT: u64 = 1;
    pub const POLICY: u64 = 2;
    pub const REPLAY: u64 = 3;
    pub const TEACHER: u64 = 4;
    pub const DATA: u64 = 5;
}

/// Build a generator on `stream` of `seed`.
pub fn seeded(seed: u64, stream: u64) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Full serializable state of a [`Rng`]: seed, stream and word position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> Rng {
        let mut rng = Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}
