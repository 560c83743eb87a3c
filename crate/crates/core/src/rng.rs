//! Per-trial random streams.
//!
//! Every trial gets two ChaCha8 streams keyed by (global seed, hypothesis,
//! trial index): one for observations and one for control randomization. A
//! stream is consumed one draw per step, so the step counter is the stream
//! position. Results do not depend on which worker runs which trial, and two
//! policies run on the same trial index see the same observation noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OBSERVATION_STREAM: u64 = 0;
const CONTROL_STREAM: u64 = 1;

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key(seed: u64, hypothesis: u64, trial: u64) -> [u8; 32] {
    let words = [
        mix(seed),
        mix(seed ^ mix(hypothesis.wrapping_add(0x5851_F42D_4C95_7F2D))),
        mix(trial ^ mix(hypothesis)),
        mix(seed.rotate_left(32) ^ trial),
    ];
    let mut out = [0u8; 32];
    for (chunk, w) in out.chunks_exact_mut(8).zip(words) {
        chunk.copy_from_slice(&w.to_le_bytes());
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrialRng {
    observation: ChaCha8Rng,
    control: ChaCha8Rng,
}

impl TrialRng {
    pub fn new(seed: u64, hypothesis: usize, trial: u64) -> Self {
        let k = key(seed, hypothesis as u64, trial);
        let mut observation = ChaCha8Rng::from_seed(k);
        observation.set_stream(OBSERVATION_STREAM);
        let mut control = ChaCha8Rng::from_seed(k);
        control.set_stream(CONTROL_STREAM);
        Self {
            observation,
            control,
        }
    }

    /// Convenience for single trials outside the Monte Carlo engine.
    pub fn from_seed(seed: u64) -> Self {
        Self::new(seed, 0, 0)
    }

    /// Uniform in `[0, 1)` for drawing the next observation.
    pub fn observation_uniform(&mut self) -> f64 {
        self.observation.gen::<f64>()
    }

    /// Uniform in `[0, 1)` for randomizing the next control.
    pub fn control_uniform(&mut self) -> f64 {
        self.control.gen::<f64>()
    }
}
