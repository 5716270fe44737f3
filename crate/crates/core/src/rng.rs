//! Counter-based random streams keyed by simulation coordinates.
//!
//! Every stochastic decision draws from a short stream derived from
//! `(seed, repetition, t, id, purpose)`. Draws never depend on the order in
//! which vehicles are visited, so a data-parallel lane update and the
//! sequential one see the same numbers.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Label separating the independent draws made for one vehicle in one step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Purpose {
    Noise,
    Stress,
    LaneRight,
    LaneLeft,
    Jam,
    Side,
    Emit,
    KindChoice,
    Scratch(u64),
}

impl Purpose {
    fn code(self) -> u64 {
        match self {
            Purpose::Noise => 1,
            Purpose::Stress => 2,
            Purpose::LaneRight => 3,
            Purpose::LaneLeft => 4,
            Purpose::Jam => 5,
            Purpose::Side => 6,
            Purpose::Emit => 7,
            Purpose::KindChoice => 8,
            Purpose::Scratch(n) => 0x100 + n,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyedRng {
    seed: u64,
    repetition: u64,
}

impl KeyedRng {
    pub fn new(seed: u64, repetition: u64) -> Self {
        Self { seed, repetition }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn repetition(&self) -> u64 {
        self.repetition
    }

    pub fn stream(&self, t: u64, id: u64, purpose: Purpose) -> Stream {
        let mut h = mix64(self.seed ^ GOLDEN);
        for word in [self.repetition, t, id, purpose.code()] {
            h = mix64(h ^ word.wrapping_mul(GOLDEN).wrapping_add(0x632b_e59b_d9b4_e019));
        }
        Stream { state: h }
    }

    /// One draw from `U[0, 1)`.
    pub fn uniform(&self, t: u64, id: u64, purpose: Purpose) -> f64 {
        self.stream(t, id, purpose).random::<f64>()
    }

    /// Bernoulli trial with success probability `p` (clamped to `[0, 1]`).
    pub fn bernoulli(&self, t: u64, id: u64, purpose: Purpose, p: f64) -> bool {
        self.uniform(t, id, purpose) < p.clamp(0.0, 1.0)
    }

    /// One draw from the standard normal distribution.
    pub fn standard_normal(&self, t: u64, id: u64, purpose: Purpose) -> f64 {
        StandardNormal.sample(&mut self.stream(t, id, purpose))
    }
}

/// SplitMix64 generator seeded from a key.
#[derive(Clone, Debug)]
pub struct Stream {
    state: u64,
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        (self.next_u64() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_u64().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
