//! Seeds, seed sequences and the integer mixing used to turn a seed into
//! simulator randomness.
//!
//! Every transition of a seed-action simulator is a pure function of its
//! current state and the step seed. Simulators never keep a generator across
//! steps; instead they build a fresh [`SeedStream`] from the step seed.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One pseudorandom seed, the only control input of a seed-action simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#018x}", self.0)
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

/// An ordered path of seeds applied from the initial state.
///
/// Because transitions are deterministic given the seed, a sequence stands in
/// for the hidden simulator state it leads to.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeedSequence(pub Vec<Seed>);

impl SeedSequence {
    pub fn new() -> Self {
        SeedSequence(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn push(&mut self, seed: Seed) {
        self.0.push(seed);
    }

    pub fn iter(&self) -> impl Iterator<Item = &Seed> {
        self.0.iter()
    }

    pub fn as_slice(&self) -> &[Seed] {
        &self.0
    }
}

impl From<Vec<Seed>> for SeedSequence {
    fn from(v: Vec<Seed>) -> Self {
        SeedSequence(v)
    }
}

impl FromIterator<Seed> for SeedSequence {
    fn from_iter<I: IntoIterator<Item = Seed>>(iter: I) -> Self {
        SeedSequence(iter.into_iter().collect())
    }
}

impl<'a> IntoIterator for &'a SeedSequence {
    type Item = &'a Seed;
    type IntoIter = std::slice::Iter<'a, Seed>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer (Stafford variant 13). A bijection on `u64` with full
/// avalanche.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines a base value with an index into an independent-looking 64-bit
/// value. Used to derive per-search seeds and per-purpose sub-streams.
#[inline]
pub fn derive(base: u64, index: u64) -> u64 {
    mix64(base ^ mix64(index.wrapping_add(GOLDEN_GAMMA)))
}

/// A SplitMix64 stream. The generator used inside simulators: seeded once per
/// step from the step seed and discarded afterwards.
#[derive(Clone, Debug)]
pub struct SeedStream {
    state: u64,
}

impl SeedStream {
    pub fn new(seed: Seed) -> Self {
        SeedStream { state: mix64(seed.0) }
    }

    /// A stream for a named purpose derived from one seed, so that several
    /// consumers of one step seed do not share draws.
    pub fn substream(seed: Seed, purpose: u64) -> Self {
        SeedStream {
            state: derive(seed.0, purpose),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        mix64(self.state)
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on `[lo, hi]`; returns `lo` when the range is degenerate.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            lo
        } else {
            lo + (hi - lo) * self.next_f64()
        }
    }

    /// One standard normal draw by the Box-Muller transform (cosine branch),
    /// consuming exactly two uniforms.
    pub fn standard_normal(&mut self) -> f64 {
        // u1 in (0, 1] keeps the logarithm finite.
        let u1 = 1.0 - self.next_f64();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}
