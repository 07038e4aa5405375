//! Counter-based Rademacher probes.
//!
//! Entry `j` of probe `index` under `seed` is a pure function of the triple
//! `(seed, index, j)`: there is no sequential generator state to share, so
//! any thread can materialise any probe and results do not depend on the
//! order in which probes are produced.
//!
//! Keyed stream: ChaCha20 with a 256-bit key whose first eight bytes are
//! `seed` (little endian), the next eight a domain tag (0 for probes), and
//! the rest zero. The 64-bit stream id is `index`, the block counter starts
//! at 0. Output 32-bit words are consumed in order; entry `j` takes bit
//! `j % 32` of word `j / 32`, and bit 1 maps to `+1`, bit 0 to `-1`.

use std::num::ParseIntError;

use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Identifier of the keyed stream construction, echoed in outputs.
pub const STREAM_ID: &str = "chacha20-ctr/key=seed:le64,domain:le64/stream=index/bit1=+1";

/// Key domains keep probes, generators and audit draws from sharing bits
/// when the same user seed is reused.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Probe = 0,
    Generator = 1,
    Chaos = 2,
}

/// A ChaCha20 stream keyed by `(seed, domain)` and positioned on `stream`.
pub fn keyed_rng(seed: u64, domain: Domain, stream: u64) -> ChaCha20Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    let mut rng = ChaCha20Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}

/// Position of one probe in the sample sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SampleStream {
    pub seed: u64,
    pub index: u64,
}

impl SampleStream {
    pub fn new(seed: u64, index: u64) -> Self {
        Self { seed, index }
    }

    /// Writes the probe into `out`, one ±1 entry per slot.
    pub fn fill(&self, out: &mut [f64]) {
        let mut rng = keyed_rng(self.seed, Domain::Probe, self.index);
        for chunk in out.chunks_mut(32) {
            let word = rng.next_u32();
            for (bit, slot) in chunk.iter_mut().enumerate() {
                *slot = if (word >> bit) & 1 == 1 { 1.0 } else { -1.0 };
            }
        }
    }

    pub fn vector(&self, m: usize) -> Vec<f64> {
        let mut z = vec![0.0; m];
        self.fill(&mut z);
        z
    }
}

/// Rademacher probe of length `m` for sample `index` under `seed`.
pub fn rademacher(m: usize, seed: u64, index: u64) -> Vec<f64> {
    SampleStream::new(seed, index).vector(m)
}

/// Parses a seed written either in decimal or as `0x`-prefixed hex.
pub fn parse_seed(text: &str) -> Result<u64, ParseIntError> {
    let text = text.trim();
    match text.strip_prefix("0x").or_else(|| text.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => text.parse(),
    }
}
