//! Hash-counter random streams.
//!
//! Each draw is `SHA-256(seed_le ‖ 0x00 ‖ label ‖ 0x00 ‖ counter_le)`, the first
//! eight digest bytes read big-endian. Nothing here depends on a PRNG crate, so
//! any implementation that can compute SHA-256 reproduces the same sequence.

use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeededStream {
    seed: u64,
    label: Vec<u8>,
    counter: u64,
}

impl SeededStream {
    pub fn new(seed: u64, label: impl AsRef<[u8]>) -> Self {
        Self {
            seed,
            label: label.as_ref().to_vec(),
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &[u8] {
        &self.label
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update([0u8]);
        hasher.update(&self.label);
        hasher.update([0u8]);
        hasher.update(self.counter.to_le_bytes());
        let digest = hasher.finalize();
        self.counter = self.counter.wrapping_add(1);
        u64::from_be_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
    }

    /// Uniform in `[0, 1)`: the top 53 bits of `next_u64` scaled by `2^-53`.
    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[0, n)` by multiply-shift. `n` must be non-zero.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below(0)");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    pub fn pick<'a, T>(&mut self, items: &'a [T]) -> &'a T {
        &items[self.next_below(items.len() as u64) as usize]
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.next_unit() < p
    }

    /// Fisher-Yates, drawing from the back.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}
