//! Per-purpose seeds derived from the single run seed.
//!
//! `derive(seed, tag, key) = seed ^ tag ^ fnv1a64(key)`, where `key` is the
//! sector name for frontiers and the symbol for training runs.

pub const FRONTIER: u64 = u64::from_be_bytes(*b"FRONTIER");
pub const TRAIN: u64 = u64::from_be_bytes(*b"LSTMTRAN");

pub fn derive(seed: u64, tag: u64, key: &str) -> u64 {
    seed ^ tag ^ fnv1a64(key.as_bytes())
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}
