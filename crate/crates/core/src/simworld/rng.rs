use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Noise channels, one independent stream each.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Channel {
    Occlusion = 0,
    /// Candidate `k` jitter and IoU noise use `CandidateBase + k`.
    CandidateBase = 16,
    Suite = 128,
}

/// Stream keyed by `(seed, object, t, channel)`; independent of call order.
pub fn stream(seed: u64, object: u32, t: u32, channel: u32) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"simworld");
    h.update(seed.to_le_bytes());
    h.update(object.to_le_bytes());
    h.update(t.to_le_bytes());
    h.update(channel.to_le_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

/// Stream keyed by an arbitrary byte string, for bank-dependent noise.
pub fn stream_for(seed: u64, key: &[u8]) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(b"simworld-bank");
    h.update(seed.to_le_bytes());
    h.update(key);
    ChaCha8Rng::from_seed(h.finalize().into())
}
