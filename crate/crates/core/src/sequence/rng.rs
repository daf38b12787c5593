//! Counter-based random streams.
//!
//! Every independent unit of work (one trial, one cycle, one scan shot) draws
//! from its own ChaCha stream keyed by `(seed, domain)` and selected by an
//! index, so results do not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the stream families used by different parts of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Fiber,
    /// Entanglement trials measured in z.
    Trial,
    /// Entanglement trials measured in x, independent of the z runs.
    TrialX,
    Cycle,
    Spectroscopy,
    Readout,
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Fiber => 0x6669_6265_7200_0001,
            Domain::Trial => 0x7472_6961_6c00_0002,
            Domain::TrialX => 0x7472_6961_6c78_0006,
            Domain::Cycle => 0x6379_636c_6500_0003,
            Domain::Spectroscopy => 0x7370_6563_7400_0004,
            Domain::Readout => 0x7265_6164_6f00_0005,
        }
    }
}

pub fn stream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.tag().to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
