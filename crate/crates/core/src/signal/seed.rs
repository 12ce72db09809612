use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Root of all randomness. The same seed and parameters always give the same output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

impl Seed {
    pub fn value(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Independent child seed for a named stream (an utterance path, a scenario side, ...).
    ///
    /// Derivation is a hash, so children do not depend on the order in which
    /// they are requested.
    pub fn derive(self, label: &str) -> Seed {
        let mut hasher = Sha256::new();
        hasher.update(self.0.to_le_bytes());
        hasher.update(label.as_bytes());
        let digest = hasher.finalize();
        let mut bytes = [0u8; 8];
        bytes.copy_from_slice(&digest[..8]);
        Seed(u64::from_le_bytes(bytes))
    }
}

impl From<u64> for Seed {
    fn from(v: u64) -> Self {
        Seed(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derive_is_stable_and_label_sensitive() {
        let s = Seed(7);
        assert_eq!(s.derive("a"), s.derive("a"));
        assert_ne!(s.derive("a"), s.derive("b"));
        assert_ne!(s.derive("a"), Seed(8).derive("a"));
    }

    #[test]
    fn rng_replays() {
        let a: Vec<u32> = (0..4).map(|_| 0).scan(Seed(3).rng(), |r, _| Some(r.gen())).collect();
        let b: Vec<u32> = (0..4).map(|_| 0).scan(Seed(3).rng(), |r, _| Some(r.gen())).collect();
        assert_eq!(a, b);
    }
}
