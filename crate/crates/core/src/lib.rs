//! Sensor-denied 2D navigation benchmark.
//!
//! The crate bundles a deterministic arena simulator ([`world`]), Lidar and
//! first-person camera sensors with their attack models ([`sensors`]), a small
//! reverse-mode network library ([`nn`]), PPO and TD3 ([`rl`]), the training
//! and evaluation harness ([`eval`]) and report generation ([`report`]).

pub mod env;
pub mod eval;
pub mod geom;
pub mod nn;
pub mod report;
pub mod rl;
pub mod sensors;
pub mod world;

/// Random stream used everywhere a seed must fully determine the outcome.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// SplitMix64 finaliser; derives independent seeds from a root seed and an index.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub(crate) fn hash_hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
