//! Fixtures shared by the benchmarks.

use std::sync::OnceLock;

use lsnode::SystemParams;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Block size the fixtures are generated for.
pub const BLOCK_SIZE: u64 = 64 * 1024;
pub const K_LIST: [u32; 3] = [4, 32, 256];

/// Production group with generators for [`BLOCK_SIZE`] at `k = 4`; every
/// other `k` is a reshape of it.
pub fn base_params() -> &'static SystemParams {
    static BASE: OnceLock<SystemParams> = OnceLock::new();
    BASE.get_or_init(|| SystemParams::production(4, BLOCK_SIZE, [7; 32]).expect("production parameters"))
}

pub fn params(k: u32) -> SystemParams {
    base_params().reshape(k, BLOCK_SIZE).expect("valid geometry")
}

pub fn random_block(len: usize, seed: u64) -> Vec<u8> {
    let mut block = vec![0u8; len];
    ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut block);
    block
}
