//! Deterministic random streams.
//!
//! Every Monte Carlo trial gets its own generator seeded from
//! `(master seed, stream tag, trial index)`, so results never depend on how
//! trials are scheduled across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Stream tags keep independent uses of one master seed apart.
pub mod tag {
    pub const OVERLAPS: u64 = 0x6f76_6572_6c61_7073;
    pub const BATCH: u64 = 0x62_6174_6368;
    pub const MEMORYLESS: u64 = 0x6d65_6d6f_7279_6c65;
    pub const FULL_MEMORY: u64 = 0x66_756c_6c6d_656d;
    pub const ZETA: u64 = 0x7a65_7461;
    pub const BOOTSTRAP: u64 = 0x626f_6f74;
    pub const EXTREMES: u64 = 0x6578_7472;
    pub const ENSEMBLE: u64 = 0x656e_7365;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mix a master seed with a tag into a derived master seed.
pub fn derive(master: u64, tag: u64) -> u64 {
    splitmix64(splitmix64(master) ^ tag.rotate_left(17))
}

/// Generator for one trial.
pub fn trial_rng(master: u64, tag: u64, index: u64) -> TrialRng {
    let seed = splitmix64(derive(master, tag) ^ splitmix64(index));
    ChaCha8Rng::seed_from_u64(seed)
}

/// A uniform draw in `(0, 1]`, safe to take the logarithm of.
pub fn open_unit<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    1.0 - rng.random::<f64>()
}
