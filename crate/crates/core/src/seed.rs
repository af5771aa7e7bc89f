//! Named sub-seeds derived from one master seed.

/// Derives an independent seed for the component `name`.
pub fn sub_seed(master: u64, name: &str) -> u64 {
    // FNV-1a over the name, then a splitmix64 finalizer over the mix.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master ^ h;
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const CLUSTERING: &str = "clustering";
pub const SYNTHESIS: &str = "synthesis";
pub const BASELINES: &str = "baselines";
