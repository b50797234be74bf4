//! Sub-seed derivation.
//!
//! Every random stream is seeded from `(top-level seed, component name, index)`
//! through FNV-1a on the name and SplitMix64 mixing, so results do not depend
//! on evaluation order or thread count.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive(top: u64, component: &str, index: u64) -> u64 {
    splitmix64(top ^ splitmix64(fnv1a(component.as_bytes()) ^ splitmix64(index)))
}
