//! Per-trial seed derivation. Seeds depend only on the base seed, the cell
//! key and the trial coordinates, never on scheduling or grid order.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8], mut h: u64) -> u64 {
    for b in bytes {
        h ^= u64::from(*b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive_seed(base: u64, key: &str, label: &str, i: u64, j: u64) -> u64 {
    let mut h = fnv1a(key.as_bytes(), FNV_OFFSET);
    h = fnv1a(&[0], h);
    h = fnv1a(label.as_bytes(), h);
    let mut s = splitmix64(base ^ h);
    s = splitmix64(s ^ i);
    splitmix64(s ^ j.rotate_left(32))
}

pub fn instance_seed(base: u64, key: &str, instance: usize) -> u64 {
    derive_seed(base, key, "instance", instance as u64, 0)
}

pub fn value_seed(base: u64, key: &str, instance: usize, assignment: usize) -> u64 {
    derive_seed(base, key, "values", instance as u64, assignment as u64)
}
