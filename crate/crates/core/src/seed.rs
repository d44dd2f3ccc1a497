//! Child-seed derivation: every random stream is derived from one root seed
//! and a fixed label.

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for the stream named `label` under `root`.
pub fn child_seed(root: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the root
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    mix64(root ^ mix64(h))
}

/// Seed for item `index` of the stream `label` under `root`.
pub fn indexed_seed(root: u64, label: &str, index: u64) -> u64 {
    mix64(child_seed(root, label) ^ mix64(index))
}
