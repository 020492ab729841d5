//! Counter-based sampling used wherever reproducibility must not depend on
//! evaluation order: each draw is a pure function of (seed, indices).

/// SplitMix64 finalizer.
#[inline]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw in [0, 1) keyed by (seed, a, b); independent of call order.
#[inline]
pub fn unit_f64(seed: u64, a: u64, b: u64) -> f64 {
    let h = splitmix64(seed ^ splitmix64(a ^ splitmix64(b).wrapping_mul(0xD605_1C8B_9F1C_ED4F)));
    // 53 high bits give a dyadic rational in [0, 1).
    (h >> 11) as f64 / (1u64 << 53) as f64
}
