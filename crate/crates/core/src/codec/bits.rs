//! Deterministic bit-cost proxy.
//!
//! One significance bit per coefficient plus a signed order-0 exp-Golomb code
//! for every nonzero level. This is not an entropy coder; it only has to be
//! monotone in level magnitude so rate comparisons go the right way.

/// Length of the unsigned order-0 exp-Golomb code for `v`.
pub fn ue_len(v: u32) -> u32 {
    let x = u64::from(v) + 1;
    2 * (63 - x.leading_zeros()) + 1
}

/// Signed mapping `k > 0 -> 2k - 1`, `k <= 0 -> -2k`, then [`ue_len`].
pub fn se_len(v: i32) -> u32 {
    let mapped = if v > 0 { 2 * v.unsigned_abs() - 1 } else { 2 * v.unsigned_abs() };
    ue_len(mapped)
}

pub fn bit_cost(levels: &[i32]) -> u64 {
    let sig = levels.len() as u64;
    let mags: u64 = levels.iter().filter(|&&l| l != 0).map(|&l| u64::from(se_len(l))).sum();
    sig + mags
}
