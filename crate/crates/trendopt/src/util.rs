//! Small internal helpers shared across modules.

/// Derives an independent stream seed from a base seed and a stream tag
/// (SplitMix64 finalizer). Used so that e.g. parameter initialization, batch
/// shuffling and dropout masks each get their own deterministic RNG stream.
pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Returns the index of the first non-finite entry, if any.
pub(crate) fn first_non_finite(values: &[f64]) -> Option<usize> {
    values.iter().position(|v| !v.is_finite())
}
