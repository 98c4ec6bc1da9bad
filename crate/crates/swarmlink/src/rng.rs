//! Seed derivation for independent, reproducible random streams.

/// Stream labels, one per distinct consumer of randomness. Keeping them in
/// one place guarantees two subsystems never draw from the same stream.
pub(crate) const LBL_PLACEMENT: u64 = 1;
pub(crate) const LBL_REFERENCE: u64 = 2;
pub(crate) const LBL_DISTURBANCE: u64 = 3;
pub(crate) const LBL_PHYSICS: u64 = 4;
pub(crate) const LBL_DECISION: u64 = 5;
pub(crate) const LBL_CHANNEL: u64 = 6;

/// Derives a child seed from a master seed and a label path.
///
/// Uses splitmix64 steps so that streams for different purposes (placement,
/// per-agent disturbance, per-decision sampling, ...) never alias even when
/// labels share a prefix.
pub fn derive_seed(master: u64, labels: &[u64]) -> u64 {
    let mut state = splitmix(master ^ 0x9e37_79b9_7f4a_7c15);
    for &l in labels {
        state = splitmix(state ^ splitmix(l));
    }
    state
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
