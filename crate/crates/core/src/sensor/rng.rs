//! Counter-based random streams.
//!
//! Every (pixel, jot, frame) triple gets its own SplitMix64 stream whose
//! starting state is a hash of the seed and the counters, so any subset of
//! draws can be regenerated in any order on any thread.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one jot-frame draw.
#[derive(Debug, Clone)]
pub struct DrawStream {
    state: u64,
}

impl DrawStream {
    #[inline]
    pub fn new(seed: u64, pixel: u64, jot: u32, frame: u32) -> Self {
        let mut s = mix64(seed.wrapping_add(GOLDEN));
        s = mix64(s ^ pixel.wrapping_mul(0xD1B5_4A32_D192_ED03));
        s = mix64(s ^ ((u64::from(jot) << 32) | u64::from(frame)));
        Self { state: s }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN);
        mix64(self.state)
    }

    /// Uniform on [0, 1) with 53 random bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Derives a per-exposure seed from a run-level seed and an index.
pub fn derive_seed(global: u64, index: u64) -> u64 {
    mix64(mix64(global ^ 0x5EED_5EED_5EED_5EED) ^ index.wrapping_mul(GOLDEN))
}
