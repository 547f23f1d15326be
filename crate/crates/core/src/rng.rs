//! Deterministic counter-based pseudo-random streams.
//!
//! Every random draw in the simulator comes from a [`DetRng`] keyed by
//! (campaign seed, fault id, per-fault seed). Draws are a pure function of
//! the key and a draw counter, so adding or removing one fault never
//! perturbs another fault's stream, and replays are bit-identical across
//! hosts. Not suitable for anything security-related.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over a byte string, used to fold fault ids into stream keys.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Counter-mode SplitMix64 stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetRng {
    key: u64,
    counter: u64,
}

impl DetRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: mix64(seed ^ GAMMA),
            counter: 0,
        }
    }

    /// Stream for one fault: campaign seed, the fault's id, and the
    /// fault's own seed field are all folded into the key.
    pub fn for_fault(campaign_seed: u64, fault_id: &str, fault_seed: u64) -> Self {
        let key = mix64(campaign_seed)
            ^ mix64(fnv1a64(fault_id.as_bytes()))
            ^ mix64(fault_seed.wrapping_add(GAMMA));
        Self {
            key: mix64(key),
            counter: 0,
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform integer in `[lo, hi]` inclusive, rejection-sampled so the
    /// distribution is exact.
    pub fn range_inclusive(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi);
        let span = hi - lo;
        if span == u64::MAX {
            return self.next_u64();
        }
        let span = span + 1;
        let limit = u64::MAX - (u64::MAX % span);
        loop {
            let v = self.next_u64();
            if v < limit {
                return lo + v % span;
            }
        }
    }
}
