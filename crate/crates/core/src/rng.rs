//! Counter-based random streams.
//!
//! Draw `k` (zero-based) of stream `(seed, stream)` is
//!
//! ```text
//! key    = mix64(seed ^ mix64(stream + GAMMA))
//! output = mix64(key + (k + 1) * GAMMA)          (wrapping arithmetic)
//! ```
//!
//! where `GAMMA = 0x9E3779B97F4A7C15` and `mix64` is the SplitMix64 finalizer
//! (`z ^= z >> 30; z *= 0xBF58476D1CE4E5B9; z ^= z >> 27; z *= 0x94D049BB133111EB;
//! z ^= z >> 31`). Within a stream this is exactly SplitMix64 started at `key`.
//! Uniform doubles take the top 53 bits: `(output >> 11) * 2^-53`.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone)]
pub struct StreamRng {
    key: u64,
    counter: u64,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: mix64(seed ^ mix64(stream.wrapping_add(GAMMA))),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GAMMA)))
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from `weights` by inverse CDF, scanning left to right.
    /// Falls back to the last positive weight when round-off leaves `u` past
    /// the cumulative total.
    pub fn sample_index(&mut self, weights: impl IntoIterator<Item = f64>) -> usize {
        let u = self.next_f64();
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, w) in weights.into_iter().enumerate() {
            if w > 0.0 {
                acc += w;
                last_positive = i;
                if u < acc {
                    return i;
                }
            }
        }
        last_positive
    }
}
