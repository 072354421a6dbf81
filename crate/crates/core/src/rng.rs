//! Counter-based random streams.
//!
//! Every draw is a pure function of a 64-bit stream key and a 64-bit
//! counter, so any draw can be recomputed without replaying the stream and
//! independent replicas never share state.
//!
//! ```text
//! mix(z)     = z ^= z >> 30; z *= 0xbf58476d1ce4e5b9;
//!              z ^= z >> 27; z *= 0x94d049bb133111eb;
//!              z ^ (z >> 31)                       (SplitMix64 finalizer)
//! root(seed) = mix(seed ^ 0x5851f42d4c957f2d)
//! sub(k, i)  = mix(k ^ mix(i * G + 0x2545f4914f6cdd1d))
//! draw(k, c) = mix(k + (c + 1) * G)                G = 0x9e3779b97f4a7c15
//! ```
//!
//! All arithmetic is wrapping. `draw(k, ·)` is exactly the SplitMix64
//! output sequence started from state `k`.
//!
//! Uniforms use the top 53 bits: `u = (x >> 11) * 2^-53` in `[0, 1)`.
//! Normals use the cosine branch of Box–Muller on two consecutive draws,
//! with the first uniform shifted into `(0, 1]`.

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const ROOT_SALT: u64 = 0x5851_f42d_4c95_7f2d;
const SUB_SALT: u64 = 0x2545_f491_4f6c_dd1d;
const TWO_POW_M53: f64 = 1.0 / 9_007_199_254_740_992.0;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A keyed random stream with a running counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    /// Root stream for a user-facing seed.
    pub fn new(seed: u64) -> Self {
        Stream { key: mix64(seed ^ ROOT_SALT), counter: 0 }
    }

    /// Independent child stream; the parent's counter is irrelevant.
    pub fn substream(&self, id: u64) -> Self {
        let k = mix64(self.key ^ mix64(id.wrapping_mul(GOLDEN).wrapping_add(SUB_SALT)));
        Stream { key: k, counter: 0 }
    }

    /// The same stream positioned at `counter`.
    pub fn at(mut self, counter: u64) -> Self {
        self.counter = counter;
        self
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// Random access: the draw at `counter`, leaving the stream untouched.
    #[inline]
    pub fn u64_at(&self, counter: u64) -> u64 {
        mix64(self.key.wrapping_add(counter.wrapping_add(1).wrapping_mul(GOLDEN)))
    }

    #[inline]
    pub fn f64_at(&self, counter: u64) -> f64 {
        (self.u64_at(counter) >> 11) as f64 * TWO_POW_M53
    }

    /// Standard normal built from draws `counter` and `counter + 1`.
    #[inline]
    pub fn normal_at(&self, counter: u64) -> f64 {
        let u1 = ((self.u64_at(counter) >> 11) + 1) as f64 * TWO_POW_M53;
        let u2 = self.f64_at(counter.wrapping_add(1));
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(core::f64::consts::TAU * u2)
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let x = self.u64_at(self.counter);
        self.counter = self.counter.wrapping_add(1);
        x
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    #[inline]
    pub fn next_normal(&mut self) -> f64 {
        let z = self.normal_at(self.counter);
        self.counter = self.counter.wrapping_add(2);
        z
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift; bias below 2^-64·n).
    #[inline]
    pub fn next_below(&mut self, n: u64) -> u64 {
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }
}
