//! Deterministic pseudo-random numbers for reproducible experiments.
//!
//! Every random quantity in this crate is drawn from SplitMix64
//! (Steele, Lea, Flood 2014; the exact generator from Vigna's
//! <https://prng.di.unimi.it/splitmix64.c>), so a run is a pure function of
//! its seeds and can be reproduced bit-for-bit in any language.
//!
//! Derived draws are fixed as follows:
//! * `uniform01`: top 53 bits of the next output, scaled by 2⁻⁵³ → [0, 1).
//! * `normal`: Box-Muller on one uniform in (0, 1] and one in [0, 1);
//!   the pair is consumed in order (cos first, sin second).
//! * `bernoulli_pm1`: the top bit of the next output picks +1/−1.
//!
//! Independent streams are derived by XOR-ing a stream index into the seed
//! (`stream(seed, k)` starts SplitMix64 at state `seed ^ k`), which is how
//! per-trial and per-column draws stay schedule-independent.

/// SplitMix64 generator state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
    spare_normal: Option<f64>,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 {
            state: seed,
            spare_normal: None,
        }
    }

    /// Stream `index` of `seed`: SplitMix64 seeded with `seed ^ index`.
    pub fn stream(seed: u64, index: u64) -> Self {
        SplitMix64::new(seed ^ index)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1).
    pub fn uniform01(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw (Box-Muller).
    pub fn normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        // u1 in (0, 1] so the log is finite.
        let u1 = ((self.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
        let u2 = self.uniform01();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare_normal = Some(r * theta.sin());
        r * theta.cos()
    }

    /// Draw from {−1.0, +1.0} with equal probability.
    pub fn bernoulli_pm1(&mut self) -> f64 {
        if self.next_u64() >> 63 == 1 {
            1.0
        } else {
            -1.0
        }
    }

    /// `k` distinct indices from `0..n`, by partial Fisher-Yates.
    pub fn sample_indices(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n);
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            // Unbiased enough for experiment purposes; n is small here.
            let j = i + (self.next_u64() as usize) % (n - i);
            pool.swap(i, j);
        }
        pool.truncate(k);
        pool
    }
}
