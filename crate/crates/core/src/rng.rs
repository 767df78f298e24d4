//! Keyed, splittable random streams.
//!
//! A [`StreamKey`] is a pure function of a root seed and a path of integer
//! coordinates (sample index, jump index, reaction channel, purpose tag...).
//! Each key opens a counter-based [`Stream`], so nested simulations draw
//! from independent, reproducible streams without any shared state.

use rand_core::RngCore;
use rand_distr::Distribution;

use crate::error::{Error, Result};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies one random stream: `(root_seed, path)`, stored as a 128-bit digest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    root_seed: u64,
    depth: u32,
    lanes: [u64; 2],
}

impl StreamKey {
    pub fn root(seed: u64) -> Self {
        Self {
            root_seed: seed,
            depth: 0,
            lanes: [mix64(seed ^ 0x6a09_e667_f3bc_c908), mix64(seed.wrapping_add(0xbb67_ae85_84ca_a73b))],
        }
    }

    /// The key for `path ++ [index]`.
    #[inline]
    pub fn child(&self, index: u64) -> Self {
        let depth = self.depth + 1;
        let tagged = index ^ (u64::from(depth) << 56).rotate_left(7);
        let a = mix64(self.lanes[0].wrapping_add(GOLDEN) ^ mix64(tagged.wrapping_add(0x3c6e_f372_fe94_f82b)));
        let b = mix64(self.lanes[1].rotate_left(23) ^ mix64(tagged.wrapping_mul(GOLDEN) ^ 0xa54f_f53a_5f1d_36f1));
        Self {
            root_seed: self.root_seed,
            depth,
            lanes: [a, b],
        }
    }

    pub fn descend(&self, path: &[u64]) -> Self {
        path.iter().fold(*self, |key, &i| key.child(i))
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn stream(&self) -> Stream {
        Stream {
            k0: self.lanes[0],
            k1: self.lanes[1] | 1,
            counter: 0,
        }
    }
}

/// Counter-based generator: draw `n` is a keyed hash of `n`.
#[derive(Clone, Debug)]
pub struct Stream {
    k0: u64,
    k1: u64,
    counter: u64,
}

impl Stream {
    #[inline]
    pub fn next_word(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        let z = mix64(self.k0.wrapping_add(self.counter.wrapping_mul(GOLDEN)));
        mix64(z ^ self.k1.wrapping_mul(self.counter | 1))
    }

    /// Uniform variate on `(0, 1]`; never exactly zero.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.next_word() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `−ln(u) / rate`.
    pub fn exponential(&mut self, rate: f64) -> Result<f64> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidRate(rate));
        }
        Ok(-self.uniform().ln() / rate)
    }

    /// Poisson variate. Small means use inversion of one uniform, so draws
    /// from equal streams are monotone in the mean.
    pub fn poisson(&mut self, mean: f64) -> Result<u64> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(Error::InvalidRate(mean));
        }
        if mean == 0.0 {
            return Ok(0);
        }
        if mean < 30.0 {
            let u = self.uniform();
            let mut p = (-mean).exp();
            let mut cdf = p;
            let mut n = 0u64;
            while u > cdf {
                n += 1;
                p *= mean / n as f64;
                if p == 0.0 {
                    break;
                }
                cdf += p;
            }
            return Ok(n);
        }
        let dist = rand_distr::Poisson::new(mean).map_err(|_| Error::InvalidRate(mean))?;
        Ok(dist.sample(self) as u64)
    }
}

impl RngCore for Stream {
    fn next_u32(&mut self) -> u32 {
        (self.next_word() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_word()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        rand_core::impls::fill_bytes_via_next(self, dst)
    }
}
