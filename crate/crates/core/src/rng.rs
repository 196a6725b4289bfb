//! Seeded pseudo-random source.
//!
//! The generator is PCG32 (XSH-RR variant) on a 64-bit state:
//!
//! ```text
//! state' = state * 6364136223846793005 + inc        (mod 2^64, inc odd)
//! out    = rotr32( (((state ^ (state >> 18)) >> 27) as u32), state >> 59 )
//! ```
//!
//! Seeding follows the reference `pcg32_srandom_r`: `inc = (stream << 1) | 1`,
//! `state = 0`, one step, `state += seed`, one step. Output is taken from the
//! state *before* the step. Uniform `f64`s use 53 bits built from two
//! consecutive outputs (`hi << 32 | lo`, top 53 bits). Gaussians come from
//! the Box–Muller transform on pairs `(u1, u2)` with `u1 ∈ (0, 1]`, emitting
//! `r·cos(2πu2)` then `r·sin(2πu2)`.

use crate::scalar::Scalar;
use crate::tensor::Tensor;

const MULTIPLIER: u64 = 6364136223846793005;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rng {
    state: u64,
    inc: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0xda3e_39cb_94b9_5bdb)
    }

    /// Independent sequence for the same seed, selected by `stream`.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = Self { state: 0, inc: (stream << 1) | 1 };
        rng.step();
        rng.state = rng.state.wrapping_add(seed);
        rng.step();
        rng
    }

    /// Derives a child generator; the parent advances by one draw.
    pub fn fork(&mut self) -> Self {
        let seed = self.next_u64();
        let stream = self.next_u64();
        Self::with_stream(seed, stream)
    }

    fn step(&mut self) {
        self.state = self.state.wrapping_mul(MULTIPLIER).wrapping_add(self.inc);
    }

    pub fn next_u32(&mut self) -> u32 {
        let old = self.state;
        self.step();
        let xorshifted = (((old >> 18) ^ old) >> 27) as u32;
        let rot = (old >> 59) as u32;
        xorshifted.rotate_right(rot)
    }

    pub fn next_u64(&mut self) -> u64 {
        let hi = self.next_u32() as u64;
        let lo = self.next_u32() as u64;
        (hi << 32) | lo
    }

    /// Uniform in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Unbiased integer in `[0, n)`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0)");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }

    /// Standard normal pair via Box–Muller.
    pub fn normal_pair(&mut self) -> (f64, f64) {
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = std::f64::consts::TAU * u2;
        (r * theta.cos(), r * theta.sin())
    }

    /// Fisher–Yates shuffle (descending swap positions).
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

/// I.i.d. N(0, 1) draws filled in row-major order.
///
/// Each Box–Muller pair fills two consecutive slots; an odd trailing slot
/// consumes a full pair and drops the sine half.
pub fn sample_standard_normal<T: Scalar>(rng: &mut Rng, shape: &[usize]) -> Tensor<T> {
    let n: usize = shape.iter().product();
    let mut data = Vec::with_capacity(n);
    while data.len() < n {
        let (a, b) = rng.normal_pair();
        data.push(T::of(a));
        if data.len() < n {
            data.push(T::of(b));
        }
    }
    Tensor::from_vec(shape, data).expect("shape/data agree")
}
