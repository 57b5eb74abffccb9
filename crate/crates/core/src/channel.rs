//! BPSK over real AWGN: modulation, noise, channel LLRs and the
//! binary-input capacity figures used to express rates and overheads.
//!
//! Bit 0 maps to +1 and bit 1 to -1, so a positive LLR favours bit 0.

use crate::quad::integrate;
use rand::Rng;
use rand_distr::StandardNormal;
use std::f64::consts::{E, PI};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    sigma_n: f64,
}

impl ChannelParams {
    pub fn new(sigma_n: f64) -> Self {
        assert!(sigma_n > 0.0 && sigma_n.is_finite(), "sigma_n must be positive, got {sigma_n}");
        Self { sigma_n }
    }

    pub fn sigma_n(&self) -> f64 {
        self.sigma_n
    }

    /// Variance of the channel LLR, `4 / sigma_n^2`.
    pub fn sigma_ch_sq(&self) -> f64 {
        4.0 / (self.sigma_n * self.sigma_n)
    }

    pub fn sigma_ch(&self) -> f64 {
        2.0 / self.sigma_n
    }
}

pub fn modulate(bit: u8) -> f64 {
    if bit == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Hard decision on a received sample; zero decides 0.
pub fn demodulate(y: f64) -> u8 {
    u8::from(y < 0.0)
}

pub fn transmit<R: Rng + ?Sized>(x: f64, p: &ChannelParams, rng: &mut R) -> f64 {
    let n: f64 = rng.sample(StandardNormal);
    x + p.sigma_n * n
}

pub fn channel_llr(y: f64, p: &ChannelParams) -> f64 {
    2.0 * y / (p.sigma_n * p.sigma_n)
}

/// Binary-input AWGN capacity in bits per channel use.
pub fn capacity(sigma_n: f64) -> f64 {
    assert!(sigma_n > 0.0, "sigma_n must be positive");
    let s2 = sigma_n * sigma_n;
    let norm = 1.0 / (2.0 * (2.0 * PI * s2).sqrt());
    let phi = |y: f64| {
        norm * ((-(y + 1.0) * (y + 1.0) / (2.0 * s2)).exp() + (-(y - 1.0) * (y - 1.0) / (2.0 * s2)).exp())
    };
    let bound = 1.0 + 10.0 * sigma_n;
    let h_y = integrate(
        |y| {
            let p = phi(y);
            if p > 0.0 {
                -p * p.log2()
            } else {
                0.0
            }
        },
        -bound,
        bound,
        1e-11,
    );
    h_y - 0.5 * (2.0 * PI * E * s2).log2()
}

/// Noise level at which the capacity equals `rate`.
pub fn sigma_for_rate(rate: f64) -> f64 {
    assert!(rate > 0.0 && rate < 1.0, "rate must lie in (0, 1)");
    let (mut lo, mut hi) = (1e-3, 1.0);
    while capacity(hi) > rate {
        hi *= 2.0;
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if capacity(mid) > rate {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn ebn0_db(rate: f64, sigma_n: f64) -> f64 {
    10.0 * (1.0 / (2.0 * rate * sigma_n * sigma_n)).log10()
}

/// Relative overhead of `m` received symbols over `K / C`.
pub fn overhead(m: usize, k: usize, sigma_n: f64) -> f64 {
    m as f64 * capacity(sigma_n) / k as f64 - 1.0
}

/// Symbols to collect for overhead `delta`, rounded to the nearest integer.
pub fn symbols_for_overhead(k: usize, sigma_n: f64, delta: f64) -> usize {
    (k as f64 * (1.0 + delta) / capacity(sigma_n)).round() as usize
}
