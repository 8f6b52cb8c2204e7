//! Deterministic counter-based random streams.
//!
//! Each [`Stream`] is an independent pseudo-random sequence derived from the
//! run seed and a logical label. Substreams are derived without mutating the
//! parent, so every module (emission times, frequencies, routing, detection)
//! gets its own reproducible sequence regardless of evaluation order.

use crate::error::{Error, Result};

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Counter-based generator: output i is `mix64(key ^ counter_i)`, so streams
/// with distinct keys are independent and a stream never shares state.
#[derive(Clone, Debug)]
pub struct Stream {
    key: u64,
    counter: u64,
}

impl Stream {
    /// Root stream for a run seed.
    pub fn from_seed(seed: u64) -> Self {
        Stream {
            key: mix64(seed ^ 0x9E37_79B9_7F4A_7C15),
            counter: 0,
        }
    }

    /// Derive an independent child stream identified by a label.
    pub fn substream(&self, label: &str) -> Self {
        let key = mix64(self.key ^ mix64(fnv1a64(label.as_bytes())));
        Stream { key, counter: 0 }
    }

    /// Derive an independent child stream identified by an index.
    pub fn substream_index(&self, index: u64) -> Self {
        let key = mix64(self.key ^ mix64(index.wrapping_mul(0xD134_2543_DE82_EF95) ^ 0xFF51_AFD7_ED55_8CCD));
        Stream { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.key ^ self.counter.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        self.counter = self.counter.wrapping_add(1);
        out
    }

    /// Uniform draw in the half-open interval (0, 1].
    pub fn uniform(&mut self) -> f64 {
        (((self.next_u64() >> 11) + 1) as f64) * (1.0 / 9007199254740992.0)
    }

    /// Bernoulli draw with success probability `p` (clamped to [0,1]).
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() <= p
    }

    /// Exponential draw with mean `t1` by inverse CDF, `-t1*ln(u)` with
    /// `u in (0,1]`, so `u = 1` maps to exactly 0.
    pub fn exponential(&mut self, t1: f64) -> Result<f64> {
        if !(t1 > 0.0) {
            return Err(Error::parameter(format!("exponential mean must be > 0, got {t1}")));
        }
        Ok(-t1 * self.uniform().ln())
    }

    /// Standard normal draw (Box-Muller, no caching so consumption is
    /// exactly two uniforms per draw).
    pub fn standard_normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn normal(&mut self, mean: f64, sigma: f64) -> f64 {
        mean + sigma * self.standard_normal()
    }

    /// Poisson draw: Knuth multiplication below lambda = 30, normal
    /// approximation (rounded, clamped at 0) above.
    pub fn poisson(&mut self, lambda: f64) -> Result<u64> {
        if !(lambda >= 0.0) {
            return Err(Error::parameter(format!("Poisson mean must be >= 0, got {lambda}")));
        }
        if lambda > 30.0 {
            let v = lambda + lambda.sqrt() * self.standard_normal();
            return Ok(v.round().max(0.0) as u64);
        }
        let l = (-lambda).exp();
        let mut k = 0u64;
        let mut p = 1.0;
        loop {
            p *= self.uniform();
            if p <= l {
                return Ok(k);
            }
            k += 1;
        }
    }

    /// Lorentzian (Cauchy) draw with the given FWHM, truncated by resampling
    /// at `center ± 50*fwhm` to avoid pathological tail values.
    /// `fwhm = 0` returns `center` exactly.
    pub fn lorentzian(&mut self, center: f64, fwhm: f64) -> Result<f64> {
        if fwhm < 0.0 {
            return Err(Error::parameter(format!("Lorentzian FWHM must be >= 0, got {fwhm}")));
        }
        if fwhm == 0.0 {
            return Ok(center);
        }
        let half = 0.5 * fwhm;
        loop {
            let u = self.uniform();
            let d = half * (std::f64::consts::PI * (u - 0.5)).tan();
            if d.abs() <= 50.0 * fwhm {
                return Ok(center + d);
            }
        }
    }
}
