//! Counter-based random numbers (Philox4x32-10).
//!
//! Every random quantity in the crate is a pure function of a 64-bit key and
//! a 128-bit counter, so a number can be regenerated from its address alone:
//! Wiener increments are addressed by (path seed, global step index, component)
//! and never depend on how many numbers were drawn before them or on which
//! worker computed them.

use std::f64::consts::PI;

const M0: u32 = 0xD251_1F53;
const M1: u32 = 0xCD9E_8D57;
const W0: u32 = 0x9E37_79B9;
const W1: u32 = 0xBB67_AE85;

/// Counter word 3 tags the purpose of a draw so streams never overlap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum Domain {
    Wiener = 0,
    InitialLaw = 1,
    PathSeed = 2,
    Sampling = 3,
}

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = a as u64 * b as u64;
    ((p >> 32) as u32, p as u32)
}

/// The Philox4x32 bijection with 10 rounds.
pub fn philox4x32(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let mut k = key;
    for round in 0..10 {
        if round > 0 {
            k[0] = k[0].wrapping_add(W0);
            k[1] = k[1].wrapping_add(W1);
        }
        let (hi0, lo0) = mulhilo(M0, c[0]);
        let (hi1, lo1) = mulhilo(M1, c[2]);
        c = [hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0];
    }
    c
}

#[inline]
fn split(x: u64) -> (u32, u32) {
    (x as u32, (x >> 32) as u32)
}

/// 128 random bits at (key, a, b, domain).
#[inline]
pub fn block(key: u64, a: u64, b: u32, domain: Domain) -> [u32; 4] {
    let (k0, k1) = split(key);
    let (a0, a1) = split(a);
    philox4x32([a0, a1, b, domain as u32], [k0, k1])
}

/// Uniform in the open interval (0, 1) from 64 bits.
#[inline]
fn open_unit(hi: u32, lo: u32) -> f64 {
    let bits = (((hi as u64) << 32) | lo as u64) >> 11;
    (bits as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Two independent standard normals by Box–Muller.
#[inline]
pub fn normal_pair(key: u64, a: u64, b: u32, domain: Domain) -> (f64, f64) {
    let w = block(key, a, b, domain);
    let u1 = open_unit(w[0], w[1]);
    let u2 = open_unit(w[2], w[3]);
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (2.0 * PI * u2).sin_cos();
    (r * c, r * s)
}

/// Fill `out` with standard normals addressed by (key, a, component index).
pub fn fill_normals(key: u64, a: u64, domain: Domain, out: &mut [f64]) {
    let mut j = 0;
    while j < out.len() {
        let (z0, z1) = normal_pair(key, a, (j / 2) as u32, domain);
        out[j] = z0;
        if j + 1 < out.len() {
            out[j + 1] = z1;
        }
        j += 2;
    }
}

/// Seed of path `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let w = block(master, index, 0, Domain::PathSeed);
    ((w[1] as u64) << 32) | w[0] as u64
}

/// Sequential draws for auxiliary sampling (pair generation, resampling).
/// Still counter-based: the n-th draw of a stream is fixed by (key, stream, n).
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    stream: u32,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64, stream: u32) -> Self {
        Self {
            key,
            stream,
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        let w = block(self.key, self.counter, self.stream, Domain::Sampling);
        self.counter += 1;
        ((w[1] as u64) << 32) | w[0] as u64
    }

    pub fn uniform(&mut self) -> f64 {
        let w = block(self.key, self.counter, self.stream, Domain::Sampling);
        self.counter += 1;
        open_unit(w[0], w[1])
    }

    pub fn normal(&mut self) -> f64 {
        let (z, _) = normal_pair(self.key, self.counter, self.stream, Domain::Sampling);
        self.counter += 1;
        z
    }

    /// Uniform integer in `0..n` (Lemire's multiply-shift, negligible bias for small n).
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }
}
