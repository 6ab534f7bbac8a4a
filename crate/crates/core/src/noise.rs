//! Reproducible Wiener increments in the covariance eigenbasis and the
//! coupling between the full equation and the reduced amplitude SDE.
//!
//! Entry `(step, mode)` of a path is a pure function of `(seed, step, mode)`:
//! each mode owns a ChaCha8 stream selected by its index, and step `j` reads
//! the two 64-bit words at word position `4 j` of that stream, mapped to a
//! standard normal by Box–Muller. Paths can be regenerated in any order and
//! from any thread with bit-identical results.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)] // f64 math comes from libm without std
use num_traits::Float;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{NoiseConvention, ReducedCoefficients};

const WORDS_PER_DRAW: u128 = 4;

/// Table of `n_steps x n_modes` Gaussian increments with variance `dt`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    seed: u64,
    dt: f64,
    n_steps: usize,
    n_modes: usize,
    increments: Vec<f64>,
}

fn stream(seed: u64, mode: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mode as u64);
    rng
}

#[inline]
fn box_muller(rng: &mut ChaCha8Rng) -> f64 {
    // u1 in (0, 1], u2 in [0, 1)
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64);
    let u2 = (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Standard normal keyed by `(seed, step, mode)`.
pub fn standard_normal_at(seed: u64, step: usize, mode: usize) -> f64 {
    let mut rng = stream(seed, mode);
    rng.set_word_pos(WORDS_PER_DRAW * step as u128);
    box_muller(&mut rng)
}

impl NoisePath {
    pub fn generate(seed: u64, dt: f64, n_steps: usize, n_modes: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("dt = {dt} must be positive")));
        }
        if n_steps == 0 || n_modes == 0 {
            return Err(Error::Config("noise path needs at least one step and one mode".into()));
        }
        let scale = dt.sqrt();
        let mut increments = vec![0.0; n_steps * n_modes];
        for mode in 0..n_modes {
            let mut rng = stream(seed, mode);
            for step in 0..n_steps {
                increments[step * n_modes + mode] = scale * box_muller(&mut rng);
            }
        }
        Ok(Self { seed, dt, n_steps, n_modes, increments })
    }

    /// Wraps an existing table (e.g. one read back from an audit dump).
    pub fn from_table(seed: u64, dt: f64, n_steps: usize, n_modes: usize, increments: Vec<f64>) -> Result<Self> {
        if increments.len() != n_steps * n_modes {
            return Err(Error::Shape { expected: n_steps * n_modes, got: increments.len() });
        }
        if !(dt > 0.0) || n_steps == 0 || n_modes == 0 {
            return Err(Error::Config("invalid noise table dimensions".into()));
        }
        Ok(Self { seed, dt, n_steps, n_modes, increments })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// Increments of all modes at one step.
    pub fn row(&self, step: usize) -> &[f64] {
        &self.increments[step * self.n_modes..(step + 1) * self.n_modes]
    }

    pub fn column(&self, mode: usize) -> impl Iterator<Item = f64> + '_ {
        self.increments.iter().skip(mode).step_by(self.n_modes).copied()
    }

    /// Sums consecutive blocks of `factor` steps: the same Brownian path on a grid `factor` times coarser.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.n_steps % factor != 0 {
            return Err(Error::Config(format!("cannot coarsen {} steps by {factor}", self.n_steps)));
        }
        let n_steps = self.n_steps / factor;
        let mut increments = vec![0.0; n_steps * self.n_modes];
        for step in 0..self.n_steps {
            let dst = step / factor;
            for (o, x) in increments[dst * self.n_modes..(dst + 1) * self.n_modes].iter_mut().zip(self.row(step)) {
                *o += x;
            }
        }
        Ok(Self { seed: self.seed, dt: self.dt * factor as f64, n_steps, n_modes: self.n_modes, increments })
    }

    /// Increments of the slow-time process `W~(T) = eps W(T / eps^2)` over blocks
    /// of `block` fast steps; each entry has variance `eps^2 dt block`.
    pub fn rescale(&self, epsilon: f64, block: usize) -> Result<Self> {
        let mut out = self.coarsen(block)?;
        out.increments.iter_mut().for_each(|x| *x *= epsilon);
        out.dt *= epsilon * epsilon;
        Ok(out)
    }

    /// Order-dependent checksum of the rows `0..n_rows`.
    pub fn checksum_rows(&self, n_rows: usize) -> u64 {
        let mut c = Checksum::default();
        for step in 0..n_rows.min(self.n_steps) {
            c.absorb(self.row(step));
        }
        c.value()
    }
}

/// FNV-1a over the bit patterns of consumed increments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checksum(u64);

impl Default for Checksum {
    fn default() -> Self {
        Self(0xcbf2_9ce4_8422_2325)
    }
}

impl Checksum {
    pub fn absorb(&mut self, values: &[f64]) {
        for v in values {
            for byte in v.to_bits().to_le_bytes() {
                self.0 ^= byte as u64;
                self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
            }
        }
    }

    pub fn value(&self) -> u64 {
        self.0
    }
}

/// Scalar increments `d beta` of the standard Brownian motion driving the amplitude SDE.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedPath {
    pub increments: Vec<f64>,
    /// Slow step `eps^2 dt block`.
    pub dt: f64,
    pub block: usize,
    /// `Sigma = 0`: the sequence is identically zero.
    pub degenerate: bool,
    /// Checksum of the fast rows read from the source path.
    pub checksum: u64,
}

impl ReducedPath {
    /// `beta` at the end of each slow step, starting after the first.
    pub fn cumulative(&self) -> Vec<f64> {
        self.increments
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }
}

/// `d beta_j = Sigma^{-1/2} sum_k sqrt(alpha_k) c_k dB~_{k,j}` over slow steps of
/// `block` fast steps, with `dB~ = eps dB`.
pub fn reduce_increments(
    path: &NoisePath,
    coeffs: &ReducedCoefficients,
    epsilon: f64,
    block: usize,
    convention: NoiseConvention,
) -> Result<ReducedPath> {
    let weights = coeffs.weights(convention);
    if path.n_modes() < weights.len() {
        return Err(Error::Config(format!(
            "noise path has {} modes but the truncation needs {}",
            path.n_modes(),
            weights.len()
        )));
    }
    if block == 0 || path.n_steps() % block != 0 {
        return Err(Error::Config(format!("{} fast steps are not a multiple of block {block}", path.n_steps())));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Config(format!("epsilon = {epsilon} must be positive")));
    }
    let sigma = coeffs.noise_strength(convention);
    let n_slow = path.n_steps() / block;
    let mut checksum = Checksum::default();
    let mut increments = vec![0.0; n_slow];
    let degenerate = !(sigma > 0.0);
    let scale = if degenerate { 0.0 } else { epsilon / sigma.sqrt() };
    for step in 0..path.n_steps() {
        let row = path.row(step);
        checksum.absorb(row);
        if !degenerate {
            let s: f64 = weights.iter().zip(row).map(|(w, x)| w * x).sum();
            increments[step / block] += scale * s;
        }
    }
    Ok(ReducedPath {
        increments,
        dt: epsilon * epsilon * path.dt() * block as f64,
        block,
        degenerate,
        checksum: checksum.value(),
    })
}
