//! Monte Carlo estimate of `C_N = E[(1/N) Σ_n log₂(1 + α|Ĥ_n|²)]`.
//!
//! Channel vectors `H = X + jY` are drawn with `X = F z₁`, `Y = F z₂`, where
//! `F Fᵀ = Γ`. Samples are produced in fixed-size blocks; block `k` draws from
//! the ChaCha8 stream `k` of the run seed, and block statistics are merged in
//! block order. Results therefore depend only on the seed, not on how many
//! threads run the blocks.

use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::capacity_discrete::Snr;
use crate::channel::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::linalg::{default_tolerance, pivoted_cholesky};

/// Samples per block.
pub const BLOCK_SIZE: usize = 4096;

/// Tap counts above this use the FFT in [`DftMethod::Auto`].
const DIRECT_DFT_MAX_TAPS: usize = 32;

/// `F` with `F Fᵀ = Γ`; trailing columns beyond `rank` are zero.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    dim: usize,
    rank: usize,
    factor: Vec<f64>,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.factor[i * self.dim + k]
    }

    /// Max-norm of `F Fᵀ − Γ`.
    pub fn reconstruction_error(&self, gamma: &CovarianceMatrix) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for i in 0..n {
            for k in 0..n {
                let v: f64 = (0..self.rank)
                    .map(|m| self.get(i, m) * self.get(k, m))
                    .sum();
                worst = worst.max((v - gamma.get(i, k)).abs());
            }
        }
        worst
    }

    /// `F z` for `z` of length `rank`.
    fn apply(&self, z: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.factor[i * self.dim..i * self.dim + self.rank];
            *o = row.iter().zip(z).map(|(f, z)| f * z).sum();
        }
    }
}

pub fn cholesky_factor(gamma: &CovarianceMatrix) -> Result<CholeskyFactor> {
    let n = gamma.dim();
    let f = pivoted_cholesky(gamma.entries(), n, default_tolerance(gamma.entries(), n))?;
    Ok(CholeskyFactor {
        dim: f.dim,
        rank: f.rank,
        factor: f.factor,
    })
}

/// One draw of the tap vector `H = X + jY`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSample {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl ChannelSample {
    pub fn zeros(taps: usize) -> Self {
        Self {
            re: vec![0.0; taps],
            im: vec![0.0; taps],
        }
    }

    pub fn draw<R: Rng>(factor: &CholeskyFactor, rng: &mut R) -> Self {
        let mut s = Self::zeros(factor.dim());
        let mut z = vec![0.0; factor.rank()];
        s.redraw(factor, rng, &mut z);
        s
    }

    fn redraw<R: Rng>(&mut self, factor: &CholeskyFactor, rng: &mut R, z: &mut [f64]) {
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        factor.apply(z, &mut self.re);
        z.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        factor.apply(z, &mut self.im);
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DftMethod {
    /// `Σ_l H_l e^(−j2πnl/N)` from a twiddle table, `O(N·L)`.
    Direct,
    /// Zero-padded length-`N` FFT.
    Fft,
    /// Direct for short tap vectors, FFT otherwise.
    Auto,
}

/// Evaluates `|Ĥ_n|²`, `Ĥ_n = Σ_l H_l e^(−j2πnl/N)`, for a fixed `(L, N)`.
#[derive(Clone)]
pub struct SpectrumEvaluator {
    taps: usize,
    n: usize,
    method: DftMethod,
    twiddles: Vec<(f64, f64)>,
    fft: Option<Arc<dyn Fft<f64>>>,
}

impl std::fmt::Debug for SpectrumEvaluator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumEvaluator")
            .field("taps", &self.taps)
            .field("n", &self.n)
            .field("method", &self.method)
            .finish()
    }
}

impl SpectrumEvaluator {
    pub fn new(taps: usize, n: usize, method: DftMethod) -> Result<Self> {
        if n < taps {
            return Err(Error::Aliasing {
                subcarriers: n,
                taps,
            });
        }
        let method = match method {
            DftMethod::Auto if taps <= DIRECT_DFT_MAX_TAPS => DftMethod::Direct,
            DftMethod::Auto => DftMethod::Fft,
            m => m,
        };
        let (twiddles, fft) = match method {
            DftMethod::Direct => {
                let t = (0..n)
                    .map(|m| {
                        let phase = 2.0 * PI * m as f64 / n as f64;
                        (phase.cos(), -phase.sin())
                    })
                    .collect();
                (t, None)
            }
            _ => (Vec::new(), Some(FftPlanner::new().plan_fft_forward(n))),
        };
        Ok(Self {
            taps,
            n,
            method,
            twiddles,
            fft,
        })
    }

    pub fn method(&self) -> DftMethod {
        self.method
    }

    /// Writes `|Ĥ_n|²` into `out` (length `N`); `scratch` is reused storage.
    pub fn power(&self, sample: &ChannelSample, out: &mut [f64], scratch: &mut Vec<Complex<f64>>) {
        match &self.fft {
            None => {
                for (k, o) in out.iter_mut().enumerate() {
                    let (mut re, mut im) = (0.0, 0.0);
                    for l in 0..self.taps {
                        let (c, s) = self.twiddles[(k * l) % self.n];
                        re += sample.re[l] * c - sample.im[l] * s;
                        im += sample.re[l] * s + sample.im[l] * c;
                    }
                    *o = re * re + im * im;
                }
            }
            Some(fft) => {
                scratch.clear();
                scratch.extend((0..self.taps).map(|l| Complex::new(sample.re[l], sample.im[l])));
                scratch.resize(self.n, Complex::new(0.0, 0.0));
                fft.process(scratch);
                for (o, v) in out.iter_mut().zip(scratch.iter()) {
                    *o = v.norm_sqr();
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityEstimate {
    /// bits/s/Hz
    pub mean: f64,
    /// Standard error of `mean`.
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Running mean and sum of squared deviations.
#[derive(Clone, Copy, Debug, Default)]
struct Welford {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Welford {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(&mut self, other: &Welford) {
        if other.count == 0.0 {
            return;
        }
        let total = self.count + other.count;
        let d = other.mean - self.mean;
        self.mean += d * other.count / total;
        self.m2 += other.m2 + d * d * self.count * other.count / total;
        self.count = total;
    }

    fn stderr(&self) -> f64 {
        (self.m2 / (self.count - 1.0)).sqrt() / self.count.sqrt()
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

fn block_ranges(samples: usize) -> Vec<(usize, usize)> {
    (0..samples.div_ceil(BLOCK_SIZE))
        .map(|b| (b, BLOCK_SIZE.min(samples - b * BLOCK_SIZE)))
        .collect()
}

/// Estimates `C_N` at one SNR.
pub fn estimate_capacity(
    gamma: &CovarianceMatrix,
    n: usize,
    snr: Snr,
    samples: usize,
    seed: u64,
) -> Result<CapacityEstimate> {
    Ok(estimate_capacity_curve(gamma, n, &[snr], samples, seed)?[0])
}

/// Estimates `C_N` on an SNR grid; every grid point sees the same channel
/// draws.
pub fn estimate_capacity_curve(
    gamma: &CovarianceMatrix,
    n: usize,
    snrs: &[Snr],
    samples: usize,
    seed: u64,
) -> Result<Vec<CapacityEstimate>> {
    if samples < 2 {
        return Err(Error::Parameter {
            name: "samples",
            value: samples as f64,
            reason: "need at least 2 samples",
        });
    }
    let factor = cholesky_factor(gamma)?;
    let evaluator = SpectrumEvaluator::new(gamma.dim(), n, DftMethod::Auto)?;
    let alphas: Vec<f64> = snrs.iter().map(|s| s.linear()).collect();

    let blocks: Vec<Vec<Welford>> = block_ranges(samples)
        .into_par_iter()
        .map(|(block, count)| {
            let mut rng = block_rng(seed, block);
            let mut acc = vec![Welford::default(); alphas.len()];
            let mut sample = ChannelSample::zeros(gamma.dim());
            let mut z = vec![0.0; factor.rank()];
            let mut power = vec![0.0; n];
            let mut scratch = Vec::with_capacity(n);
            for _ in 0..count {
                sample.redraw(&factor, &mut rng, &mut z);
                evaluator.power(&sample, &mut power, &mut scratch);
                for (w, alpha) in acc.iter_mut().zip(&alphas) {
                    let total: f64 = power.iter().map(|p| (alpha * p).ln_1p()).sum();
                    w.push(total / (n as f64 * LN_2));
                }
            }
            acc
        })
        .collect();

    let mut merged = vec![Welford::default(); alphas.len()];
    for block in &blocks {
        for (m, b) in merged.iter_mut().zip(block) {
            m.merge(b);
        }
    }
    Ok(merged
        .iter()
        .map(|w| CapacityEstimate {
            mean: w.mean,
            stderr: w.stderr(),
            samples,
            seed,
        })
        .collect())
}

/// Empirical moments of drawn tap vectors, for checking the sampler.
#[derive(Clone, Debug)]
pub struct TapStatistics {
    pub dim: usize,
    pub samples: usize,
    /// Row-major `Γ̂`, averaged over real and imaginary parts.
    pub covariance: Vec<f64>,
    /// Per tap `E|H_l| / √Var|H_l|`.
    pub rayleigh_ratio: Vec<f64>,
    /// Standard error of each ratio from per-block estimates.
    pub rayleigh_ratio_stderr: Vec<f64>,
}

/// `E|H|/√Var|H|` for a Rayleigh variable.
pub fn rayleigh_ratio() -> f64 {
    (PI / (4.0 - PI)).sqrt()
}

impl TapStatistics {
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.covariance[i * self.dim + k]
    }

    /// `max |Γ̂ − Γ|`.
    pub fn max_deviation(&self, gamma: &CovarianceMatrix) -> f64 {
        self.covariance
            .iter()
            .zip(gamma.entries())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    pub fn correlation(&self, i: usize, k: usize) -> f64 {
        self.get(i, k) / (self.get(i, i) * self.get(k, k)).sqrt()
    }

    /// Every tap with power passes `|ratio − √(π/(4−π))| ≤ 3·stderr`.
    pub fn rayleigh_consistent(&self) -> bool {
        self.rayleigh_ratio
            .iter()
            .zip(&self.rayleigh_ratio_stderr)
            .filter(|(r, _)| r.is_finite())
            .all(|(r, s)| (r - rayleigh_ratio()).abs() <= 3.0 * s)
    }
}

#[derive(Clone, Debug)]
struct TapBlock {
    cross: Vec<f64>,
    abs: Vec<f64>,
    abs2: Vec<f64>,
    count: usize,
}

pub fn estimate_tap_statistics(
    gamma: &CovarianceMatrix,
    samples: usize,
    seed: u64,
) -> Result<TapStatistics> {
    let l = gamma.dim();
    if samples < 10 * l * l || samples < 2 * BLOCK_SIZE {
        return Err(Error::Parameter {
            name: "samples",
            value: samples as f64,
            reason: "need at least max(10·L², 2 blocks) samples",
        });
    }
    let factor = cholesky_factor(gamma)?;
    let blocks: Vec<TapBlock> = block_ranges(samples)
        .into_par_iter()
        .map(|(block, count)| {
            let mut rng = block_rng(seed, block);
            let mut b = TapBlock {
                cross: vec![0.0; l * l],
                abs: vec![0.0; l],
                abs2: vec![0.0; l],
                count,
            };
            let mut s = ChannelSample::zeros(l);
            let mut z = vec![0.0; factor.rank()];
            for _ in 0..count {
                s.redraw(&factor, &mut rng, &mut z);
                for i in 0..l {
                    for k in 0..l {
                        b.cross[i * l + k] += s.re[i] * s.re[k] + s.im[i] * s.im[k];
                    }
                    let m2 = s.re[i] * s.re[i] + s.im[i] * s.im[i];
                    b.abs[i] += m2.sqrt();
                    b.abs2[i] += m2;
                }
            }
            b
        })
        .collect();

    let mut cross = vec![0.0; l * l];
    let (mut abs, mut abs2) = (vec![0.0; l], vec![0.0; l]);
    for b in &blocks {
        cross.iter_mut().zip(&b.cross).for_each(|(x, y)| *x += y);
        abs.iter_mut().zip(&b.abs).for_each(|(x, y)| *x += y);
        abs2.iter_mut().zip(&b.abs2).for_each(|(x, y)| *x += y);
    }
    let total = samples as f64;
    let covariance = cross.iter().map(|v| v / (2.0 * total)).collect();
    let ratio = |sum: f64, sum2: f64, count: f64| {
        let mean = sum / count;
        mean / (sum2 / count - mean * mean).sqrt()
    };
    let rayleigh_ratio: Vec<f64> = (0..l).map(|i| ratio(abs[i], abs2[i], total)).collect();

    let full: Vec<&TapBlock> = blocks.iter().filter(|b| b.count == BLOCK_SIZE).collect();
    let batches = full.len() as f64;
    let rayleigh_ratio_stderr = (0..l)
        .map(|i| {
            let per: Vec<f64> = full
                .iter()
                .map(|b| ratio(b.abs[i], b.abs2[i], b.count as f64))
                .collect();
            let mean = per.iter().sum::<f64>() / batches;
            let var = per.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (batches - 1.0);
            (var / batches).sqrt()
        })
        .collect();

    Ok(TapStatistics {
        dim: l,
        samples,
        covariance,
        rayleigh_ratio,
        rayleigh_ratio_stderr,
    })
}
