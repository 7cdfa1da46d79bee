//! Exact ergodic capacity of the discrete-time channel with `N` DFT
//! sub-carriers.

use std::f64::consts::{LN_2, PI};

use rayon::prelude::*;

use crate::channel::CovarianceMatrix;
use crate::error::{Error, Result};
use crate::specfun::e1_scaled;

/// Rounding slack below zero tolerated in a spectral variance.
pub const NEGATIVE_VARIANCE_SLACK: f64 = 1e-12;

/// Average signal-to-noise ratio, stored linearly.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Snr(f64);

impl Snr {
    pub fn new(linear: f64) -> Result<Self> {
        if linear > 0.0 && linear.is_finite() {
            Ok(Self(linear))
        } else {
            Err(Error::Parameter {
                name: "alpha",
                value: linear,
                reason: "SNR must be finite and positive",
            })
        }
    }

    pub fn from_db(db: f64) -> Result<Self> {
        Self::new(10f64.powf(db / 10.0))
    }

    pub fn linear(self) -> f64 {
        self.0
    }

    pub fn db(self) -> f64 {
        10.0 * self.0.log10()
    }
}

/// Per-sub-carrier variances `σ̂²_n`, `n = 0..N`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralVarianceVector {
    values: Vec<f64>,
}

impl SpectralVarianceVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// `σ̂²_n = d₀ + 2 Σ_m d_m cos(2πmn/N)` from the diagonal sums of `Γ`.
pub fn spectral_variances(gamma: &CovarianceMatrix, n: usize) -> Result<SpectralVarianceVector> {
    let taps = gamma.dim();
    if n < taps {
        return Err(Error::Aliasing {
            subcarriers: n,
            taps,
        });
    }
    let d = gamma.diagonal_sums();
    let values = (0..n)
        .into_par_iter()
        .map(|k| {
            let mut s = 0.0;
            for (m, dm) in d.iter().enumerate().skip(1) {
                // reduce the phase index mod N to keep the cosine argument small
                let phase = ((m * k) % n) as f64 / n as f64;
                s += dm * (2.0 * PI * phase).cos();
            }
            let v = d[0] + 2.0 * s;
            if v >= 0.0 {
                Ok(v)
            } else if v >= -NEGATIVE_VARIANCE_SLACK {
                Ok(0.0)
            } else {
                Err(Error::NegativeVariance {
                    value: v,
                    location: k as f64,
                })
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(SpectralVarianceVector { values })
}

/// `e^x E₁(x)/ln2` at `x = 1/(2ασ̂²)`, zero for a silent sub-carrier.
pub(crate) fn capacity_term(variance: f64, alpha: f64) -> f64 {
    if variance <= 0.0 {
        return 0.0;
    }
    let x = 1.0 / (2.0 * alpha * variance);
    if !x.is_finite() {
        return 0.0;
    }
    e1_scaled(x).expect("argument is positive") / LN_2
}

/// Capacity averaged over the given sub-carrier variances (bits/s/Hz).
pub fn capacity_from_variances(variances: &SpectralVarianceVector, snr: Snr) -> f64 {
    let alpha = snr.linear();
    let terms: Vec<f64> = variances
        .values
        .par_iter()
        .map(|&v| capacity_term(v, alpha))
        .collect();
    neumaier_sum(&terms) / terms.len() as f64
}

/// `C_N = (1/(N ln2)) Σ_n e^(x_n) E₁(x_n)`, `x_n = 1/(2ασ̂²_n)` (bits/s/Hz).
pub fn ergodic_capacity_discrete(gamma: &CovarianceMatrix, n: usize, snr: Snr) -> Result<f64> {
    let variances = spectral_variances(gamma, n)?;
    Ok(capacity_from_variances(&variances, snr))
}

/// Flat Rayleigh fading capacity `e^(1/α) E₁(1/α)/ln2`, which is also the
/// capacity of any uncorrelated-scattering channel.
pub fn capacity_uncorrelated(snr: Snr) -> f64 {
    e1_scaled(1.0 / snr.linear()).expect("argument is positive") / LN_2
}

/// `log₂(1+α)`.
pub fn capacity_awgn(snr: Snr) -> f64 {
    snr.linear().ln_1p() / LN_2
}

pub(crate) fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
