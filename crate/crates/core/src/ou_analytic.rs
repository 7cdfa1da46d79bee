//! Closed forms for the attenuated Ornstein-Uhlenbeck channel: the double
//! Laguerre series, the `C_θ` bounds and the wideband approximation.
//!
//! All three rest on the substitution
//! `1/(2ασ̂²(f)) = β₁(β₂ + f²)` with `β₁ = 2π²/(αc(a+b))` and
//! `β₂ = (a+b)²/(4π²)`.

use std::f64::consts::{LN_2, PI};

use crate::capacity_continuous::sigma_hat_ou;
use crate::capacity_discrete::Snr;
use crate::channel::OuParams;
use crate::error::{Error, Result};
use crate::specfun::{laguerre_sequence, upper_gamma_half_scaled, EULER_GAMMA};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesParams {
    pub beta1: f64,
    pub beta2: f64,
}

pub fn series_params(params: &OuParams, snr: Snr) -> SeriesParams {
    let s = params.a + params.b;
    let beta1 = 2.0 * PI * PI / (snr.linear() * params.c * s);
    let beta2 = s * s / (4.0 * PI * PI);
    debug_assert!(
        (beta1 * beta2 / (s / (2.0 * snr.linear() * params.c)) - 1.0).abs() < 1e-14,
        "β₁β₂ identity violated"
    );
    SeriesParams { beta1, beta2 }
}

/// Stopping rules for [`capacity_series`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesControl {
    /// Largest number of outer terms `n` ever summed.
    pub max_outer_terms: usize,
    /// Relative agreement required between successive checkpoints.
    pub target_rel_tol: f64,
    /// Terms in the first checkpoint; later checkpoints double it.
    pub stagnation_window: usize,
}

impl Default for SeriesControl {
    fn default() -> Self {
        Self {
            max_outer_terms: 65_536,
            target_rel_tol: 1e-5,
            stagnation_window: 512,
        }
    }
}

impl SeriesControl {
    pub fn new(
        max_outer_terms: usize,
        target_rel_tol: f64,
        stagnation_window: usize,
    ) -> Result<Self> {
        if max_outer_terms == 0 {
            return Err(Error::Parameter {
                name: "max_outer_terms",
                value: 0.0,
                reason: "must be at least 1",
            });
        }
        if !(target_rel_tol > 0.0) {
            return Err(Error::Parameter {
                name: "target_rel_tol",
                value: target_rel_tol,
                reason: "must be positive",
            });
        }
        Ok(Self {
            max_outer_terms,
            target_rel_tol,
            stagnation_window: stagnation_window.max(1),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesResult {
    /// Last tapered partial sum (bits/s); meaningless unless `converged`.
    pub value: f64,
    pub terms_used: usize,
    pub converged: bool,
}

impl SeriesResult {
    pub fn capacity(&self) -> Option<f64> {
        self.converged.then_some(self.value)
    }
}

/// `C = (W/ln2) Σ_n 1/(n+1) Σ_{k≤n} L_k^{1/2}(β₁W²/4) L_{n−k}^{−1/2}(β₁β₂)/(2k+1)`.
///
/// The outer series converges slowly and with oscillation, so it is summed
/// with a raised-cosine taper: the first half of the terms at full weight,
/// the second half rolled off as `½(1 + cos(π(2n/M − 1)))`. Tapered sums are
/// compared at `M = w, 2w, 4w, …` (`w` the stagnation window), and the
/// series counts as converged once three successive checkpoints agree to
/// `target_rel_tol`. Sums that
/// are non-finite or leave the physically possible range
/// `[0, W·log₂(1 + 2ασ̂²(0))]` are reported as divergent.
pub fn capacity_series(
    params: &OuParams,
    bandwidth: f64,
    snr: Snr,
    ctrl: &SeriesControl,
) -> Result<SeriesResult> {
    let params = OuParams::new(params.a, params.b, params.c)?;
    crate::channel::positive("W", bandwidth)?;
    let sp = series_params(&params, snr);
    let x1 = 0.25 * sp.beta1 * bandwidth * bandwidth;
    let x2 = sp.beta1 * sp.beta2;
    let ceiling = (2.0 * snr.linear() * sigma_hat_ou(&params, 0.0)).ln_1p() / LN_2;

    let mut terms: Vec<f64> = Vec::new();
    let mut previous: Option<f64> = None;
    let mut agreed = false;
    let mut checkpoint = ctrl.stagnation_window.min(ctrl.max_outer_terms);
    loop {
        extend_terms(&mut terms, checkpoint, x1, x2);
        let per_hz = tapered_sum(&terms[..checkpoint]) / LN_2;
        let value = bandwidth * per_hz;
        let diverged = !per_hz.is_finite() || per_hz < 0.0 || per_hz > ceiling;
        let agrees =
            previous.is_some_and(|p| (value - p).abs() <= ctrl.target_rel_tol * value.abs());
        let converged = !diverged && agrees && agreed;
        if diverged || converged || checkpoint >= ctrl.max_outer_terms {
            return Ok(SeriesResult {
                value,
                terms_used: checkpoint,
                converged,
            });
        }
        previous = Some(value);
        agreed = agrees;
        checkpoint = (2 * checkpoint).min(ctrl.max_outer_terms);
    }
}

/// Appends outer terms `t_n = (1/(n+1)) Σ_k A_k B_{n−k}` up to `n < upto`.
fn extend_terms(terms: &mut Vec<f64>, upto: usize, x1: f64, x2: f64) {
    if terms.len() >= upto {
        return;
    }
    let a: Vec<f64> = laguerre_sequence(upto - 1, 0.5, x1)
        .into_iter()
        .enumerate()
        .map(|(k, l)| l / (2 * k + 1) as f64)
        .collect();
    let b = laguerre_sequence(upto - 1, -0.5, x2);
    for n in terms.len()..upto {
        terms.push(compensated_convolution(&a[..=n], &b[..=n]) / (n + 1) as f64);
    }
}

/// `Σ_k a_k b_{n−k}` with four interleaved TwoSum accumulators.
fn compensated_convolution(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = [0.0f64; 4];
    let mut comp = [0.0f64; 4];
    let mut pairs = a.iter().zip(b.iter().rev());
    let body = a.len() / 4 * 4;
    for _ in (0..body).step_by(4) {
        for lane in 0..4 {
            let (x, y) = pairs.next().expect("length checked");
            let v = x * y;
            let t = sum[lane] + v;
            let z = t - sum[lane];
            comp[lane] += (sum[lane] - (t - z)) + (v - z);
            sum[lane] = t;
        }
    }
    let mut tail = 0.0;
    for (x, y) in pairs {
        tail += x * y;
    }
    let parts = [
        sum[0],
        sum[1],
        sum[2],
        sum[3],
        tail,
        comp[0] + comp[1] + comp[2] + comp[3],
    ];
    crate::capacity_discrete::neumaier_sum(&parts)
}

fn tapered_sum(terms: &[f64]) -> f64 {
    let m = terms.len() as f64;
    let weighted: Vec<f64> = terms
        .iter()
        .enumerate()
        .map(|(n, t)| {
            let x = n as f64 / m;
            if x <= 0.5 {
                *t
            } else {
                0.5 * (1.0 + (PI * (2.0 * x - 1.0)).cos()) * t
            }
        })
        .collect();
    crate::capacity_discrete::neumaier_sum(&weighted)
}

/// `C_θ` in bits/s: an upper bound at `θ = 0`, a lower bound at `θ = γ`.
pub fn capacity_bound(params: &OuParams, bandwidth: f64, snr: Snr, theta: f64) -> f64 {
    let sp = series_params(params, snr);
    let alpha = snr.linear();
    let shrink = (-theta).exp();
    let half = 0.5 * bandwidth;
    let edge = bandwidth * (2.0 * shrink * alpha * sigma_hat_ou(params, half)).ln_1p() / LN_2;
    let r2 = sp.beta2.sqrt();
    let r = (sp.beta2 + shrink / sp.beta1).sqrt();
    edge - 4.0 * r2 / LN_2 * (half / r2).atan() + 4.0 * r / LN_2 * (half / r).atan()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CapacityBounds {
    pub lower: f64,
    pub upper: f64,
}

pub fn capacity_bounds(params: &OuParams, bandwidth: f64, snr: Snr) -> CapacityBounds {
    CapacityBounds {
        lower: capacity_bound(params, bandwidth, snr, EULER_GAMMA),
        upper: capacity_bound(params, bandwidth, snr, 0.0),
    }
}

/// `C_≈ = (π/(ln2·√β₁))·e^(β₁β₂) Γ(1/2, β₁β₂)` in bits/s: the capacity
/// integral taken over all frequencies.
pub fn capacity_wideband_approx(params: &OuParams, snr: Snr) -> f64 {
    let sp = series_params(params, snr);
    let z = sp.beta1 * sp.beta2;
    PI / (LN_2 * sp.beta1.sqrt()) * upper_gamma_half_scaled(z).expect("β₁β₂ is positive")
}
