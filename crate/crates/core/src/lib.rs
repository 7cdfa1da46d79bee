//! Ergodic capacity of frequency-selective Rayleigh fading channels with
//! correlated scattering.
//!
//! The crate covers two channel descriptions that share one capacity formula:
//!
//! * a continuous-time impulse response, described by a covariance kernel
//!   `Cov(τ, τ') = C̃(τ − τ') g(τ) g(τ')` ([`channel`], [`capacity_continuous`]);
//! * a discrete-time tap vector with covariance matrix `Γ` split into `N`
//!   DFT sub-carriers ([`channel::CovarianceMatrix`], [`capacity_discrete`]).
//!
//! In both cases the capacity is an average of `e^x E₁(x)` evaluated at
//! `x = 1/(2ασ̂²)`, where `σ̂²` is the per-frequency variance of the channel
//! spectrum. The exponentially attenuated Ornstein-Uhlenbeck kernel gets a
//! dedicated treatment in [`ou_analytic`] (Laguerre series, closed-form
//! bounds and a wideband approximation), and [`montecarlo`] provides an
//! independent stochastic estimate used to cross-check all closed forms.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity_continuous;
pub mod capacity_discrete;
pub mod channel;
pub mod cli;
mod error;
mod linalg;
pub mod montecarlo;
pub mod ou_analytic;
pub mod quadrature;
pub mod selftest;
pub mod specfun;

pub use capacity_discrete::Snr;
pub use channel::{ChannelGeometry, CovarianceMatrix, OuParams};
pub use error::{Error, Result};
