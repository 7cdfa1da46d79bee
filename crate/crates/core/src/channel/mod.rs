//! Channel covariance models.
//!
//! A continuous-time channel is described by an [`AttenuatedKernel`]: a
//! stationary scattering covariance multiplied by a causal decay profile. The
//! discrete-time channel is the [`CovarianceMatrix`] of `L` taps sampled at
//! delays `l/W`. [`ChannelGeometry`] links the two for the attenuated
//! Ornstein-Uhlenbeck kernel through the time and band energy fractions.

mod geometry;
mod kernel;
mod matrix;

pub use geometry::{geometry_from_fractions, ChannelGeometry};
pub(crate) use kernel::positive;
pub use kernel::{
    ou_kernel, AttenuatedKernel, DecayProfile, ExponentialDecay, KernelDescriptor,
    OrnsteinUhlenbeck, OuParams, StationaryKernel, Uncorrelated,
};
pub use matrix::{
    discretize_kernel, uncorrelated_matrix, CovarianceMatrix, JITTER, NORMALIZED_TRACE,
};
