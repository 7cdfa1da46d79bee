use std::f64::consts::PI;

use super::kernel::{positive, OuParams};
use crate::error::{Error, Result};

/// Constants tying the continuous Ornstein-Uhlenbeck channel to its sampled
/// discrete-time counterpart.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelGeometry {
    /// Correlation decay rate `a` (1/s).
    pub a: f64,
    /// Power decay rate `b` (1/s).
    pub b: f64,
    /// Fraction `ε` of mean energy inside `[0, T_d]`.
    pub eps: f64,
    /// Fraction `ε̂` of mean energy inside the band `[−W/2, W/2]`.
    pub eps_hat: f64,
    /// Delay spread `T_d = −ln(1−ε)/(2b)` (s).
    pub delay_spread: f64,
    /// Bandwidth `W = ((a+b)/π)·tan(πε̂/2)` (Hz).
    pub bandwidth: f64,
    /// Tap count `L = ⌊W·T_d⌋ + 1`.
    pub taps: usize,
    /// Energy constant `c = W/ε̂`, which puts unit mean power per Hz in band.
    pub energy: f64,
}

/// Derives delay spread, bandwidth, tap count and energy constant from the
/// energy fractions.
pub fn geometry_from_fractions(a: f64, b: f64, eps: f64, eps_hat: f64) -> Result<ChannelGeometry> {
    positive("a", a)?;
    positive("b", b)?;
    fraction("eps", eps)?;
    fraction("eps_hat", eps_hat)?;

    let delay_spread = -(1.0 - eps).ln() / (2.0 * b);
    let bandwidth = (a + b) / PI * (0.5 * PI * eps_hat).tan();
    let taps = (bandwidth * delay_spread).floor() as usize + 1;
    Ok(ChannelGeometry {
        a,
        b,
        eps,
        eps_hat,
        delay_spread,
        bandwidth,
        taps,
        energy: bandwidth / eps_hat,
    })
}

impl ChannelGeometry {
    pub fn ou_params(&self) -> OuParams {
        OuParams {
            a: self.a,
            b: self.b,
            c: self.energy,
        }
    }

    /// `ε̂` recovered from the bandwidth: `(2/π)·arctan(πW/(a+b))`.
    pub fn band_fraction(&self) -> f64 {
        2.0 / PI * (PI * self.bandwidth / (self.a + self.b)).atan()
    }
}

fn fraction(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            function: name,
            value,
            expected: "fraction in (0, 1)",
        })
    }
}
