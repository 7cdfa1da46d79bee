use std::fmt::Debug;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Name and parameters of a kernel, for reports.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelDescriptor {
    pub name: &'static str,
    pub params: Vec<(&'static str, f64)>,
}

/// Stationary covariance `C̃(Δτ)` of the un-attenuated scattering process.
///
/// Implementations must be even, bounded by `C̃(0) > 0`, and continuous
/// wherever they are used in a continuous-time integral.
pub trait StationaryKernel: Debug + Send + Sync {
    fn eval(&self, lag: f64) -> f64;
    fn descriptor(&self) -> KernelDescriptor;
}

/// Delay-power decay `u(τ)`, applied as `g(τ) = u(τ)·1[τ >= 0]`.
pub trait DecayProfile: Debug + Send + Sync {
    /// `u(τ)` for `τ >= 0`.
    fn amplitude(&self, tau: f64) -> f64;

    /// `∫₀^∞ u(τ)² dτ`.
    fn squared_integral(&self) -> f64;

    fn descriptor(&self) -> KernelDescriptor;

    /// `g(τ)`: zero for negative delays.
    fn eval(&self, tau: f64) -> f64 {
        if tau < 0.0 {
            0.0
        } else {
            self.amplitude(tau)
        }
    }
}

/// Normalized Ornstein-Uhlenbeck covariance `e^(−a|Δτ|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrnsteinUhlenbeck {
    rate: f64,
}

impl OrnsteinUhlenbeck {
    pub fn new(rate: f64) -> Result<Self> {
        positive("a", rate)?;
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl StationaryKernel for OrnsteinUhlenbeck {
    fn eval(&self, lag: f64) -> f64 {
        (-self.rate * lag.abs()).exp()
    }

    fn descriptor(&self) -> KernelDescriptor {
        KernelDescriptor {
            name: "ornstein-uhlenbeck",
            params: vec![("a", self.rate)],
        }
    }
}

/// The `a → ∞` limit of the Ornstein-Uhlenbeck kernel taken pointwise: one at
/// zero lag, zero elsewhere. Only meaningful once the kernel is sampled on a
/// delay grid, where it yields uncorrelated taps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Uncorrelated;

impl StationaryKernel for Uncorrelated {
    fn eval(&self, lag: f64) -> f64 {
        if lag == 0.0 {
            1.0
        } else {
            0.0
        }
    }

    fn descriptor(&self) -> KernelDescriptor {
        KernelDescriptor {
            name: "uncorrelated",
            params: Vec::new(),
        }
    }
}

/// `u(τ) = √(bc)·e^(−bτ)`, so that `2∫u² = c`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentialDecay {
    rate: f64,
    energy: f64,
}

impl ExponentialDecay {
    pub fn new(rate: f64, energy: f64) -> Result<Self> {
        positive("b", rate)?;
        positive("c", energy)?;
        Ok(Self { rate, energy })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

impl DecayProfile for ExponentialDecay {
    fn amplitude(&self, tau: f64) -> f64 {
        (self.rate * self.energy).sqrt() * (-self.rate * tau).exp()
    }

    fn squared_integral(&self) -> f64 {
        0.5 * self.energy
    }

    fn descriptor(&self) -> KernelDescriptor {
        KernelDescriptor {
            name: "exponential",
            params: vec![("b", self.rate), ("c", self.energy)],
        }
    }
}

/// Non-stationary covariance `Cov(τ, τ') = C̃(τ − τ')·g(τ)·g(τ')` shared by
/// the real and imaginary parts of the impulse response.
#[derive(Clone, Debug)]
pub struct AttenuatedKernel {
    base: Arc<dyn StationaryKernel>,
    decay: Arc<dyn DecayProfile>,
    energy: f64,
}

impl AttenuatedKernel {
    pub fn new(base: Arc<dyn StationaryKernel>, decay: Arc<dyn DecayProfile>) -> Self {
        let energy = 2.0 * base.eval(0.0) * decay.squared_integral();
        Self {
            base,
            decay,
            energy,
        }
    }

    pub fn cov(&self, tau: f64, tau_prime: f64) -> f64 {
        let (tau, tau_prime) = if tau <= tau_prime {
            (tau, tau_prime)
        } else {
            (tau_prime, tau)
        };
        let g = self.decay.eval(tau);
        let g_prime = self.decay.eval(tau_prime);
        if g == 0.0 || g_prime == 0.0 {
            return 0.0;
        }
        self.base.eval(tau - tau_prime) * g * g_prime
    }

    /// Mean energy `c = 2∫Cov(τ, τ) dτ`.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn base(&self) -> &dyn StationaryKernel {
        self.base.as_ref()
    }

    pub fn decay(&self) -> &dyn DecayProfile {
        self.decay.as_ref()
    }
}

/// Parameters of the attenuated Ornstein-Uhlenbeck covariance
/// `Cov(τ, τ') = c·e^(−a|τ−τ'|)·b·e^(−b(τ+τ'))` on `τ, τ' >= 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OuParams {
    /// Correlation decay rate (1/s).
    pub a: f64,
    /// Power decay rate (1/s).
    pub b: f64,
    /// Mean energy constant.
    pub c: f64,
}

impl OuParams {
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        positive("a", a)?;
        positive("b", b)?;
        positive("c", c)?;
        Ok(Self { a, b, c })
    }

    /// Closed-form covariance.
    pub fn cov(&self, tau: f64, tau_prime: f64) -> f64 {
        if tau < 0.0 || tau_prime < 0.0 {
            return 0.0;
        }
        let (tau, tau_prime) = if tau <= tau_prime {
            (tau, tau_prime)
        } else {
            (tau_prime, tau)
        };
        self.c
            * (-self.a * (tau - tau_prime).abs()).exp()
            * self.b
            * (-self.b * (tau + tau_prime)).exp()
    }

    /// Delay after which at most `tail` of the energy remains:
    /// `c·e^(−2bT) = tail·c`.
    pub fn truncation_delay(&self, tail: f64) -> f64 {
        -tail.ln() / (2.0 * self.b)
    }
}

/// Builds the attenuated Ornstein-Uhlenbeck kernel for `params`.
pub fn ou_kernel(params: OuParams) -> Result<AttenuatedKernel> {
    let params = OuParams::new(params.a, params.b, params.c)?;
    Ok(AttenuatedKernel::new(
        Arc::new(OrnsteinUhlenbeck::new(params.a)?),
        Arc::new(ExponentialDecay::new(params.b, params.c)?),
    ))
}

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter {
            name,
            value,
            reason: "must be finite and positive",
        })
    }
}
