//! Ergodic capacity of the continuous-time channel by quadrature over
//! frequency.

use std::f64::consts::{LN_2, PI};

use crate::capacity_discrete::{capacity_term, Snr};
use crate::channel::{AttenuatedKernel, OuParams};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, try_integrate, QuadratureSpec};
use crate::specfun::e1_scaled;

/// Energy fraction left outside the truncation delay for OU spectra
/// evaluated by generic quadrature.
pub const OU_TAIL_FRACTION: f64 = 1e-9;

/// How a spectral variance is obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Provenance {
    ClosedFormOu,
    GenericQuadrature,
    Flat,
}

/// Per-frequency variance `σ̂²(f)` of the real part of the channel spectrum.
/// Implementations are even in `f` and nonnegative.
pub trait SpectralVariance: Sync {
    fn sigma_hat(&self, f: f64) -> Result<f64>;
    fn provenance(&self) -> Provenance;
}

/// `σ̂²(f) = c(a+b)/((a+b)² + (2πf)²)`.
pub fn sigma_hat_ou(params: &OuParams, f: f64) -> f64 {
    let s = params.a + params.b;
    let w = 2.0 * PI * f;
    params.c * s / (s * s + w * w)
}

/// `σ̂²(f) = ∫∫ Cov(τ, τ') cos(2π(τ−τ')f) dτ dτ'` over `[0, T_max]²`.
///
/// The integrand is symmetric under `τ ↔ τ'`, so only the triangle
/// `τ' ≤ τ` is integrated; its diagonal edge carries the kernel's kink.
pub fn sigma_hat_generic(
    kernel: &AttenuatedKernel,
    f: f64,
    t_max: f64,
    quad: &QuadratureSpec,
) -> Result<f64> {
    crate::channel::positive("T_max", t_max)?;
    let inner_spec = quad.tightened(1e-2);
    let omega = 2.0 * PI * f;
    let outer = try_integrate(
        |tau| {
            integrate(
                |tau_p| kernel.cov(tau, tau_p) * (omega * (tau - tau_p)).cos(),
                0.0,
                tau,
                &inner_spec,
            )
            .map(|r| r.value)
        },
        0.0,
        t_max,
        quad,
    )?;
    let value = 2.0 * outer.value;
    let error = 2.0 * outer.error;
    if value >= 0.0 {
        Ok(value)
    } else if -value <= error.max(quad.abs_tol) {
        Ok(0.0)
    } else {
        Err(Error::NegativeVariance { value, location: f })
    }
}

/// Closed-form attenuated Ornstein-Uhlenbeck spectrum.
#[derive(Clone, Copy, Debug)]
pub struct OuSpectrum(pub OuParams);

impl SpectralVariance for OuSpectrum {
    fn sigma_hat(&self, f: f64) -> Result<f64> {
        Ok(sigma_hat_ou(&self.0, f))
    }

    fn provenance(&self) -> Provenance {
        Provenance::ClosedFormOu
    }
}

/// Spectrum of an arbitrary kernel by 2-D quadrature.
#[derive(Clone, Debug)]
pub struct GenericSpectrum {
    pub kernel: AttenuatedKernel,
    pub t_max: f64,
    pub quad: QuadratureSpec,
}

impl GenericSpectrum {
    /// Generic-quadrature spectrum of the OU kernel, truncated where the tail
    /// energy drops below [`OU_TAIL_FRACTION`].
    pub fn ou(params: OuParams, quad: QuadratureSpec) -> Result<Self> {
        Ok(Self {
            kernel: crate::channel::ou_kernel(params)?,
            t_max: params.truncation_delay(OU_TAIL_FRACTION),
            quad,
        })
    }
}

impl SpectralVariance for GenericSpectrum {
    fn sigma_hat(&self, f: f64) -> Result<f64> {
        sigma_hat_generic(&self.kernel, f, self.t_max, &self.quad)
    }

    fn provenance(&self) -> Provenance {
        Provenance::GenericQuadrature
    }
}

/// Frequency-independent spectrum.
#[derive(Clone, Copy, Debug)]
pub struct FlatSpectrum(pub f64);

impl SpectralVariance for FlatSpectrum {
    fn sigma_hat(&self, _f: f64) -> Result<f64> {
        Ok(self.0)
    }

    fn provenance(&self) -> Provenance {
        Provenance::Flat
    }
}

/// `e^x E₁(x)/ln2` at `x = 1/(2ασ̂²)`; zero where `σ̂² = 0`.
pub fn capacity_integrand(variance: f64, snr: Snr) -> f64 {
    capacity_term(variance, snr.linear())
}

/// `C = ∫_{−W/2}^{W/2} e^x E₁(x)/ln2 df`, `x = 1/(2ασ̂²(f))`, in bits/s.
/// The integrand is even, so `[0, W/2]` is integrated and doubled.
pub fn ergodic_capacity_continuous(
    sigma: &dyn SpectralVariance,
    bandwidth: f64,
    snr: Snr,
    quad: &QuadratureSpec,
) -> Result<f64> {
    crate::channel::positive("W", bandwidth)?;
    let half = try_integrate(
        |f| sigma.sigma_hat(f).map(|v| capacity_integrand(v, snr)),
        0.0,
        0.5 * bandwidth,
        quad,
    )?;
    Ok(2.0 * half.value)
}

/// Uncorrelated-scattering capacity `(W/ln2)·e^(1/(cα)) E₁(1/(cα))` in bits/s.
pub fn capacity_us_continuous(energy: f64, bandwidth: f64, snr: Snr) -> Result<f64> {
    crate::channel::positive("W", bandwidth)?;
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(Error::Parameter {
            name: "c",
            value: energy,
            reason: "must be finite and positive",
        });
    }
    Ok(bandwidth / LN_2 * e1_scaled(1.0 / (energy * snr.linear()))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::capacity_discrete::capacity_uncorrelated;
    use crate::channel::geometry_from_fractions;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    const HALF: OuParams = OuParams {
        a: 0.5,
        b: 0.5,
        c: 1.0,
    };

    #[test]
    fn ou_closed_form_values() {
        assert_relative_eq!(sigma_hat_ou(&HALF, 0.0), 1.0);
        assert_relative_eq!(
            sigma_hat_ou(&HALF, 1.0 / (2.0 * PI)),
            0.5,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            sigma_hat_ou(&HALF, 1.0),
            1.0 / (1.0 + 4.0 * PI * PI),
            max_relative = 1e-15
        );
        assert!((sigma_hat_ou(&HALF, 1.0) - 0.024705).abs() < 1e-6);
        assert_eq!(sigma_hat_ou(&HALF, 0.3), sigma_hat_ou(&HALF, -0.3));
    }

    #[test]
    fn generic_matches_closed_form() {
        let spec = GenericSpectrum::ou(HALF, QuadratureSpec::default()).unwrap();
        assert_eq!(spec.provenance(), Provenance::GenericQuadrature);
        for f in [0.0, 0.5, 1.0, 5.0] {
            let g = spec.sigma_hat(f).unwrap();
            assert_relative_eq!(g, sigma_hat_ou(&HALF, f), max_relative = 1e-6);
        }
    }

    #[test]
    fn generic_zero_frequency_is_total_integral() {
        let p = OuParams::new(1.3, 0.4, 2.0).unwrap();
        let spec = GenericSpectrum::ou(p, QuadratureSpec::default()).unwrap();
        let g = spec.sigma_hat(0.0).unwrap();
        assert!(g >= 0.0);
        assert_relative_eq!(g, p.c / (p.a + p.b), max_relative = 1e-6);
    }

    #[test]
    fn near_uncorrelated_kernel_is_flat() {
        let p = OuParams::new(50.0, 0.5, 1.0).unwrap();
        let (lo, hi) = (sigma_hat_ou(&p, 0.5), sigma_hat_ou(&p, 0.0));
        assert!(hi / lo < 1.01);
    }

    #[test]
    fn flat_spectrum_reduces_to_uncorrelated() {
        let quad = QuadratureSpec::default();
        for db in [-5.0, 0.0, 10.0, 25.0] {
            let s = Snr::from_db(db).unwrap();
            let c = ergodic_capacity_continuous(&FlatSpectrum(0.5), 3.0, s, &quad).unwrap();
            assert_relative_eq!(c, 3.0 * capacity_uncorrelated(s), max_relative = 1e-13);
        }
    }

    #[test]
    fn example_two_value() {
        let g = geometry_from_fractions(0.5, 0.5, 0.998, 0.8).unwrap();
        let s = Snr::from_db(10.0).unwrap();
        let c = ergodic_capacity_continuous(
            &OuSpectrum(g.ou_params()),
            g.bandwidth,
            s,
            &QuadratureSpec::default(),
        )
        .unwrap();
        assert!((c / g.bandwidth - 2.65708).abs() < 1e-5);
    }

    #[test]
    fn vanishing_snr() {
        let s = Snr::new(1e-8).unwrap();
        let w = 0.9796;
        let c = ergodic_capacity_continuous(&OuSpectrum(HALF), w, s, &QuadratureSpec::default())
            .unwrap();
        assert!(c > 0.0 && c < 1e-6 * w);
    }

    #[test]
    fn band_energy_identity() {
        for (a, b, eh) in [(0.5, 0.5, 0.998), (0.5, 0.5, 0.8), (3.0, 0.2, 0.5)] {
            let g = geometry_from_fractions(a, b, 0.9, eh).unwrap();
            let p = g.ou_params();
            let half = integrate(
                |f| sigma_hat_ou(&p, f),
                0.0,
                0.5 * g.bandwidth,
                &QuadratureSpec::default(),
            )
            .unwrap();
            assert_relative_eq!(2.0 * 2.0 * half.value / p.c, eh, max_relative = 1e-8);
        }
    }

    #[test]
    fn uncorrelated_closed_form() {
        let s = Snr::from_db(10.0).unwrap();
        assert_relative_eq!(
            capacity_us_continuous(1.0, 1.0, s).unwrap(),
            capacity_uncorrelated(s),
            max_relative = 1e-15
        );
        let doubled_c = capacity_us_continuous(2.0, 1.0, s).unwrap();
        let doubled_a = capacity_us_continuous(1.0, 1.0, Snr::new(20.0).unwrap()).unwrap();
        assert_relative_eq!(doubled_c, doubled_a, max_relative = 1e-15);
        let (c, w) = (101.52, 101.32);
        assert_relative_eq!(
            capacity_us_continuous(c, w, s).unwrap() / w,
            e1_scaled(1.0 / (c * 10.0)).unwrap() / LN_2,
            max_relative = 1e-15
        );
        assert!(capacity_us_continuous(0.0, 1.0, s).is_err());
    }

    #[test]
    fn rejects_bad_bandwidth() {
        let s = Snr::new(1.0).unwrap();
        assert!(ergodic_capacity_continuous(
            &FlatSpectrum(0.5),
            0.0,
            s,
            &QuadratureSpec::default()
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn integrand_increases_with_variance(v1 in 1e-6f64..10.0, v2 in 1e-6f64..10.0, db in -20.0f64..40.0) {
            prop_assume!((v1 - v2).abs() > 1e-9 * v1.max(v2));
            let s = Snr::from_db(db).unwrap();
            let (lo, hi) = if v1 < v2 { (v1, v2) } else { (v2, v1) };
            prop_assert!(capacity_integrand(lo, s) < capacity_integrand(hi, s));
        }

        #[test]
        fn spectrum_is_even_and_positive(f in -50.0f64..50.0, a in 0.01f64..5.0, b in 0.01f64..5.0) {
            let p = OuParams { a, b, c: 1.7 };
            prop_assert!(sigma_hat_ou(&p, f) > 0.0);
            prop_assert_eq!(sigma_hat_ou(&p, f), sigma_hat_ou(&p, -f));
        }
    }
}
