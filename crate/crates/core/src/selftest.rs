//! Fast numerical self-checks run by `ergocap selftest`.

use crate::capacity_continuous::{ergodic_capacity_continuous, OuSpectrum};
use crate::capacity_discrete::{capacity_uncorrelated, ergodic_capacity_discrete, Snr};
use crate::channel::{geometry_from_fractions, uncorrelated_matrix, CovarianceMatrix, OuParams};
use crate::cli::channel_matrix;
use crate::montecarlo::estimate_capacity;
use crate::ou_analytic::{capacity_bounds, capacity_series, SeriesControl};
use crate::quadrature::QuadratureSpec;
use crate::specfun::{e1, e1_scaled, upper_gamma_half};
use crate::Result;

#[derive(Clone, Debug)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, outcome: Result<(bool, String)>) -> Check {
    match outcome {
        Ok((passed, detail)) => Check {
            name,
            passed,
            detail,
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: format!("error: {e}"),
        },
    }
}

fn rel(x: f64, y: f64) -> f64 {
    ((x - y) / y).abs()
}

pub fn run_selftest() -> Vec<Check> {
    vec![
        check("special functions", special_functions()),
        check("geometry", geometry()),
        check("uncorrelated identity", uncorrelated_identity()),
        check("bound sandwich", bound_sandwich()),
        check("series", series()),
        check("monte carlo", monte_carlo()),
        check("matrix round trip", matrix_round_trip()),
    ]
}

fn special_functions() -> Result<(bool, String)> {
    let errs = [
        rel(e1(1.0)?, 0.219_383_934_395_520_27),
        rel(e1(5.0)?, 1.148_295_591_275_325_8e-3),
        rel(e1_scaled(0.1)?, 2.014_642_544_708_451_7),
        rel(upper_gamma_half(2.0)?, 0.080_647_117_960_317_69),
    ];
    let worst = errs.iter().copied().fold(0.0, f64::max);
    Ok((worst < 1e-13, format!("max relative error {worst:.2e}")))
}

fn geometry() -> Result<(bool, String)> {
    let one = geometry_from_fractions(0.5, 0.5, 0.998, 0.998)?;
    let two = geometry_from_fractions(0.5, 0.5, 0.998, 0.8)?;
    let ok = (one.delay_spread - 6.2146).abs() < 1e-4
        && (one.bandwidth - 101.32).abs() < 1e-2
        && (one.energy - 101.52).abs() < 1e-2
        && one.taps == 630
        && (two.bandwidth - 0.9796).abs() < 1e-4
        && (two.energy - 1.2245).abs() < 1e-4
        && two.taps == 7;
    Ok((
        ok,
        format!(
            "T_d={:.4} W={:.2}/{:.4} c={:.2}/{:.4} L={}/{}",
            one.delay_spread,
            one.bandwidth,
            two.bandwidth,
            one.energy,
            two.energy,
            one.taps,
            two.taps
        ),
    ))
}

fn uncorrelated_identity() -> Result<(bool, String)> {
    let g = uncorrelated_matrix(&[1.0, 0.6, 0.3, 0.1, 0.05])?;
    let s = Snr::from_db(10.0)?;
    let err = rel(
        ergodic_capacity_discrete(&g, 37, s)?,
        capacity_uncorrelated(s),
    );
    Ok((err < 1e-12, format!("relative difference {err:.2e}")))
}

fn bound_sandwich() -> Result<(bool, String)> {
    let g = geometry_from_fractions(0.5, 0.5, 0.998, 0.8)?;
    let s = Snr::from_db(20.0)?;
    let p = g.ou_params();
    let b = capacity_bounds(&p, g.bandwidth, s);
    let c =
        ergodic_capacity_continuous(&OuSpectrum(p), g.bandwidth, s, &QuadratureSpec::default())?;
    let w = g.bandwidth;
    Ok((
        b.lower <= c && c <= b.upper,
        format!(
            "{:.6} <= {:.6} <= {:.6} bits/s/Hz",
            b.lower / w,
            c / w,
            b.upper / w
        ),
    ))
}

fn series() -> Result<(bool, String)> {
    let p = OuParams::new(0.5, 0.5, 1.0)?;
    let s = Snr::new(1.0)?;
    let r = capacity_series(&p, 0.1, s, &SeriesControl::default())?;
    let c = ergodic_capacity_continuous(&OuSpectrum(p), 0.1, s, &QuadratureSpec::default())?;
    let err = rel(r.value, c);
    Ok((
        r.converged && err < 1e-4,
        format!("{} terms, relative error {err:.2e}", r.terms_used),
    ))
}

fn monte_carlo() -> Result<(bool, String)> {
    let g = CovarianceMatrix::from_entries(2, vec![0.3, 0.15, 0.15, 0.2])?;
    let s = Snr::from_db(10.0)?;
    let e = estimate_capacity(&g, 8, s, 20_000, 7)?;
    let c = ergodic_capacity_discrete(&g, 8, s)?;
    let z = (e.mean - c).abs() / e.stderr;
    Ok((
        z < 4.0,
        format!(
            "closed form {c:.5}, estimate {:.5} ± {:.5}",
            e.mean, e.stderr
        ),
    ))
}

fn matrix_round_trip() -> Result<(bool, String)> {
    let g = geometry_from_fractions(0.5, 0.5, 0.998, 0.8)?;
    let m = channel_matrix(&g)?;
    let mut buf = Vec::new();
    m.write_to(&mut buf)?;
    let back = CovarianceMatrix::read_from(buf.as_slice())?;
    Ok((
        back == m,
        format!("{}x{} matrix, {} bytes", m.dim(), m.dim(), buf.len()),
    ))
}
