//! Globally adaptive Gauss–Kronrod (7/15) quadrature with interval bisection.
//!
//! The interval with the largest error estimate is bisected until the summed
//! estimate meets `max(abs_tol, rel_tol·|I|)`. Error estimates follow the
//! QUADPACK `qk15` heuristics, including a round-off floor. Panel values are
//! summed left to right at the end, so results do not depend on the order in
//! which intervals were refined.

use crate::error::{Error, Result};
use std::convert::Infallible;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Hard cap on the number of panels, independent of depth.
const MAX_INTERVALS: usize = 20_000;

/// Tolerances and refinement limit for adaptive quadrature.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections applied to any one panel.
    pub max_refinement_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-9,
            max_refinement_depth: 48,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_refinement_depth: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(Error::Parameter {
                name: "abs_tol",
                value: abs_tol,
                reason: "must be positive",
            });
        }
        if !(rel_tol > 0.0) {
            return Err(Error::Parameter {
                name: "rel_tol",
                value: rel_tol,
                reason: "must be positive",
            });
        }
        Ok(Self {
            abs_tol,
            rel_tol,
            max_refinement_depth,
        })
    }

    /// Same limits with both tolerances scaled by `factor`.
    pub fn tightened(self, factor: f64) -> Self {
        Self {
            abs_tol: self.abs_tol * factor,
            rel_tol: self.rel_tol * factor,
            ..self
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadratureResult {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

#[derive(Clone, Copy, Debug)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    roundoff: f64,
    depth: usize,
}

/// Integrates `f` over `[a, b]`.
pub fn integrate<F>(mut f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<QuadratureResult>
where
    F: FnMut(f64) -> f64,
{
    try_integrate(|x| Ok::<f64, Infallible>(f(x)), a, b, spec).map_err(|e| e.expect_numeric())
}

/// Integrates a fallible `f` over `[a, b]`; the first error raised by `f`
/// aborts the integration.
pub fn try_integrate<F, E>(
    mut f: F,
    a: f64,
    b: f64,
    spec: &QuadratureSpec,
) -> std::result::Result<QuadratureResult, QuadError<E>>
where
    F: FnMut(f64) -> std::result::Result<f64, E>,
{
    if a == b {
        return Ok(QuadratureResult {
            value: 0.0,
            error: 0.0,
            intervals: 0,
        });
    }
    let mut panels = vec![kronrod_panel(&mut f, a, b, 0).map_err(QuadError::Integrand)?];

    loop {
        let (value, error, roundoff) = panels.iter().fold((0.0, 0.0, 0.0), |acc, p| {
            (acc.0 + p.value, acc.1 + p.error, acc.2 + p.roundoff)
        });
        let tol = spec.abs_tol.max(spec.rel_tol * value.abs());
        if error <= tol {
            return Ok(finish(panels));
        }

        let (worst, panel) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, p)| (i, *p))
            .expect("at least one panel");

        // Nothing left to gain from bisection when the remaining error is
        // all round-off.
        if panel.error <= panel.roundoff * (1.0 + 1e-9) && error <= tol.max(2.0 * roundoff) {
            return Ok(finish(panels));
        }
        if panel.depth >= spec.max_refinement_depth || panels.len() >= MAX_INTERVALS {
            return Err(QuadError::NotConverged(Error::Quadrature {
                estimate: value,
                error,
                intervals: panels.len(),
            }));
        }

        let mid = 0.5 * (panel.a + panel.b);
        let left =
            kronrod_panel(&mut f, panel.a, mid, panel.depth + 1).map_err(QuadError::Integrand)?;
        let right =
            kronrod_panel(&mut f, mid, panel.b, panel.depth + 1).map_err(QuadError::Integrand)?;
        panels[worst] = left;
        panels.push(right);
    }
}

fn finish(mut panels: Vec<Panel>) -> QuadratureResult {
    panels.sort_by(|x, y| x.a.total_cmp(&y.a));
    let mut value = 0.0;
    let mut error = 0.0;
    for p in &panels {
        value += p.value;
        error += p.error;
    }
    QuadratureResult {
        value,
        error,
        intervals: panels.len(),
    }
}

/// Failure of [`try_integrate`]: either the integrand raised `E`, or the
/// refinement limits were reached.
#[derive(Debug)]
pub enum QuadError<E> {
    Integrand(E),
    NotConverged(Error),
}

impl QuadError<Infallible> {
    fn expect_numeric(self) -> Error {
        match self {
            QuadError::NotConverged(e) => e,
            QuadError::Integrand(never) => match never {},
        }
    }
}

impl From<QuadError<Error>> for Error {
    fn from(e: QuadError<Error>) -> Self {
        match e {
            QuadError::Integrand(e) | QuadError::NotConverged(e) => e,
        }
    }
}

fn kronrod_panel<F, E>(f: &mut F, a: f64, b: f64, depth: usize) -> std::result::Result<Panel, E>
where
    F: FnMut(f64) -> std::result::Result<f64, E>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center)?;

    let mut gauss = f_center * WG[3];
    let mut kronrod = f_center * WGK[7];
    let mut abs_kronrod = kronrod.abs();
    let mut samples = [(0.0, 0.0); 7];

    for (j, node) in XGK.iter().take(7).enumerate() {
        let dx = half * node;
        let f1 = f(center - dx)?;
        let f2 = f(center + dx)?;
        samples[j] = (f1, f2);
        kronrod += WGK[j] * (f1 + f2);
        abs_kronrod += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }

    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (f_center - mean).abs();
    for (j, (f1, f2)) in samples.iter().enumerate() {
        asc += WGK[j] * ((f1 - mean).abs() + (f2 - mean).abs());
    }

    let value = kronrod * half;
    let abs_value = abs_kronrod * half.abs();
    let asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    let roundoff = 50.0 * f64::EPSILON * abs_value;
    if abs_value > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(roundoff);
    }

    Ok(Panel {
        a,
        b,
        value,
        error,
        roundoff,
        depth,
    })
}
