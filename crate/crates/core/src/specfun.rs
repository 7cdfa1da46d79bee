//! Special functions used by the capacity formulas.
//!
//! Every capacity integrand has the form `e^x E₁(x)` with `x = 1/(2ασ̂²)`,
//! which reaches `1e6` and beyond where the spectrum is weak. [`e1_scaled`]
//! evaluates that product directly so that neither `e^x` nor `E₁(x)` is ever
//! formed on its own in that regime.
//!
//! Regimes:
//!
//! * `E₁`: power series for `x <= 1.5`, modified Lentz continued fraction
//!   above.
//! * `Γ(1/2, z)`: `√π − γ(1/2, z)` with the positive-term lower-gamma series
//!   for `z <= 1.5`, Legendre continued fraction above.
//! * `L_k^μ(x)`: three-term recurrence, carried in double-double arithmetic
//!   past order 50.

use crate::error::{Error, Result};

/// Euler's constant γ.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// Crossover between series and continued fraction.
const SERIES_LIMIT: f64 = 1.5;

const MAX_ITER: usize = 10_000;

/// Lentz's guard against a zero denominator.
const TINY: f64 = 1e-300;

fn check_positive(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: x,
            expected: "finite x > 0",
        })
    }
}

/// Exponential integral `E₁(x) = ∫₁^∞ e^(−tx)/t dt` for `x > 0`.
pub fn e1(x: f64) -> Result<f64> {
    check_positive("e1", x)?;
    if x <= SERIES_LIMIT {
        Ok(e1_series(x))
    } else {
        Ok(e1_scaled_cf(x) * (-x).exp())
    }
}

/// `e^x E₁(x)` for `x > 0`, without overflow for any finite `x`.
///
/// Satisfies `ln(1 + e^(−γ)/x) < e1_scaled(x) < ln(1 + 1/x)`.
pub fn e1_scaled(x: f64) -> Result<f64> {
    check_positive("e1_scaled", x)?;
    if x <= SERIES_LIMIT {
        Ok(x.exp() * e1_series(x))
    } else {
        Ok(e1_scaled_cf(x))
    }
}

// E₁(x) = −γ − ln x − Σ_{n≥1} (−x)^n / (n·n!)
fn e1_series(x: f64) -> f64 {
    let mut sum = 0.0;
    let mut term = 1.0; // (−x)^n / n!
    for n in 1..MAX_ITER {
        term *= -x / n as f64;
        let contrib = term / n as f64;
        sum += contrib;
        if contrib.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            break;
        }
    }
    -EULER_GAMMA - x.ln() - sum
}

// e^x E₁(x) = 1/(x+1− 1/(x+3− 4/(x+5− ...)))
fn e1_scaled_cf(x: f64) -> f64 {
    let mut b = x + 1.0;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

/// Upper incomplete gamma function `Γ(1/2, z) = ∫_z^∞ e^(−t) t^(−1/2) dt`.
pub fn upper_gamma_half(z: f64) -> Result<f64> {
    check_nonnegative("upper_gamma_half", z)?;
    if z == 0.0 {
        Ok(SQRT_PI)
    } else if z <= SERIES_LIMIT {
        Ok(SQRT_PI - lower_gamma_half_series(z))
    } else {
        Ok(gamma_half_scaled_cf(z) * (-z).exp())
    }
}

/// `e^z Γ(1/2, z)`, finite for every finite `z >= 0`.
pub fn upper_gamma_half_scaled(z: f64) -> Result<f64> {
    check_nonnegative("upper_gamma_half_scaled", z)?;
    if z <= SERIES_LIMIT {
        Ok(z.exp() * upper_gamma_half(z)?)
    } else {
        Ok(gamma_half_scaled_cf(z))
    }
}

fn check_nonnegative(function: &'static str, z: f64) -> Result<()> {
    if z >= 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            value: z,
            expected: "finite z >= 0",
        })
    }
}

// γ(a, z) = e^(−z) z^a Σ_{n≥0} z^n / (a (a+1) ... (a+n)),  a = 1/2
fn lower_gamma_half_series(z: f64) -> f64 {
    let a = 0.5;
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= z / ap;
        sum += term;
        if term.abs() <= sum.abs() * f64::EPSILON * 0.25 {
            break;
        }
    }
    sum * (-z).exp() * z.sqrt()
}

// e^z Γ(a, z) = z^a / (z+1−a− 1·(1−a)/(z+3−a− 2·(2−a)/(z+5−a− ...)))
fn gamma_half_scaled_cf(z: f64) -> f64 {
    let a = 0.5;
    let mut b = z + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let i = i as f64;
        let an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    z.sqrt() * h
}

/// Orders below this use plain `f64` in the Laguerre recurrence; from here
/// on the recurrence state is carried as a double-double.
const COMPENSATED_FROM: usize = 50;

/// Generalized Laguerre polynomial `L_k^μ(x)`.
pub fn laguerre(k: usize, mu: f64, x: f64) -> f64 {
    *laguerre_sequence(k, mu, x)
        .last()
        .expect("sequence holds at least L_0")
}

/// `L_0^μ(x), …, L_kmax^μ(x)` from the recurrence
/// `(k+1) L_{k+1} = (2k+1+μ−x) L_k − (k+μ) L_{k−1}`.
pub fn laguerre_sequence(kmax: usize, mu: f64, x: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    out.push(1.0);
    if kmax == 0 {
        return out;
    }
    out.push(1.0 + mu - x);

    let plain_until = kmax.min(COMPENSATED_FROM);
    for k in 1..plain_until {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + mu - x) * out[k] - (kf + mu) * out[k - 1]) / (kf + 1.0);
        out.push(next);
    }

    let mut prev = DoubleDouble::from(out[plain_until - 1]);
    let mut cur = DoubleDouble::from(out[plain_until]);
    for k in plain_until..kmax {
        let kf = k as f64;
        let diag = DoubleDouble::sum(2.0 * kf + 1.0 + mu, -x);
        let lhs = diag.mul(cur);
        let rhs = prev.mul_f64(kf + mu);
        let next = lhs.sub(rhs).div_f64(kf + 1.0);
        out.push(next.to_f64());
        prev = cur;
        cur = next;
    }
    out
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl From<f64> for DoubleDouble {
    fn from(hi: f64) -> Self {
        Self { hi, lo: 0.0 }
    }
}

impl DoubleDouble {
    fn sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self::normalize(s, err)
    }

    fn normalize(hi: f64, lo: f64) -> Self {
        let s = hi + lo;
        Self {
            hi: s,
            lo: lo - (s - hi),
        }
    }

    fn two_prod(a: f64, b: f64) -> Self {
        let p = a * b;
        Self {
            hi: p,
            lo: a.mul_add(b, -p),
        }
    }

    fn add(self, other: Self) -> Self {
        let s = Self::sum(self.hi, other.hi);
        Self::normalize(s.hi, s.lo + self.lo + other.lo)
    }

    fn sub(self, other: Self) -> Self {
        self.add(Self {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    fn mul(self, other: Self) -> Self {
        let p = Self::two_prod(self.hi, other.hi);
        Self::normalize(p.hi, p.lo + self.hi * other.lo + self.lo * other.hi)
    }

    fn mul_f64(self, b: f64) -> Self {
        let p = Self::two_prod(self.hi, b);
        Self::normalize(p.hi, p.lo + self.lo * b)
    }

    fn div_f64(self, b: f64) -> Self {
        let q1 = self.hi / b;
        let r = self.sub(Self::two_prod(q1, b));
        let q2 = r.hi / b;
        Self::normalize(q1, q2)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}
