//! Scalar special functions shared by the rate models.
//!
//! Every function here is pure. Inputs outside the mathematical domain are
//! reported as [`Error::Domain`] instead of propagating NaN; the only
//! tolerated non-positive logarithm argument is an exact zero factor, which
//! follows the `0 · log 0 = 0` convention.

use crate::error::{check_range, Error, Result};

/// Above this argument `bessel_i0` switches from the power series to the
/// asymptotic expansion. At 30 the smallest asymptotic term is ~e^-60.
const I0_SERIES_LIMIT: f64 = 30.0;

const SERIES_MAX_TERMS: usize = 500;

/// `x · log2(x)` with the `0 · log2 0 = 0` convention.
fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

/// Binary Shannon entropy `H2(p) = -p log2 p - (1-p) log2 (1-p)`, in bits.
pub fn binary_entropy(p: f64) -> Result<f64> {
    check_range("p", p, (0.0..=1.0).contains(&p), "0 <= p <= 1")?;
    Ok(-xlog2x(p) - xlog2x(1.0 - p))
}

/// The entropy-like function of a symplectic eigenvalue,
/// `h(x) = ((x+1)/2) log2((x+1)/2) - ((x-1)/2) log2((x-1)/2)`, for `x >= 1`.
pub fn h_function(x: f64) -> Result<f64> {
    check_range("x", x, x >= 1.0, "x >= 1")?;
    let upper = (x + 1.0) / 2.0;
    let lower = (x - 1.0) / 2.0;
    Ok(xlog2x(upper) - xlog2x(lower))
}

/// Modified Bessel function of the first kind of order zero, `I0(x)`, for `x >= 0`.
///
/// Power series below [`I0_SERIES_LIMIT`] (all terms positive, so plain
/// summation is accurate), Hankel asymptotic expansion above it.
pub fn bessel_i0(x: f64) -> Result<f64> {
    check_range("x", x, x >= 0.0, "finite x >= 0")?;
    if x < I0_SERIES_LIMIT {
        Ok(1.0 + i0_tail(x, 1, |_| 1.0))
    } else {
        Ok(i0_asymptotic(x))
    }
}

/// `I0(x) - 1` without cancellation for small `x`.
pub(crate) fn bessel_i0_minus_one(x: f64) -> f64 {
    if x < I0_SERIES_LIMIT {
        i0_tail(x, 1, |_| 1.0)
    } else {
        i0_asymptotic(x) - 1.0
    }
}

/// Weighted tail of the I0 power series:
/// `sum_{k >= first} weight(k) · (x²/4)^k / (k!)²`.
///
/// Linear combinations of `I0` at scaled arguments reduce to this form, which
/// lets callers drop low-order terms that cancel analytically. The weights
/// must be bounded by a constant so the unweighted terms control convergence.
pub(crate) fn i0_tail(x: f64, first: u32, weight: impl Fn(u32) -> f64) -> f64 {
    let q = x * x / 4.0;
    if q == 0.0 {
        return 0.0;
    }
    // term_k = q^k / (k!)^2, built incrementally from k = 1.
    let mut term = q;
    for k in 2..=first {
        term *= q / f64::from(k * k);
    }
    let mut sum = 0.0;
    let mut k = first;
    for _ in 0..SERIES_MAX_TERMS {
        let contribution = weight(k) * term;
        sum += contribution;
        k += 1;
        term *= q / f64::from(k) / f64::from(k);
        // Terms decrease monotonically once k^2 > q.
        if f64::from(k * k) > q && term <= f64::EPSILON * 1e-3 * sum.abs().max(f64::MIN_POSITIVE)
        {
            break;
        }
    }
    sum
}

fn i0_asymptotic(x: f64) -> f64 {
    // I0(x) ~ e^x / sqrt(2 pi x) · sum_k ((2k-1)!!)^2 / (k! (8x)^k)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60u32 {
        let odd = f64::from(2 * k - 1);
        let next = term * odd * odd / (f64::from(k) * 8.0 * x);
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term < f64::EPSILON * 1e-3 * sum {
            break;
        }
    }
    x.exp() / (2.0 * std::f64::consts::PI * x).sqrt() * sum
}

/// `log2(x)` for strictly positive `x`, otherwise a domain error for `name`.
pub(crate) fn log2_positive(name: &'static str, x: f64) -> Result<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x.log2())
    } else {
        Err(Error::Domain {
            name,
            value: x,
            expected: "a finite positive logarithm argument",
        })
    }
}
