//! Asymptotic decoy-state DV-MDI-QKD key rate with polarization encoding,
//! threshold detectors and an intrinsic misalignment error.
//!
//! The single-photon yield and phase error are the analytic infinite-decoy
//! values. The overall gain and QBER come from the closed-form click
//! probabilities `Ω1` (error events) and `Ω2` (correct events) of a
//! Bell-state measurement with two weak coherent inputs.

use crate::channel::ChannelPair;
use crate::error::{check_range, Error, Result};
use crate::math::{bessel_i0_minus_one, binary_entropy, i0_tail};

/// Detector and post-processing parameters of the DV protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DvDeviceParams {
    eta_d: f64,
    e_d: f64,
    y0: f64,
    f_e: f64,
}

impl DvDeviceParams {
    /// SNSPD efficiency, misalignment error, dark counts per pulse, error-correction inefficiency.
    pub fn new(eta_d: f64, e_d: f64, y0: f64, f_e: f64) -> Result<Self> {
        check_range("eta_d", eta_d, eta_d > 0.0 && eta_d <= 1.0, "0 < eta_d <= 1")?;
        check_range("e_d", e_d, (0.0..=0.5).contains(&e_d), "0 <= e_d <= 0.5")?;
        check_range("y0", y0, (0.0..1.0).contains(&y0), "0 <= y0 < 1")?;
        check_range("f_e", f_e, f_e >= 1.0, "f_e >= 1")?;
        Ok(Self { eta_d, e_d, y0, f_e })
    }

    pub fn eta_d(&self) -> f64 {
        self.eta_d
    }
    pub fn e_d(&self) -> f64 {
        self.e_d
    }
    pub fn y0(&self) -> f64 {
        self.y0
    }
    pub fn f_e(&self) -> f64 {
        self.f_e
    }
}

impl Default for DvDeviceParams {
    /// 93% detectors, 0.1% misalignment, 1e-6 dark counts, f_e = 1.16.
    fn default() -> Self {
        Self {
            eta_d: 0.93,
            e_d: 0.001,
            y0: 1e-6,
            f_e: 1.16,
        }
    }
}

/// Mean photon numbers of Alice's and Bob's signal states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intensities {
    mu_a: f64,
    mu_b: f64,
}

impl Intensities {
    pub fn new(mu_a: f64, mu_b: f64) -> Result<Self> {
        check_range("mu_a", mu_a, mu_a > 0.0, "mu_a > 0")?;
        check_range("mu_b", mu_b, mu_b > 0.0, "mu_b > 0")?;
        Ok(Self { mu_a, mu_b })
    }

    pub fn mu_a(&self) -> f64 {
        self.mu_a
    }

    pub fn mu_b(&self) -> f64 {
        self.mu_b
    }

    pub fn swapped(&self) -> Self {
        Self {
            mu_a: self.mu_b,
            mu_b: self.mu_a,
        }
    }
}

/// Every intermediate of the DV key-rate formula.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DvRateBreakdown {
    /// Probability that both users emit exactly one photon.
    pub p11: f64,
    /// Single-photon yield (Z basis, equal to the X-basis yield).
    pub y11: f64,
    /// Single-photon phase error rate (X basis).
    pub e11x: f64,
    /// Overall Z-basis gain.
    pub gain_z: f64,
    /// Overall Z-basis QBER.
    pub qber_z: f64,
    /// Signed key rate in bits per pulse pair.
    pub rate: f64,
}

impl DvRateBreakdown {
    /// The key rate floored at zero.
    pub fn secure_rate(&self) -> f64 {
        self.rate.max(0.0)
    }
}

/// Single-photon yield `Y11` for given channel and devices.
pub fn yield_11(channel: &ChannelPair, dev: &DvDeviceParams) -> f64 {
    let a = channel.eta_a() * dev.eta_d;
    let b = channel.eta_b() * dev.eta_d;
    let y0 = dev.y0;
    let c = 1.0 - y0;
    c * c * (4.0 * y0 * y0 * (1.0 - a) * (1.0 - b) + 2.0 * y0 * (a + b - 1.5 * a * b) + 0.5 * a * b)
}

/// Single-photon phase error rate `e11x`.
pub fn error_11x(channel: &ChannelPair, dev: &DvDeviceParams) -> Result<f64> {
    let y11 = yield_11(channel, dev);
    if y11 <= 0.0 {
        return Err(Error::Degenerate(
            "single-photon yield is zero (no successful single-photon events)",
        ));
    }
    let c = 1.0 - dev.y0;
    let misaligned = 1.0 - dev.e_d;
    let coincidence = c * c * channel.product() * dev.eta_d * dev.eta_d;
    let e = 0.5 - coincidence * misaligned * misaligned / (4.0 * y11);
    clamp_probability("e11x", e, 0.5)
}

/// Overall gain `Q^Z` and QBER `E^Z` for signal intensities `mu`.
///
/// The bracketed sums in `Ω1` and `Ω2` lose all significant digits to
/// cancellation at low intensity or high loss when evaluated literally. Here
/// each bracket is expanded with `e^{-a} = 1 + expm1(-a)` and
/// `I0(x) = 1 + (I0(x) - 1)`; the constant and first-order terms cancel
/// exactly, and every surviving term is non-negative, so both `Ω` are
/// computed to full relative precision.
pub fn gain_and_qber(
    channel: &ChannelPair,
    dev: &DvDeviceParams,
    mu: &Intensities,
) -> Result<(f64, f64)> {
    let (omega1, omega2) = click_probabilities(channel, dev, mu);
    let total = omega1 + omega2;
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::Degenerate("no detection events (Ω1 + Ω2 = 0)"));
    }
    Ok((total / 2.0, omega1 / total))
}

/// `(Ω1, Ω2)`: error and correct coincidence probabilities.
fn click_probabilities(channel: &ChannelPair, dev: &DvDeviceParams, mu: &Intensities) -> (f64, f64) {
    let (eta_d, e_d, y0) = (dev.eta_d, dev.e_d, dev.y0);
    let c = 1.0 - y0;
    let arrive_a = mu.mu_a * channel.eta_a();
    let arrive_b = mu.mu_b * channel.eta_b();

    let gamma = (arrive_a + arrive_b) * eta_d;
    let beta = eta_d * (arrive_a * arrive_b).sqrt();
    let lambda = beta * (e_d * (1.0 - e_d)).sqrt();
    let omega = arrive_a * eta_d + e_d * (arrive_b - arrive_a) * eta_d;

    let prefactor = 2.0 * (-gamma / 2.0).exp() * c * c;
    let dark_pairs = 2.0 * y0 * y0;

    // Ω1 bracket. The exponents γ(1-e_d)/2 and γe_d/2 add up to γ/2.
    let e1 = (-gamma * (1.0 - e_d) / 2.0).exp_m1();
    let e2 = (-gamma * e_d / 2.0).exp_m1();
    let j1 = bessel_i0_minus_one(e_d * beta);
    let j2 = bessel_i0_minus_one((1.0 - e_d) * beta);
    let straight = (1.0 - e_d) * (1.0 - e_d);
    let crossed = (1.0 - 2.0 * e_d) * (1.0 - 2.0 * e_d);
    let leaked = e_d * e_d;
    // J(β) + J((1-2e_d)β) - 2J(e_dβ) - 2J((1-e_d)β); the k = 1 weight is zero.
    let bessel_mix = i0_tail(beta, 2, |k| {
        let k = k as i32;
        1.0 + crossed.powi(k) - 2.0 * leaked.powi(k) - 2.0 * straight.powi(k)
    });
    let bracket1 = dark_pairs + 2.0 * c * c * e1 * e2 - 2.0 * c * y0 * (e1 + e2)
        + bessel_mix
        + 2.0 * y0 * (j1 + j2)
        - 2.0 * c * (e1 * j1 + e2 * j2);

    // Ω2 bracket. The exponents ω/2 and (γ-ω)/2 add up to γ/2.
    let f1 = (-omega / 2.0).exp_m1();
    let f2 = (-(gamma - omega) / 2.0).exp_m1();
    let j = bessel_i0_minus_one(lambda);
    // J(2λ) - 4J(λ); the k = 1 weight is zero.
    let doubled_mix = i0_tail(lambda, 2, |k| 4f64.powi(k as i32) - 4.0);
    let bracket2 = dark_pairs + doubled_mix + 4.0 * y0 * j + 2.0 * c * c * f1 * f2
        - 2.0 * c * y0 * (f1 + f2)
        - 2.0 * c * j * (f1 + f2);

    (prefactor * bracket1.max(0.0), prefactor * bracket2.max(0.0))
}

/// Signed asymptotic key rate and all of its ingredients.
pub fn dv_key_rate(
    channel: &ChannelPair,
    dev: &DvDeviceParams,
    mu: &Intensities,
) -> Result<DvRateBreakdown> {
    let p11 = mu.mu_a * mu.mu_b * (-(mu.mu_a + mu.mu_b)).exp();
    let y11 = yield_11(channel, dev);
    let e11x = error_11x(channel, dev)?;
    let (gain_z, qber_z) = gain_and_qber(channel, dev, mu)?;
    let qber_z = clamp_probability("qber_z", qber_z, 1.0)?;
    let rate = p11 * y11 * (1.0 - binary_entropy(e11x)?)
        - gain_z * dev.f_e * binary_entropy(qber_z)?;
    Ok(DvRateBreakdown {
        p11,
        y11,
        e11x,
        gain_z,
        qber_z,
        rate,
    })
}

/// Accepts rounding excursions below 0 or above `upper` of at most 1e-12.
fn clamp_probability(name: &'static str, value: f64, upper: f64) -> Result<f64> {
    const SLACK: f64 = 1e-12;
    if value >= -SLACK && value <= upper + SLACK {
        Ok(value.clamp(0.0, upper))
    } else {
        Err(Error::Domain {
            name,
            value,
            expected: "a probability",
        })
    }
}
