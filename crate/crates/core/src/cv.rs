//! Asymptotic CV-MDI-QKD key rate `R = ξ·I_AB − I_E` under the
//! two-link Gaussian attack, in the large-modulation approximation.
//!
//! Two closed forms exist for Eve's information: one for unequal arms and one
//! for `η_A = η_B`. The unequal-arm form divides by `|η_A − η_B|`, so the
//! symmetric form is used whenever the arms agree to within
//! [`SYMMETRIC_BRANCH_THRESHOLD`] (relative).

use std::f64::consts::LOG2_E;

use crate::channel::ChannelPair;
use crate::error::{check_range, Error, Result};
use crate::math::{h_function, log2_positive};

/// Relative arm mismatch `|η_A − η_B| / max(η_A, η_B)` below which the
/// symmetric closed form is used.
pub const SYMMETRIC_BRANCH_THRESHOLD: f64 = 1e-9;

/// Relay and reconciliation parameters of the CV protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvDeviceParams {
    eta_d: f64,
    epsilon: f64,
    phi: f64,
    xi: f64,
}

impl CvDeviceParams {
    /// Relay detection efficiency, excess noise and modulation variance (both in
    /// shot-noise units), reconciliation efficiency.
    pub fn new(eta_d: f64, epsilon: f64, phi: f64, xi: f64) -> Result<Self> {
        check_range("eta_d", eta_d, eta_d > 0.0 && eta_d <= 1.0, "0 < eta_d <= 1")?;
        check_range("epsilon", epsilon, epsilon >= 0.0, "epsilon >= 0")?;
        check_range("phi", phi, phi > 0.0, "phi > 0")?;
        check_range("xi", xi, xi > 0.0 && xi <= 1.0, "0 < xi <= 1")?;
        Ok(Self {
            eta_d,
            epsilon,
            phi,
            xi,
        })
    }

    pub fn eta_d(&self) -> f64 {
        self.eta_d
    }
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
    pub fn phi(&self) -> f64 {
        self.phi
    }
    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Same parameters with a different relay detection efficiency.
    pub fn with_eta_d(self, eta_d: f64) -> Result<Self> {
        Self::new(eta_d, self.epsilon, self.phi, self.xi)
    }
}

impl Default for CvDeviceParams {
    /// η_d = 98%, ε = 0.01, φ = 60, ξ = 0.97.
    fn default() -> Self {
        Self {
            eta_d: 0.98,
            epsilon: 0.01,
            phi: 60.0,
            xi: 0.97,
        }
    }
}

/// Which closed form produced Eve's information.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CvBranch {
    Asymmetric,
    Symmetric,
}

impl CvBranch {
    pub fn for_channel(channel: &ChannelPair) -> Self {
        let (a, b) = (channel.eta_a(), channel.eta_b());
        let scale = a.max(b);
        if scale > 0.0 && (a - b).abs() / scale < SYMMETRIC_BRANCH_THRESHOLD {
            Self::Symmetric
        } else {
            Self::Asymmetric
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Asymmetric => "asymmetric",
            Self::Symmetric => "symmetric",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvRateBreakdown {
    /// Equivalent noise in shot-noise units.
    pub chi: f64,
    /// Alice–Bob mutual information, bits.
    pub i_ab: f64,
    /// Eve's information on the key, bits.
    pub i_e: f64,
    /// Signed key rate, bits per use.
    pub rate: f64,
    pub branch: CvBranch,
}

impl CvRateBreakdown {
    pub fn secure_rate(&self) -> f64 {
        self.rate.max(0.0)
    }
}

fn require_light(channel: &ChannelPair) -> Result<()> {
    check_range("eta_a", channel.eta_a(), channel.eta_a() > 0.0, "eta_a > 0")?;
    check_range("eta_b", channel.eta_b(), channel.eta_b() > 0.0, "eta_b > 0")?;
    Ok(())
}

/// Equivalent noise `χ = 2(η_A + η_B)/(η_A η_B η_d) + ε`.
///
/// For `η_A = η_B = η` this is `4/(η η_d) + ε`.
pub fn equivalent_noise(channel: &ChannelPair, dev: &CvDeviceParams) -> Result<f64> {
    require_light(channel)?;
    let (a, b) = (channel.eta_a(), channel.eta_b());
    Ok(2.0 * (a + b) / (a * b * dev.eta_d) + dev.epsilon)
}

/// Equivalent noise for two identical arms of transmittance `eta`.
pub fn equivalent_noise_symmetric(eta: f64, dev: &CvDeviceParams) -> Result<f64> {
    check_range("eta", eta, eta > 0.0 && eta <= 1.0, "0 < eta <= 1")?;
    Ok(4.0 / (eta * dev.eta_d) + dev.epsilon)
}

/// `I_AB = log2((φ + 1)/χ)`.
pub fn mutual_info_ab(chi: f64, dev: &CvDeviceParams) -> Result<f64> {
    check_range("chi", chi, chi > 0.0, "chi > 0")?;
    Ok(((dev.phi + 1.0) / chi).log2())
}

fn h_checked(quantity: &'static str, x: f64) -> Result<f64> {
    if x >= 1.0 {
        h_function(x)
    } else {
        Err(Error::ModelDomain {
            quantity,
            value: x,
            reason: "symplectic eigenvalue below 1; the Gaussian-attack formula does not apply",
        })
    }
}

/// Eve's information for unequal arms: `h(β) + log2(γ) − h(δ)`, where `γ`
/// carries a factor of Euler's number (not the misalignment error).
pub fn eve_info_asymmetric(channel: &ChannelPair, dev: &CvDeviceParams) -> Result<f64> {
    if CvBranch::for_channel(channel) == CvBranch::Symmetric {
        return Err(Error::Degenerate(
            "arms are equal to within the branch threshold; use the symmetric formula",
        ));
    }
    let chi = equivalent_noise(channel, dev)?;
    let (a, b) = (channel.eta_a(), channel.eta_b());
    let sum = a + b;
    let diff = (a - b).abs();
    let beta = (a * b * chi - sum * sum) / (diff * sum);
    let delta = (a * chi - sum) / sum;
    // log2(e · |Δ| (φ+1) / (2 Σ)), split to keep each factor in range.
    let log2_gamma = LOG2_E + diff.log2() + (dev.phi + 1.0).log2() - (2.0 * sum).log2();
    Ok(h_checked("beta", beta)? + log2_gamma - h_checked("delta", delta)?)
}

/// Eve's information for equal arms: `log2(e²(χ−4)(φ+1)/16) − h(χ/2 − 1)`.
pub fn eve_info_symmetric(channel: &ChannelPair, dev: &CvDeviceParams) -> Result<f64> {
    if CvBranch::for_channel(channel) != CvBranch::Symmetric {
        return Err(Error::Degenerate(
            "arms differ beyond the branch threshold; use the asymmetric formula",
        ));
    }
    let chi = equivalent_noise_symmetric(symmetric_eta(channel), dev)?;
    eve_info_symmetric_from_chi(chi, dev)
}

fn symmetric_eta(channel: &ChannelPair) -> f64 {
    0.5 * (channel.eta_a() + channel.eta_b())
}

fn eve_info_symmetric_from_chi(chi: f64, dev: &CvDeviceParams) -> Result<f64> {
    let excess = chi - 4.0;
    if excess <= 0.0 {
        return Err(Error::ModelDomain {
            quantity: "chi",
            value: chi,
            reason: "chi <= 4 (perfect-device limit) makes Eve's information singular",
        });
    }
    let log_term = 2.0 * LOG2_E + log2_positive("chi - 4", excess)? + (dev.phi + 1.0).log2() - 4.0;
    Ok(log_term - h_checked("chi/2 - 1", chi / 2.0 - 1.0)?)
}

/// Signed key rate, dispatching on the arm mismatch.
pub fn cv_key_rate(channel: &ChannelPair, dev: &CvDeviceParams) -> Result<CvRateBreakdown> {
    require_light(channel)?;
    let branch = CvBranch::for_channel(channel);
    let (chi, i_e) = match branch {
        CvBranch::Asymmetric => (
            equivalent_noise(channel, dev)?,
            eve_info_asymmetric(channel, dev)?,
        ),
        CvBranch::Symmetric => {
            let chi = equivalent_noise_symmetric(symmetric_eta(channel), dev)?;
            (chi, eve_info_symmetric_from_chi(chi, dev)?)
        }
    };
    let i_ab = mutual_info_ab(chi, dev)?;
    Ok(CvRateBreakdown {
        chi,
        i_ab,
        i_e,
        rate: dev.xi * i_ab - i_e,
        branch,
    })
}
