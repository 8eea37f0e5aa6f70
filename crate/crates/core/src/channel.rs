//! The two optical arms between the users and the relay.

use std::fmt;
use std::str::FromStr;

use crate::error::{check_range, Error, Result};

/// Fiber attenuation used by the metropolitan examples, in dB/km.
pub const STANDARD_FIBER_LOSS_DB_PER_KM: f64 = 0.2;

/// Fiber attenuation coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    alpha_db_per_km: f64,
}

impl FiberSpec {
    pub fn new(alpha_db_per_km: f64) -> Result<Self> {
        check_range("alpha", alpha_db_per_km, alpha_db_per_km > 0.0, "alpha > 0 dB/km")?;
        Ok(Self { alpha_db_per_km })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_db_per_km
    }

    pub fn loss_db(&self, length_km: f64) -> Result<f64> {
        check_range("length_km", length_km, length_km >= 0.0, "length >= 0 km")?;
        Ok(self.alpha_db_per_km * length_km)
    }

    pub fn length_km(&self, loss_db: f64) -> f64 {
        loss_db / self.alpha_db_per_km
    }
}

impl Default for FiberSpec {
    fn default() -> Self {
        Self {
            alpha_db_per_km: STANDARD_FIBER_LOSS_DB_PER_KM,
        }
    }
}

/// Where the relay sits between the two users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Relay co-located with Alice: her arm is lossless, Bob's arm carries all the loss.
    AsymmetricRelayAtAlice,
    /// Relay half-way: each arm carries half of the loss.
    Symmetric,
}

impl Scenario {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::AsymmetricRelayAtAlice => "asymmetric",
            Self::Symmetric => "symmetric",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "asymmetric" | "asym" => Ok(Self::AsymmetricRelayAtAlice),
            "symmetric" | "sym" => Ok(Self::Symmetric),
            other => Err(Error::InvalidSpec(format!(
                "unknown scenario `{other}` (expected asymmetric|symmetric)"
            ))),
        }
    }
}

/// Power transmittance of a link with `loss_db` of attenuation: `10^(-loss/10)`.
pub fn transmittance_from_loss(loss_db: f64) -> Result<f64> {
    check_range("loss_db", loss_db, loss_db >= 0.0, "finite loss >= 0 dB")?;
    Ok(10f64.powf(-loss_db / 10.0).min(1.0))
}

/// Inverse of [`transmittance_from_loss`].
pub fn loss_from_transmittance(eta: f64) -> Result<f64> {
    check_range("eta", eta, eta > 0.0 && eta <= 1.0, "0 < eta <= 1")?;
    Ok(-10.0 * eta.log10())
}

/// Transmittances of the Alice→relay and Bob→relay arms.
///
/// Zero transmittance is representable (it is the natural "no light" limit
/// of the DV formulas); models that cannot handle it reject it themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelPair {
    eta_a: f64,
    eta_b: f64,
}

impl ChannelPair {
    pub fn new(eta_a: f64, eta_b: f64) -> Result<Self> {
        check_range("eta_a", eta_a, (0.0..=1.0).contains(&eta_a), "0 <= eta_a <= 1")?;
        check_range("eta_b", eta_b, (0.0..=1.0).contains(&eta_b), "0 <= eta_b <= 1")?;
        Ok(Self { eta_a, eta_b })
    }

    pub fn eta_a(&self) -> f64 {
        self.eta_a
    }

    pub fn eta_b(&self) -> f64 {
        self.eta_b
    }

    /// End-to-end transmittance `eta_a · eta_b`.
    pub fn product(&self) -> f64 {
        self.eta_a * self.eta_b
    }

    pub fn swapped(&self) -> Self {
        Self {
            eta_a: self.eta_b,
            eta_b: self.eta_a,
        }
    }

    /// Splits a total system loss (sum of both arms, in dB) according to the scenario.
    pub fn from_total_loss(total_loss_db: f64, scenario: Scenario) -> Result<Self> {
        check_range("total_loss_db", total_loss_db, total_loss_db >= 0.0, "finite loss >= 0 dB")?;
        match scenario {
            Scenario::AsymmetricRelayAtAlice => {
                Self::new(1.0, transmittance_from_loss(total_loss_db)?)
            }
            Scenario::Symmetric => {
                let eta = transmittance_from_loss(total_loss_db / 2.0)?;
                Self::new(eta, eta)
            }
        }
    }

    /// Arms of `l_a` and `l_b` kilometres of fiber.
    pub fn from_distances(l_a: f64, l_b: f64, fiber: FiberSpec) -> Result<Self> {
        check_range("l_a", l_a, l_a >= 0.0, "length >= 0 km")?;
        check_range("l_b", l_b, l_b >= 0.0, "length >= 0 km")?;
        Self::new(
            transmittance_from_loss(fiber.loss_db(l_a)?)?,
            transmittance_from_loss(fiber.loss_db(l_b)?)?,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn transmittance_examples() {
        assert_eq!(transmittance_from_loss(0.0).unwrap(), 1.0);
        assert!((transmittance_from_loss(3.0103).unwrap() - 0.5).abs() < 1e-6);
        assert_relative_eq!(
            transmittance_from_loss(4.0).unwrap(),
            0.398_107_170_553_497_25,
            max_relative = 1e-14
        );
        for bad in [-0.1, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                transmittance_from_loss(bad),
                Err(Error::Domain { name: "loss_db", .. })
            ));
        }
    }

    #[test]
    fn total_loss_scenarios() {
        let c = ChannelPair::from_total_loss(0.0, Scenario::Symmetric).unwrap();
        assert_eq!((c.eta_a(), c.eta_b()), (1.0, 1.0));

        let c = ChannelPair::from_total_loss(4.0, Scenario::AsymmetricRelayAtAlice).unwrap();
        assert_eq!(c.eta_a(), 1.0);
        assert_relative_eq!(c.eta_b(), 0.398_107_170_553_497_25, max_relative = 1e-14);

        let c = ChannelPair::from_total_loss(4.0, Scenario::Symmetric).unwrap();
        assert_relative_eq!(c.eta_a(), 0.630_957_344_480_193_2, max_relative = 1e-14);
        assert_eq!(c.eta_a(), c.eta_b());

        assert!(ChannelPair::from_total_loss(-1.0, Scenario::Symmetric).is_err());
    }

    #[test]
    fn distance_examples() {
        let fiber = FiberSpec::default();
        let c = ChannelPair::from_distances(0.0, 0.0, fiber).unwrap();
        assert_eq!((c.eta_a(), c.eta_b()), (1.0, 1.0));
        let c = ChannelPair::from_distances(0.0, 20.0, fiber).unwrap();
        assert_relative_eq!(c.eta_b(), 0.398_107_170_553_497_25, max_relative = 1e-12);
        let c = ChannelPair::from_distances(10.0, 10.0, fiber).unwrap();
        assert_relative_eq!(c.eta_a(), 0.630_957_344_480_193_2, max_relative = 1e-12);
        assert_relative_eq!(c.eta_b(), 0.630_957_344_480_193_2, max_relative = 1e-12);
        assert!(ChannelPair::from_distances(-1.0, 0.0, fiber).is_err());
        assert!(FiberSpec::new(0.0).is_err());
    }

    #[test]
    fn channel_rejects_out_of_range() {
        assert!(ChannelPair::new(1.1, 0.5).is_err());
        assert!(ChannelPair::new(0.5, -0.1).is_err());
        assert!(ChannelPair::new(0.0, 0.0).is_ok());
    }

    proptest! {
        #[test]
        fn loss_round_trip(eta in 1e-12f64..=1.0) {
            let back = transmittance_from_loss(loss_from_transmittance(eta).unwrap()).unwrap();
            prop_assert!((back - eta).abs() <= 1e-12);
        }

        #[test]
        fn total_transmittance_scenario_independent(loss in 0.0f64..80.0) {
            let a = ChannelPair::from_total_loss(loss, Scenario::AsymmetricRelayAtAlice).unwrap();
            let s = ChannelPair::from_total_loss(loss, Scenario::Symmetric).unwrap();
            prop_assert!((a.product() - s.product()).abs() <= 1e-12);
        }
    }
}
