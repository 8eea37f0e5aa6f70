//! Deterministic search for the DV signal intensities that maximize the key rate.
//!
//! A coarse log-spaced grid over `[mu_min, mu_max]²` locates the basin, then a
//! Nelder–Mead simplex in `log10 μ` coordinates refines it. An optional
//! seeded random-restart stage adds further simplex runs from random points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ChannelPair;
use crate::dv::{dv_key_rate, DvDeviceParams, DvRateBreakdown, Intensities};
use crate::error::{check_range, Error, Result};
use crate::nelder_mead::{self, Settings};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub mu_min: f64,
    pub mu_max: f64,
    /// Grid points per axis (log-spaced).
    pub grid_points: usize,
    pub refine_iterations: usize,
    /// Relative spread of simplex values at which refinement stops.
    pub refine_tolerance: f64,
    /// Seed for the random-restart stage.
    pub seed: u64,
    /// Number of extra simplex runs from random starting points (0 = off).
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            mu_min: 1e-4,
            mu_max: 1.0,
            grid_points: 40,
            refine_iterations: 200,
            refine_tolerance: 1e-10,
            seed: 0,
            restarts: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        check_range("mu_min", self.mu_min, self.mu_min > 0.0, "mu_min > 0")?;
        check_range("mu_max", self.mu_max, self.mu_max > self.mu_min, "mu_max > mu_min")?;
        if self.grid_points < 2 {
            return Err(Error::InvalidSpec(format!(
                "grid_points = {} (expected at least 2)",
                self.grid_points
            )));
        }
        check_range(
            "refine_tolerance",
            self.refine_tolerance,
            self.refine_tolerance >= 0.0,
            "refine_tolerance >= 0",
        )?;
        Ok(())
    }

    /// Log-spaced grid values, ascending, endpoints exact.
    pub fn grid(&self) -> Vec<f64> {
        let (lo, hi) = (self.mu_min.log10(), self.mu_max.log10());
        let last = self.grid_points - 1;
        (0..self.grid_points)
            .map(|i| match i {
                0 => self.mu_min,
                i if i == last => self.mu_max,
                i => 10f64.powf(lo + (hi - lo) * i as f64 / last as f64),
            })
            .collect()
    }
}

/// Best intensities found and the rate they give.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub mu: Intensities,
    pub rate: f64,
    pub breakdown: DvRateBreakdown,
    /// Number of key-rate evaluations spent.
    pub evaluations: usize,
    /// False when no intensity pair in the box gives a positive rate.
    pub positive: bool,
}

/// Maximizes the signed DV key rate over `(μ_A, μ_B) ∈ [mu_min, mu_max]²`.
///
/// The result is bit-identical for identical inputs. Grid ties break toward
/// smaller `μ_A`, then smaller `μ_B`. Points where the model errors out are
/// skipped; if every grid point errors, the first error is returned.
pub fn optimize_intensities(
    channel: &ChannelPair,
    dev: &DvDeviceParams,
    cfg: &OptimizerConfig,
) -> Result<Optimum> {
    cfg.validate()?;
    let mut evaluations = 0usize;
    let mut rate_at = |mu_a: f64, mu_b: f64| -> Result<DvRateBreakdown> {
        evaluations += 1;
        dv_key_rate(channel, dev, &Intensities::new(mu_a, mu_b)?)
    };

    let grid = cfg.grid();
    let mut best: Option<(f64, f64, DvRateBreakdown)> = None;
    let mut first_error = None;
    for &mu_a in &grid {
        for &mu_b in &grid {
            match rate_at(mu_a, mu_b) {
                Ok(b) => {
                    if best.is_none_or(|(_, _, cur)| b.rate > cur.rate) {
                        best = Some((mu_a, mu_b, b));
                    }
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                }
            }
        }
    }
    let Some(mut best) = best else {
        return Err(first_error.expect("grid is non-empty"));
    };

    let (log_lo, log_hi) = (cfg.mu_min.log10(), cfg.mu_max.log10());
    let cell = (log_hi - log_lo) / (cfg.grid_points - 1) as f64;
    // Points outside the box are mirrored back in. Plain clamping would leave
    // a flat shelf past each edge that the simplex can collapse onto.
    let to_mu = |x: f64| {
        let folded = if x > log_hi {
            2.0 * log_hi - x
        } else if x < log_lo {
            2.0 * log_lo - x
        } else {
            x
        };
        10f64.powf(folded.clamp(log_lo, log_hi))
    };
    let settings = Settings {
        max_iterations: cfg.refine_iterations,
        f_tolerance: cfg.refine_tolerance,
        x_tolerance: 1e-10,
    };

    let mut starts = vec![[best.0.log10(), best.1.log10()]];
    if cfg.restarts > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..cfg.restarts {
            starts.push([rng.gen_range(log_lo..=log_hi), rng.gen_range(log_lo..=log_hi)]);
        }
    }

    for start in starts {
        // Step inward so no initial vertex is clamped onto the start.
        let step = start.map(|x| if x + cell <= log_hi { cell } else { -cell });
        let found = nelder_mead::minimize(
            |x| match rate_at(to_mu(x[0]), to_mu(x[1])) {
                Ok(b) => -b.rate,
                Err(_) => f64::INFINITY,
            },
            &start,
            &step,
            settings,
        );
        if -found.value <= best.2.rate {
            continue;
        }
        let (mu_a, mu_b) = (to_mu(found.x[0]), to_mu(found.x[1]));
        if let Ok(b) = rate_at(mu_a, mu_b) {
            if b.rate > best.2.rate {
                best = (mu_a, mu_b, b);
            }
        }
    }

    let (mu_a, mu_b, breakdown) = best;
    Ok(Optimum {
        mu: Intensities::new(mu_a, mu_b)?,
        rate: breakdown.rate,
        breakdown,
        evaluations,
        positive: breakdown.rate > 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Scenario;

    fn optimum(loss: f64, scenario: Scenario) -> Optimum {
        let ch = ChannelPair::from_total_loss(loss, scenario).unwrap();
        optimize_intensities(&ch, &DvDeviceParams::default(), &OptimizerConfig::default()).unwrap()
    }

    #[test]
    fn config_validation() {
        let bad = OptimizerConfig {
            mu_min: 1.0,
            mu_max: 0.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            grid_points: 1,
            ..Default::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn grid_is_log_spaced_with_exact_ends() {
        let g = OptimizerConfig::default().grid();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 1e-4);
        assert_eq!(g[39], 1.0);
        let r1 = g[1] / g[0];
        let r2 = g[21] / g[20];
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn beats_fixed_probe_at_zero_loss() {
        let ch = ChannelPair::new(1.0, 1.0).unwrap();
        let dev = DvDeviceParams::default();
        let probe = dv_key_rate(&ch, &dev, &Intensities::new(0.5, 0.5).unwrap()).unwrap();
        let best = optimum(0.0, Scenario::Symmetric);
        assert!(best.rate >= probe.rate);
        assert!(best.positive);
    }

    #[test]
    fn symmetric_channel_has_symmetric_optimum() {
        for loss in [0.0, 4.0, 20.0] {
            let best = optimum(loss, Scenario::Symmetric);
            let (a, b) = (best.mu.mu_a(), best.mu.mu_b());
            assert!((a - b).abs() / a < 0.05, "loss {loss}: {a} vs {b}");
        }
    }

    #[test]
    fn metropolitan_rate() {
        let r = optimum(4.0, Scenario::Symmetric).rate;
        assert!((0.01..=0.04).contains(&r), "{r}");
    }

    #[test]
    fn deterministic() {
        let ch = ChannelPair::from_total_loss(7.0, Scenario::AsymmetricRelayAtAlice).unwrap();
        let cfg = OptimizerConfig {
            restarts: 3,
            seed: 11,
            ..Default::default()
        };
        let a = optimize_intensities(&ch, &DvDeviceParams::default(), &cfg).unwrap();
        let b = optimize_intensities(&ch, &DvDeviceParams::default(), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rate.to_bits(), b.rate.to_bits());
    }

    #[test]
    fn refinement_dominates_grid() {
        let dev = DvDeviceParams::default();
        let cfg = OptimizerConfig::default();
        for loss in [0.0, 3.0, 12.0, 33.0] {
            let ch = ChannelPair::from_total_loss(loss, Scenario::AsymmetricRelayAtAlice).unwrap();
            let grid_best = cfg
                .grid()
                .iter()
                .flat_map(|&a| cfg.grid().into_iter().map(move |b| (a, b)))
                .filter_map(|(a, b)| dv_key_rate(&ch, &dev, &Intensities::new(a, b).unwrap()).ok())
                .map(|b| b.rate)
                .fold(f64::NEG_INFINITY, f64::max);
            let best = optimize_intensities(&ch, &dev, &cfg).unwrap();
            assert!(best.rate >= grid_best);
        }
    }

    #[test]
    fn restarts_never_hurt() {
        let ch = ChannelPair::from_total_loss(25.0, Scenario::AsymmetricRelayAtAlice).unwrap();
        let dev = DvDeviceParams::default();
        let plain = optimize_intensities(&ch, &dev, &OptimizerConfig::default()).unwrap();
        let restarted = optimize_intensities(
            &ch,
            &dev,
            &OptimizerConfig {
                restarts: 4,
                seed: 7,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(restarted.rate >= plain.rate);
        assert!(restarted.evaluations > plain.evaluations);
    }

    #[test]
    fn reports_no_positive_rate() {
        let ch = ChannelPair::from_total_loss(80.0, Scenario::AsymmetricRelayAtAlice).unwrap();
        let best = optimize_intensities(&ch, &DvDeviceParams::default(), &OptimizerConfig::default())
            .unwrap();
        assert!(!best.positive);
        assert!(best.rate <= 0.0);
    }

    #[test]
    fn all_points_degenerate_is_an_error() {
        let ch = ChannelPair::new(0.0, 0.5).unwrap();
        let dev = DvDeviceParams::new(0.93, 0.001, 0.0, 1.16).unwrap();
        assert!(matches!(
            optimize_intensities(&ch, &dev, &OptimizerConfig::default()),
            Err(Error::Degenerate(_))
        ));
    }
}
