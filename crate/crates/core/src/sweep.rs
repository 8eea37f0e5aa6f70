//! Rate-versus-loss series, cutoff search and model comparisons.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::bounds::tgw_bound;
use crate::channel::{ChannelPair, FiberSpec, Scenario};
use crate::cv::{cv_key_rate, CvDeviceParams};
use crate::dv::{DvDeviceParams, Intensities};
use crate::error::{BracketFailure, Error, Result};
use crate::optimize::{optimize_intensities, OptimizerConfig};

/// Absolute tolerance of [`find_cutoff`], in dB.
pub const CUTOFF_TOLERANCE_DB: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Model {
    Dv,
    Cv,
    Tgw,
}

impl Model {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Dv => "dv",
            Self::Cv => "cv",
            Self::Tgw => "tgw",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dv" => Ok(Self::Dv),
            "cv" => Ok(Self::Cv),
            "tgw" => Ok(Self::Tgw),
            other => Err(Error::InvalidSpec(format!(
                "unknown model `{other}` (expected dv|cv|tgw)"
            ))),
        }
    }
}

/// Quantity on the horizontal axis of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Sum of both arms' losses, dB.
    TotalLossDb,
    /// Sum of both arms' fiber lengths, km.
    DistanceKm,
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "loss" | "loss-db" | "total-loss-db" => Ok(Self::TotalLossDb),
            "distance" | "distance-km" => Ok(Self::DistanceKm),
            other => Err(Error::InvalidSpec(format!(
                "unknown axis `{other}` (expected loss|distance)"
            ))),
        }
    }
}

/// Device and optimizer parameters for every model.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModelParams {
    pub dv: DvDeviceParams,
    pub cv: CvDeviceParams,
    pub optimizer: OptimizerConfig,
}

/// One model evaluation at one channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    /// Signed rate in bits per use.
    pub rate: f64,
    /// Optimized intensities (DV only).
    pub mu: Option<Intensities>,
}

/// Evaluates `model` on `channel`; DV re-optimizes the intensities.
pub fn evaluate(model: Model, channel: &ChannelPair, params: &ModelParams) -> Result<Evaluation> {
    match model {
        Model::Dv => {
            let best = optimize_intensities(channel, &params.dv, &params.optimizer)?;
            Ok(Evaluation {
                rate: best.rate,
                mu: Some(best.mu),
            })
        }
        Model::Cv => Ok(Evaluation {
            rate: cv_key_rate(channel, &params.cv)?.rate,
            mu: None,
        }),
        Model::Tgw => Ok(Evaluation {
            rate: tgw_bound(channel),
            mu: None,
        }),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub model: Model,
    pub scenario: Scenario,
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    pub fiber: FiberSpec,
    pub params: ModelParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::InvalidSpec("start and stop must be finite".into()));
        }
        if self.start < 0.0 {
            return Err(Error::InvalidSpec(format!("start = {} must be >= 0", self.start)));
        }
        if !(self.start < self.stop) {
            return Err(Error::InvalidSpec(format!(
                "start = {} must be strictly below stop = {}",
                self.start, self.stop
            )));
        }
        if self.points < 2 {
            return Err(Error::InvalidSpec(format!(
                "points = {} (expected at least 2)",
                self.points
            )));
        }
        if self.model == Model::Tgw && self.start <= 0.0 {
            return Err(Error::InvalidSpec(
                "the TGW bound diverges at zero loss; start must be > 0".into(),
            ));
        }
        if self.model == Model::Dv {
            self.params.optimizer.validate()?;
        }
        Ok(())
    }

    /// Abscissa values, ascending, with exact endpoints.
    pub fn abscissae(&self) -> Vec<f64> {
        let last = self.points - 1;
        let step = (self.stop - self.start) / last as f64;
        (0..self.points)
            .map(|i| if i == last { self.stop } else { self.start + step * i as f64 })
            .collect()
    }

    fn total_loss_db(&self, abscissa: f64) -> f64 {
        match self.axis {
            Axis::TotalLossDb => abscissa,
            Axis::DistanceKm => abscissa * self.fiber.alpha(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    /// The model rejected this point; the message says why.
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub abscissa: f64,
    pub total_loss_db: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    /// Signed rate; `None` for invalid points.
    pub rate_signed: Option<f64>,
    pub mu: Option<Intensities>,
    pub status: RowStatus,
}

impl SweepRow {
    /// Rate floored at zero; `None` for invalid points.
    pub fn rate_clamped(&self) -> Option<f64> {
        self.rate_signed.map(|r| r.max(0.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateSeries {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

/// Evaluates the model at every abscissa of `spec`.
///
/// Points are computed in parallel on the current rayon pool and assembled
/// in abscissa order. Model errors are recorded per row, not propagated.
pub fn run_sweep(spec: &SweepSpec) -> Result<RateSeries> {
    spec.validate()?;
    let rows = spec
        .abscissae()
        .into_par_iter()
        .map(|abscissa| {
            let total_loss_db = spec.total_loss_db(abscissa);
            let channel = ChannelPair::from_total_loss(total_loss_db, spec.scenario)?;
            let (rate_signed, mu, status) = match evaluate(spec.model, &channel, &spec.params) {
                Ok(ev) => (Some(ev.rate), ev.mu, RowStatus::Ok),
                Err(e) => (None, None, RowStatus::Invalid(e.to_string())),
            };
            Ok(SweepRow {
                abscissa,
                total_loss_db,
                eta_a: channel.eta_a(),
                eta_b: channel.eta_b(),
                rate_signed,
                mu,
                status,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateSeries {
        spec: spec.clone(),
        rows,
    })
}

/// Total loss (dB) at which the signed rate of `model` crosses zero, found by
/// bisection on `[lo_db, hi_db]` to [`CUTOFF_TOLERANCE_DB`].
///
/// Fails with [`Error::Bracket`] when the rate is not positive at `lo_db` or
/// is still positive at `hi_db`.
pub fn find_cutoff(
    model: Model,
    scenario: Scenario,
    params: &ModelParams,
    lo_db: f64,
    hi_db: f64,
) -> Result<f64> {
    if !(lo_db >= 0.0 && lo_db < hi_db && hi_db.is_finite()) {
        return Err(Error::InvalidSpec(format!(
            "cutoff bracket [{lo_db}, {hi_db}] must satisfy 0 <= lo < hi"
        )));
    }
    let rate = |loss: f64| -> Result<f64> {
        let channel = ChannelPair::from_total_loss(loss, scenario)?;
        Ok(evaluate(model, &channel, params)?.rate)
    };
    let at_lo = rate(lo_db)?;
    if at_lo <= 0.0 {
        return Err(Error::Bracket(BracketFailure::NonPositiveAtOrigin {
            loss_db: lo_db,
            rate: at_lo,
        }));
    }
    let at_hi = rate(hi_db)?;
    if at_hi > 0.0 {
        return Err(Error::Bracket(BracketFailure::BeyondBracket {
            loss_db: hi_db,
            rate: at_hi,
        }));
    }
    let (mut lo, mut hi) = (lo_db, hi_db);
    while hi - lo > CUTOFF_TOLERANCE_DB {
        let mid = 0.5 * (lo + hi);
        if rate(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `R_CV / R_DV` at one total loss, with DV intensities optimized.
pub fn advantage_ratio(loss_db: f64, scenario: Scenario, params: &ModelParams) -> Result<f64> {
    let channel = ChannelPair::from_total_loss(loss_db, scenario)?;
    let cv = evaluate(Model::Cv, &channel, params)?.rate;
    let dv = evaluate(Model::Dv, &channel, params)?.rate;
    if cv <= 0.0 || dv <= 0.0 {
        return Err(Error::UndefinedRatio(format!(
            "at {loss_db} dB ({scenario}) R_CV = {cv:e}, R_DV = {dv:e}; both must be positive"
        )));
    }
    Ok(cv / dv)
}
