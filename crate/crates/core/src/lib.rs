//! Asymptotic secret-key rates for measurement-device-independent QKD.
//!
//! * [`dv`]: decoy-state discrete-variable protocol with threshold detectors.
//! * [`cv`]: continuous-variable protocol under the two-link Gaussian attack.
//! * [`bounds`]: the TGW repeaterless bound.
//! * [`optimize`]: deterministic intensity optimization for the DV rate.
//! * [`sweep`]: rate-versus-loss series, cutoff search, model ratios.
//!
//! Rates are in bits per use (per pulse pair for DV). All functions are pure
//! and can be called from any number of threads.

pub mod bounds;
pub mod channel;
pub mod cv;
pub mod dv;
mod error;
pub mod math;
mod nelder_mead;
pub mod optimize;
pub mod sweep;

pub use bounds::tgw_bound;
pub use channel::{transmittance_from_loss, ChannelPair, FiberSpec, Scenario};
pub use cv::{cv_key_rate, CvBranch, CvDeviceParams, CvRateBreakdown};
pub use dv::{dv_key_rate, DvDeviceParams, DvRateBreakdown, Intensities};
pub use error::{BracketFailure, Error, Result};
pub use optimize::{optimize_intensities, OptimizerConfig, Optimum};
pub use sweep::{
    advantage_ratio, evaluate, find_cutoff, run_sweep, Axis, Evaluation, Model, ModelParams,
    RateSeries, RowStatus, SweepRow, SweepSpec,
};
