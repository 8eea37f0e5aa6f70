//! Fixtures shared by the `rates` benchmarks.

use qkd_ratelab::{ChannelPair, Scenario};

/// Total losses (dB) covering the metropolitan range.
pub const LOSSES_DB: [f64; 3] = [0.5, 4.0, 20.0];

pub fn channel(loss_db: f64, scenario: Scenario) -> ChannelPair {
    ChannelPair::from_total_loss(loss_db, scenario).expect("benchmark losses are valid")
}
