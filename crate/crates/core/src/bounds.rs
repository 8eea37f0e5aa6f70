use crate::channel::ChannelPair;

/// TGW upper bound on the key rate per optical mode over the end-to-end
/// transmittance `η_A η_B`: `log2((1 + η)/(1 − η))`.
///
/// Returns `f64::INFINITY` for a lossless end-to-end channel.
pub fn tgw_bound(channel: &ChannelPair) -> f64 {
    let eta = channel.product();
    if eta >= 1.0 {
        return f64::INFINITY;
    }
    (eta.ln_1p() - (-eta).ln_1p()) * std::f64::consts::LOG2_E
}
