//! Production formulas against the 320-bit literal transcriptions.

use qkd_ratelab::cv::CvBranch;
use qkd_ratelab::dv::{error_11x, gain_and_qber, yield_11};
use qkd_ratelab::{cv_key_rate, dv_key_rate, ChannelPair, CvDeviceParams, DvDeviceParams, Intensities};
use qkd_ratelab_oracle::{self as oracle, CvInputs, DvInputs};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    rng.gen_range(lo.ln()..=hi.ln()).exp()
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        ((got - want) / want).abs()
    }
}

struct DvDraw {
    channel: ChannelPair,
    dev: DvDeviceParams,
    mu: Intensities,
}

impl DvDraw {
    fn random(rng: &mut impl Rng) -> Self {
        Self {
            channel: ChannelPair::new(log_uniform(rng, 1e-4, 1.0), log_uniform(rng, 1e-4, 1.0)).unwrap(),
            dev: DvDeviceParams::new(
                rng.gen_range(0.3..=1.0),
                log_uniform(rng, 1e-4, 0.1),
                log_uniform(rng, 1e-8, 1e-4),
                rng.gen_range(1.0..1.5),
            )
            .unwrap(),
            mu: Intensities::new(log_uniform(rng, 1e-4, 1.0), log_uniform(rng, 1e-4, 1.0)).unwrap(),
        }
    }

    fn oracle(&self) -> oracle::DvReference {
        oracle::dv(DvInputs {
            eta_a: self.channel.eta_a(),
            eta_b: self.channel.eta_b(),
            mu_a: self.mu.mu_a(),
            mu_b: self.mu.mu_b(),
            eta_d: self.dev.eta_d(),
            e_d: self.dev.e_d(),
            y0: self.dev.y0(),
            f_e: self.dev.f_e(),
        })
    }
}

#[test]
fn dv_gain_and_qber_match_oracle_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = DvDraw::random(&mut rng);
        let (gain, qber) = gain_and_qber(&d.channel, &d.dev, &d.mu).unwrap();
        let r = d.oracle();
        worst = worst.max(rel_err(gain, r.gain)).max(rel_err(qber, r.qber));
        assert!(rel_err(gain, r.gain) <= 1e-10, "gain {gain} vs {}", r.gain);
        assert!(rel_err(qber, r.qber) <= 1e-10, "qber {qber} vs {}", r.qber);
    }
    eprintln!("worst relative error over 100 DV draws: {worst:e}");
}

#[test]
fn dv_single_photon_terms_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    for _ in 0..100 {
        let d = DvDraw::random(&mut rng);
        let r = d.oracle();
        assert!(rel_err(yield_11(&d.channel, &d.dev), r.yield_11) <= 1e-12);
        assert!(rel_err(error_11x(&d.channel, &d.dev).unwrap(), r.error_11x) <= 1e-9);
    }
}

#[test]
fn dv_rate_matches_oracle_where_well_conditioned() {
    // The signed rate is a difference of two terms; compare relative to their scale.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0003);
    for _ in 0..100 {
        let d = DvDraw::random(&mut rng);
        let b = dv_key_rate(&d.channel, &d.dev, &d.mu).unwrap();
        let r = d.oracle();
        let scale = b.p11 * b.y11 + b.gain_z;
        assert!((b.rate - r.rate).abs() <= 1e-10 * scale, "{} vs {}", b.rate, r.rate);
    }
}

fn cv_draw(rng: &mut impl Rng) -> (ChannelPair, CvDeviceParams) {
    let channel = ChannelPair::new(rng.gen_range(0.3..=1.0), rng.gen_range(0.3..=1.0)).unwrap();
    let dev = CvDeviceParams::new(
        rng.gen_range(0.85..=1.0),
        rng.gen_range(0.001..0.05),
        rng.gen_range(10.0..100.0),
        rng.gen_range(0.9..=1.0),
    )
    .unwrap();
    (channel, dev)
}

fn cv_oracle(channel: &ChannelPair, dev: &CvDeviceParams) -> oracle::CvReference {
    let inputs = CvInputs {
        eta_a: channel.eta_a(),
        eta_b: channel.eta_b(),
        eta_d: dev.eta_d(),
        epsilon: dev.epsilon(),
        phi: dev.phi(),
        xi: dev.xi(),
    };
    if channel.eta_a() == channel.eta_b() {
        oracle::cv_symmetric(channel.eta_a(), inputs)
    } else {
        oracle::cv_asymmetric(inputs)
    }
}

#[test]
fn cv_rate_matches_oracle_on_random_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0004);
    let mut checked = 0;
    while checked < 100 {
        let (channel, dev) = cv_draw(&mut rng);
        let reference = cv_oracle(&channel, &dev);
        let Some(want) = reference.rate else {
            assert!(cv_key_rate(&channel, &dev).is_err());
            continue;
        };
        let got = cv_key_rate(&channel, &dev).unwrap();
        assert_eq!(got.branch, CvBranch::Asymmetric);
        assert!(rel_err(got.rate, want) <= 1e-9, "{} vs {want}", got.rate);
        assert!(rel_err(got.chi, reference.chi) <= 1e-14);
        checked += 1;
    }
}

#[test]
fn cv_symmetric_branch_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
    for _ in 0..100 {
        let (c, dev) = cv_draw(&mut rng);
        let channel = ChannelPair::new(c.eta_a(), c.eta_a()).unwrap();
        let want = cv_oracle(&channel, &dev).rate.unwrap();
        let got = cv_key_rate(&channel, &dev).unwrap();
        assert_eq!(got.branch, CvBranch::Symmetric);
        assert!(rel_err(got.rate, want) <= 1e-9, "{} vs {want}", got.rate);
    }
}
