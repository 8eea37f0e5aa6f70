//! Reference evaluations of the rate formulas in 320-bit floating point.
//!
//! This crate exists only for tests. Every formula is transcribed literally,
//! term by term, with no algebraic rearrangement, so that it stays an
//! independent check on the production code (which reorganizes several
//! expressions to avoid cancellation). Inputs and outputs are `f64`.
//!
//! The [`naive`] module holds the same literal transcription in plain `f64`;
//! it is fast enough for brute-force grid searches.

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, RoundingMode};

const PREC: usize = 320;
const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("constant cache"));
}

#[derive(Clone, Debug)]
struct Hp(BigFloat);

impl Hp {
    fn from(x: f64) -> Self {
        Hp(BigFloat::from_f64(x, PREC))
    }

    fn to_f64(&self) -> f64 {
        self.0.to_string().parse().expect("decimal rendering")
    }

    fn exp(&self) -> Self {
        CONSTS.with(|cc| Hp(self.0.exp(PREC, RM, &mut cc.borrow_mut())))
    }

    fn log2(&self) -> Self {
        assert!(self.0.is_positive(), "log2 of non-positive value");
        CONSTS.with(|cc| Hp(self.0.log2(PREC, RM, &mut cc.borrow_mut())))
    }

    fn sqrt(&self) -> Self {
        Hp(self.0.sqrt(PREC, RM))
    }

    fn abs(&self) -> Self {
        Hp(self.0.abs())
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn gt(&self, other: &Hp) -> bool {
        self.0 > other.0
    }
}

macro_rules! binop {
    ($tr:ident, $f:ident) => {
        impl $tr for Hp {
            type Output = Hp;
            fn $f(self, rhs: Hp) -> Hp {
                Hp(self.0.$f(&rhs.0, PREC, RM))
            }
        }
        impl $tr<f64> for Hp {
            type Output = Hp;
            fn $f(self, rhs: f64) -> Hp {
                Hp(self.0.$f(&Hp::from(rhs).0, PREC, RM))
            }
        }
        impl $tr<Hp> for f64 {
            type Output = Hp;
            fn $f(self, rhs: Hp) -> Hp {
                Hp(Hp::from(self).0.$f(&rhs.0, PREC, RM))
            }
        }
    };
}
binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Hp {
    type Output = Hp;
    fn neg(self) -> Hp {
        Hp(self.0.neg())
    }
}

fn euler() -> Hp {
    Hp::from(1.0).exp()
}

/// `x log2 x`, zero at zero.
fn xlog2x(x: &Hp) -> Hp {
    if x.is_zero() {
        Hp::from(0.0)
    } else {
        x.clone() * x.log2()
    }
}

fn hp_binary_entropy(p: Hp) -> Hp {
    -xlog2x(&p) - xlog2x(&(1.0 - p.clone()))
}

fn hp_h(x: Hp) -> Hp {
    xlog2x(&((x.clone() + 1.0) / 2.0)) - xlog2x(&((x - 1.0) / 2.0))
}

/// Power series `sum_k (x²/4)^k / (k!)²` until terms drop below 2^-PREC.
fn hp_i0(x: Hp) -> Hp {
    let q = x.clone() * x / 4.0;
    let mut term = Hp::from(1.0);
    let mut sum = Hp::from(1.0);
    let tiny = Hp::from(2f64.powi(-300));
    for k in 1..2000u32 {
        let kf = f64::from(k);
        term = term * q.clone() / (kf * kf);
        sum = sum + term.clone();
        if f64::from(k * k) > q.to_f64() && !(term.clone() / sum.clone()).gt(&tiny) {
            break;
        }
    }
    sum
}

pub fn binary_entropy(p: f64) -> f64 {
    hp_binary_entropy(Hp::from(p)).to_f64()
}

pub fn h_function(x: f64) -> f64 {
    hp_h(Hp::from(x)).to_f64()
}

pub fn bessel_i0(x: f64) -> f64 {
    hp_i0(Hp::from(x)).to_f64()
}

/// Arguments shared by the DV formulas.
#[derive(Clone, Copy, Debug)]
pub struct DvInputs {
    pub eta_a: f64,
    pub eta_b: f64,
    pub mu_a: f64,
    pub mu_b: f64,
    pub eta_d: f64,
    pub e_d: f64,
    pub y0: f64,
    pub f_e: f64,
}

/// Reference DV quantities.
#[derive(Clone, Copy, Debug)]
pub struct DvReference {
    pub yield_11: f64,
    pub error_11x: f64,
    pub gain: f64,
    pub qber: f64,
    pub rate: f64,
}

pub fn dv(inputs: DvInputs) -> DvReference {
    let DvInputs {
        eta_a,
        eta_b,
        mu_a,
        mu_b,
        eta_d,
        e_d,
        y0,
        f_e,
    } = inputs;
    let (ea, eb, ma, mb) = (Hp::from(eta_a), Hp::from(eta_b), Hp::from(mu_a), Hp::from(mu_b));
    let (etad, ed, y0) = (Hp::from(eta_d), Hp::from(e_d), Hp::from(y0));
    let one_y0 = 1.0 - y0.clone();

    let y11 = one_y0.clone()
        * one_y0.clone()
        * (4.0
            * y0.clone()
            * y0.clone()
            * (1.0 - ea.clone() * etad.clone())
            * (1.0 - eb.clone() * etad.clone())
            + 2.0
                * y0.clone()
                * (ea.clone() * etad.clone() + eb.clone() * etad.clone()
                    - 1.5 * ea.clone() * eb.clone() * etad.clone() * etad.clone())
            + 0.5 * ea.clone() * eb.clone() * etad.clone() * etad.clone());
    let one_ed = 1.0 - ed.clone();
    let e11 = 0.5
        - one_y0.clone()
            * one_y0.clone()
            * ea.clone()
            * eb.clone()
            * etad.clone()
            * etad.clone()
            * one_ed.clone()
            * one_ed.clone()
            / (4.0 * y11.clone());

    let gamma = (ma.clone() * ea.clone() + mb.clone() * eb.clone()) * etad.clone();
    let beta = etad.clone() * (ma.clone() * mb.clone() * ea.clone() * eb.clone()).sqrt();
    let lambda = beta.clone() * (ed.clone() * one_ed.clone()).sqrt();
    let omega = ma.clone() * ea.clone() * etad.clone()
        + ed.clone() * (mb.clone() * eb.clone() - ma.clone() * ea.clone()) * etad.clone();

    let half_gamma_decay = (-(gamma.clone() / 2.0)).exp();
    let pre = 2.0 * half_gamma_decay.clone() * one_y0.clone() * one_y0.clone();
    let omega1 = pre.clone()
        * (hp_i0(beta.clone())
            + hp_i0(beta.clone() - 2.0 * beta.clone() * ed.clone())
            + 2.0 * one_y0.clone() * one_y0.clone() * half_gamma_decay.clone()
            - 2.0
                * one_y0.clone()
                * (-(gamma.clone() * one_ed.clone() / 2.0)).exp()
                * hp_i0(ed.clone() * beta.clone())
            - 2.0
                * one_y0.clone()
                * (-(gamma.clone() * ed.clone() / 2.0)).exp()
                * hp_i0(beta.clone() - ed.clone() * beta.clone()));
    let omega2 = pre
        * (1.0 + hp_i0(2.0 * lambda.clone())
            + 2.0 * one_y0.clone() * one_y0.clone() * half_gamma_decay
            - 2.0 * one_y0.clone() * (-(omega.clone() / 2.0)).exp() * hp_i0(lambda.clone())
            - 2.0
                * one_y0.clone()
                * (-((gamma.clone() - omega) / 2.0)).exp()
                * hp_i0(lambda));
    let gain = (omega1.clone() + omega2.clone()) / 2.0;
    let qber = omega1.clone() / (omega1 + omega2);

    let p11 = ma.clone() * mb.clone() * (-(ma + mb)).exp();
    let rate = p11 * y11.clone() * (1.0 - hp_binary_entropy(e11.clone()))
        - gain.clone() * f_e * hp_binary_entropy(qber.clone());

    DvReference {
        yield_11: y11.to_f64(),
        error_11x: e11.to_f64(),
        gain: gain.to_f64(),
        qber: qber.to_f64(),
        rate: rate.to_f64(),
    }
}

/// Arguments of the CV formulas.
#[derive(Clone, Copy, Debug)]
pub struct CvInputs {
    pub eta_a: f64,
    pub eta_b: f64,
    pub eta_d: f64,
    pub epsilon: f64,
    pub phi: f64,
    pub xi: f64,
}

/// Reference CV quantities. `None` where an h(x) argument drops below 1 or
/// `chi <= 4` on the symmetric branch.
#[derive(Clone, Copy, Debug)]
pub struct CvReference {
    pub chi: f64,
    pub i_ab: f64,
    pub i_e: Option<f64>,
    pub rate: Option<f64>,
}

/// Asymmetric-branch formulas (requires `eta_a != eta_b`).
pub fn cv_asymmetric(inputs: CvInputs) -> CvReference {
    let (ea, eb) = (Hp::from(inputs.eta_a), Hp::from(inputs.eta_b));
    let etad = Hp::from(inputs.eta_d);
    let phi1 = Hp::from(inputs.phi) + 1.0;
    let sum = ea.clone() + eb.clone();
    let diff = (ea.clone() - eb.clone()).abs();

    let chi = 2.0 * sum.clone() / (ea.clone() * eb.clone() * etad) + inputs.epsilon;
    let i_ab = (phi1.clone() / chi.clone()).log2();
    let beta = (ea.clone() * eb * chi.clone() - sum.clone() * sum.clone())
        / (diff.clone() * sum.clone());
    let gamma = euler() * diff * phi1 / (2.0 * sum.clone());
    let delta = (ea * chi.clone() - sum.clone()) / sum;

    let one = Hp::from(1.0);
    let i_e = if one.gt(&beta) || one.gt(&delta) {
        None
    } else {
        Some(hp_h(beta) + gamma.log2() - hp_h(delta))
    };
    finish_cv(inputs.xi, chi, i_ab, i_e)
}

/// Symmetric-branch formulas at `eta_a = eta_b = eta`.
pub fn cv_symmetric(eta: f64, inputs: CvInputs) -> CvReference {
    let eta = Hp::from(eta);
    let phi1 = Hp::from(inputs.phi) + 1.0;
    let chi = 4.0 / (eta * inputs.eta_d) + inputs.epsilon;
    let i_ab = (phi1.clone() / chi.clone()).log2();
    let e = euler();
    let excess = chi.clone() - 4.0;
    let i_e = if excess.gt(&Hp::from(0.0)) {
        let arg = chi.clone() / 2.0 - 1.0;
        if Hp::from(1.0).gt(&arg) {
            None
        } else {
            Some((e.clone() * e * excess * phi1 / 16.0).log2() - hp_h(arg))
        }
    } else {
        None
    };
    finish_cv(inputs.xi, chi, i_ab, i_e)
}

fn finish_cv(xi: f64, chi: Hp, i_ab: Hp, i_e: Option<Hp>) -> CvReference {
    let rate = i_e.as_ref().map(|ie| (xi * i_ab.clone() - ie.clone()).to_f64());
    CvReference {
        chi: chi.to_f64(),
        i_ab: i_ab.to_f64(),
        i_e: i_e.map(|v| v.to_f64()),
        rate,
    }
}

pub fn tgw(eta_a: f64, eta_b: f64) -> f64 {
    let t = Hp::from(eta_a) * eta_b;
    ((1.0 + t.clone()) / (1.0 - t)).log2().to_f64()
}

/// Literal `f64` transcriptions for brute-force searches.
pub mod naive {
    use super::DvInputs;

    pub fn bessel_i0(x: f64) -> f64 {
        let q = x * x / 4.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= q / f64::from(k * k);
            sum += term;
            if term < 1e-18 * sum {
                break;
            }
        }
        sum
    }

    fn h2(p: f64) -> f64 {
        let t = |x: f64| if x <= 0.0 { 0.0 } else { -x * x.log2() };
        t(p) + t(1.0 - p)
    }

    /// DV key rate straight from the published expressions.
    pub fn dv_rate(i: DvInputs) -> f64 {
        let DvInputs {
            eta_a: ea,
            eta_b: eb,
            mu_a: ma,
            mu_b: mb,
            eta_d: etad,
            e_d: ed,
            y0,
            f_e,
        } = i;
        let c = 1.0 - y0;
        let y11 = c * c
            * (4.0 * y0 * y0 * (1.0 - ea * etad) * (1.0 - eb * etad)
                + 2.0 * y0 * (ea * etad + eb * etad - 1.5 * ea * eb * etad * etad)
                + 0.5 * ea * eb * etad * etad);
        let e11 = 0.5 - c * c * ea * eb * etad * etad * (1.0 - ed) * (1.0 - ed) / (4.0 * y11);
        let g = (ma * ea + mb * eb) * etad;
        let b = etad * (ma * mb * ea * eb).sqrt();
        let l = b * (ed * (1.0 - ed)).sqrt();
        let w = ma * ea * etad + ed * (mb * eb - ma * ea) * etad;
        let pre = 2.0 * (-g / 2.0).exp() * c * c;
        let o1 = pre
            * (bessel_i0(b) + bessel_i0(b - 2.0 * b * ed) + 2.0 * c * c * (-g / 2.0).exp()
                - 2.0 * c * (-g * (1.0 - ed) / 2.0).exp() * bessel_i0(ed * b)
                - 2.0 * c * (-g * ed / 2.0).exp() * bessel_i0(b - ed * b));
        let o2 = pre
            * (1.0 + bessel_i0(2.0 * l) + 2.0 * c * c * (-g / 2.0).exp()
                - 2.0 * c * (-w / 2.0).exp() * bessel_i0(l)
                - 2.0 * c * (-(g - w) / 2.0).exp() * bessel_i0(l));
        let o1 = o1.max(0.0);
        let o2 = o2.max(0.0);
        let q = (o1 + o2) / 2.0;
        let e = if o1 + o2 > 0.0 { o1 / (o1 + o2) } else { 0.0 };
        let p11 = ma * mb * (-(ma + mb)).exp();
        p11 * y11 * (1.0 - h2(e11)) - q * f_e * h2(e)
    }
}
