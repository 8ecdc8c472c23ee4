//! Exact exponent bookkeeping for the kinetic Gagliardo–Nirenberg estimate,
//! the transfer of regularity and the two De Giorgi iterations.
//!
//! Everything here is carried in arbitrary-precision rationals. Floats only
//! appear through [`to_f64`] at the boundary to the numerical modules.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Rational = BigRational;

/// Builds `num/den` as an exact rational.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn to_f64(r: &Rational) -> f64 {
    // numer/denom may individually overflow f64 for deep random draws
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = r.denom().bits().max(r.numer().bits()) as i64 - 60;
            let scale = BigInt::one() << shift.max(0) as usize;
            let n = (r.numer() / &scale).to_f64().unwrap_or(f64::NAN);
            let d = (r.denom() / &scale).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// Formats as `num/den`, always with an explicit denominator.
pub fn fmt_rat(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` or a bare integer.
pub fn parse_rat(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("expected `num/den`, got `{s}`"));
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s, "1"),
    };
    let n = BigInt::from_str(n).map_err(|_| bad())?;
    let d = BigInt::from_str(d).map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

/// Serde adapter storing rationals as `"num/den"` strings.
pub mod serde_rat {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rat(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        parse_rat(&s).map_err(serde::de::Error::custom)
    }
}

/// (d, p, μ): spatial dimension, growth exponent and source integrability.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProblemParams {
    pub d: u32,
    #[serde(with = "serde_rat")]
    pub p: Rational,
    #[serde(with = "serde_rat")]
    pub mu: Rational,
}

impl ProblemParams {
    pub fn new(d: u32, p: Rational, mu: Rational) -> Result<Self> {
        if d == 0 {
            return Err(invalid("d", "must be at least 1"));
        }
        if p <= Rational::one() {
            return Err(invalid("p", format!("must exceed 1, got {}", fmt_rat(&p))));
        }
        if mu <= Rational::one() {
            return Err(invalid("mu", format!("must exceed 1, got {}", fmt_rat(&mu))));
        }
        Ok(Self { d, p, mu })
    }

    /// The dual case μ = p′ = p/(p−1).
    pub fn dual(d: u32, p: Rational) -> Result<Self> {
        let mu = conjugate(&p);
        Self::new(d, p, mu)
    }

    fn dr(&self) -> Rational {
        int(self.d as i64)
    }
}

/// Hölder conjugate p/(p−1).
pub fn conjugate(p: &Rational) -> Rational {
    p / (p - Rational::one())
}

/// Machine-readable reason why a parameter set leaves an admissibility window.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Reason {
    /// p outside (2 − 2/(3d+2), 2 + 2/d).
    WindowP,
    /// q not in (2, ∞).
    WindowQ2,
    /// 1/p − 1/μ outside (−1/(d+1), 1/(3d+1)), equivalently β ∉ (1, 2).
    WindowA,
    /// d·a = 1, so β and 𝖰 are undefined.
    DaSingular,
    /// Besov exponent q outside (max{p, p′}, q̄).
    WindowTransferQ,
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Reason::WindowP => "WINDOW_P",
            Reason::WindowQ2 => "WINDOW_Q2",
            Reason::WindowA => "WINDOW_A",
            Reason::DaSingular => "DA_SINGULAR",
            Reason::WindowTransferQ => "WINDOW_TRANSFER_Q",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExponentTable {
    pub params: ProblemParams,
    /// 1/q from the symmetric closed form; always defined.
    pub inv_q: Rational,
    /// `None` when 1/q ≤ 0.
    pub q: Option<Rational>,
    pub a: Rational,
    pub beta: Option<Rational>,
    pub qdim: Option<Rational>,
    pub theta0: Option<Rational>,
    pub theta1: Option<Rational>,
    pub thetav: Option<Rational>,
    /// p(4d+2)/(p(3d+2) − 2d); `None` when the denominator vanishes.
    pub r_source: Option<Rational>,
    pub qbar: Rational,
    pub alpha: Rational,
    pub delta_dg: Option<Rational>,
    pub admissible: bool,
    pub reasons: Vec<Reason>,
}

/// 1/q = (1/(4d+2))·((3d+1)/p + (d+1)/μ − 1).
pub fn inv_q_symmetric(params: &ProblemParams) -> Rational {
    let d = params.dr();
    let num = (int(3) * &d + int(1)) / &params.p + (&d + int(1)) / &params.mu - int(1);
    num / (int(4) * d + int(2))
}

/// β = (3 + (1−d)a)/(2(1−da)); `None` when da = 1.
pub fn beta_choice(d: u32, a: &Rational) -> Option<Rational> {
    let d = int(d as i64);
    let den = int(2) * (int(1) - &d * a);
    if den.is_zero() {
        return None;
    }
    Some((int(3) + (int(1) - &d) * a) / den)
}

/// 𝖰 = (2β − 1)d + 1.
pub fn homogeneous_dim(d: u32, beta: &Rational) -> Rational {
    (int(2) * beta - int(1)) * int(d as i64) + int(1)
}

/// Kernel integrabilities (θ₀, θ₁, θᵥ) for the integrated kernels.
pub fn kernel_thetas(beta: &Rational, qdim: &Rational) -> (Option<Rational>, Option<Rational>, Option<Rational>) {
    let frac = |den: Rational| if den.is_zero() { None } else { Some(qdim / den) };
    (frac(qdim + beta - int(2)), frac(qdim - int(1)), frac(qdim + int(1) - beta))
}

fn in_open(x: &Rational, lo: &Rational, hi: &Rational) -> bool {
    lo < x && x < hi
}

/// a-window (−1/(d+1), 1/(3d+1)).
pub fn a_window(d: u32) -> (Rational, Rational) {
    let d = d as i64;
    (rat(-1, d + 1), rat(1, 3 * d + 1))
}

pub fn compute_exponents(params: &ProblemParams) -> ExponentTable {
    let d = params.d;
    let dr = params.dr();
    let p = &params.p;
    let mu = &params.mu;

    let a = p.recip() - mu.recip();
    let inv_q = inv_q_symmetric(params);
    let q = inv_q.is_positive().then(|| inv_q.recip());

    let beta = beta_choice(d, &a);
    let qdim = beta.as_ref().map(|b| homogeneous_dim(d, b));
    let (theta0, theta1, thetav) = match (&beta, &qdim) {
        (Some(b), Some(qd)) => kernel_thetas(b, qd),
        _ => (None, None, None),
    };

    let r_den = p * (int(3) * &dr + int(2)) - int(2) * &dr;
    let r_source = (!r_den.is_zero()).then(|| p * (int(4) * &dr + int(2)) / &r_den);
    let qbar = p * (int(4) * &dr + int(2)) / (&dr * (p + int(2)));
    let alpha = (int(3) * &dr + int(1)) / (int(4) * &dr + int(2));
    let delta_dg = q.as_ref().map(|q| int(1) - p / q);

    let mut reasons = Vec::new();
    if beta.is_none() {
        reasons.push(Reason::DaSingular);
    }
    let (alo, ahi) = a_window(d);
    if !in_open(&a, &alo, &ahi) {
        reasons.push(Reason::WindowA);
    }
    if !(inv_q.is_positive() && inv_q < rat(1, 2)) {
        reasons.push(Reason::WindowQ2);
    }

    ExponentTable {
        params: params.clone(),
        inv_q,
        q,
        a,
        beta,
        qdim,
        theta0,
        theta1,
        thetav,
        r_source,
        qbar,
        alpha,
        delta_dg,
        admissible: reasons.is_empty(),
        reasons,
    }
}

impl ExponentTable {
    /// 1/p + (1−β)/𝖰.
    pub fn inv_q_from_gradient(&self) -> Option<Rational> {
        let (b, qd) = (self.beta.as_ref()?, self.qdim.as_ref()?);
        Some(self.params.p.recip() + (int(1) - b) / qd)
    }

    /// 1/μ + (β−2)/𝖰.
    pub fn inv_q_from_drift(&self) -> Option<Rational> {
        let (b, qd) = (self.beta.as_ref()?, self.qdim.as_ref()?);
        Some(self.params.mu.recip() + (b - int(2)) / qd)
    }

    /// β ∈ (1, 2).
    pub fn beta_in_window(&self) -> bool {
        self.beta.as_ref().is_some_and(|b| in_open(b, &int(1), &int(2)))
    }

    /// q > max{p, μ}, stated on reciprocals so that 1/q ≤ 0 is covered.
    pub fn q_beats_p_and_mu(&self) -> bool {
        let m = std::cmp::min(self.params.p.recip(), self.params.mu.recip());
        self.inv_q < m
    }

    /// Residuals of the two scaling balances; both vanish iff (α, q) are
    /// forced by the rescalings f(t, λx, λv) and f(νt, νx, v).
    pub fn scaling_residuals(&self) -> (Rational, Rational) {
        scaling_balance(
            self.params.d,
            &self.inv_q,
            &Rational::zero(),
            &self.params.p,
            &self.params.mu,
            &self.alpha,
        )
    }
}

/// λ- and ν-balance residuals for ‖f‖ ≲ ‖∇ᵥf‖_p^α ‖S₀‖_μ^{1−α} with an extra
/// x-smoothness `s` on the left (s = 0 for the plain Lebesgue norm).
pub fn scaling_balance(d: u32, inv_q: &Rational, s: &Rational, p: &Rational, mu: &Rational, alpha: &Rational) -> (Rational, Rational) {
    let d = int(d as i64);
    let one = int(1);
    let two_d = int(2) * &d;
    let d1 = &d + int(1);
    let beta_alpha = &one - alpha;
    let lam_lhs = -(&two_d * inv_q) + s;
    let lam_rhs = (&one - &two_d / p) * alpha + (-&one - &two_d / mu) * &beta_alpha;
    let nu_lhs = -(&d1 * inv_q) + s;
    let nu_rhs = -(&d1 / p) * alpha + (&one - &d1 / mu) * &beta_alpha;
    (lam_lhs - lam_rhs, nu_lhs - nu_rhs)
}

/// Admissible growth window (2 − 2/(3d+2), 2 + 2/d).
pub fn p_admissible_window(d: u32) -> (Rational, Rational) {
    let d = d as i64;
    (int(2) - rat(2, 3 * d + 2), int(2) + rat(2, d))
}

pub fn p_in_window(d: u32, p: &Rational) -> bool {
    let (lo, hi) = p_admissible_window(d);
    in_open(p, &lo, &hi)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransferTable {
    pub d: u32,
    pub p: Rational,
    pub q: Rational,
    pub s: Rational,
    /// (3d+1)/(4d+2) − ((d−1)/(4d+2))·s.
    pub alpha_s: Rational,
    /// The second closed form of α(q); kept to cross-check `alpha_s`.
    pub alpha_s_direct: Rational,
    pub beta: Option<Rational>,
    pub qdim: Option<Rational>,
    pub theta0_s: Option<Rational>,
    pub theta1_s: Option<Rational>,
    pub thetav_s: Option<Rational>,
    pub qbar: Rational,
    pub valid: bool,
    pub reasons: Vec<Reason>,
}

/// s(q) = [p(4d+2) − q·d(p+2)] / (q·[d(p−2)+2p+2]).
pub fn besov_smoothness(d: u32, p: &Rational, q: &Rational) -> Rational {
    let d = int(d as i64);
    let num = p * (int(4) * &d + int(2)) - q * &d * (p + int(2));
    let den = q * (&d * (p - int(2)) + int(2) * p + int(2));
    num / den
}

pub fn compute_transfer(d: u32, p: &Rational, q: &Rational) -> TransferTable {
    let dr = int(d as i64);
    let s = besov_smoothness(d, p, q);
    let alpha_s = (int(3) * &dr + int(1)) / (int(4) * &dr + int(2)) - (&dr - int(1)) / (int(4) * &dr + int(2)) * &s;
    let alpha_s_direct = (q * (p * (int(1) + &dr) - &dr + int(1)) - (&dr - int(1)) * p) / (q * (&dr * (p - int(2)) + int(2) * p + int(2)));

    // dual case: a = 2/p − 1
    let a = int(2) / p - int(1);
    let beta = beta_choice(d, &a);
    let qdim = beta.as_ref().map(|b| homogeneous_dim(d, b));
    let shifted = |shift: Rational| -> Option<Rational> {
        let (b, qd) = (beta.as_ref()?, qdim.as_ref()?);
        let den = qd + shift + b * &s;
        (!den.is_zero()).then(|| qd / den)
    };
    let (theta0_s, theta1_s, thetav_s) = match &beta {
        Some(b) => (shifted(b - int(2)), shifted(int(-1)), shifted(int(1) - b)),
        None => (None, None, None),
    };

    let qbar = p * (int(4) * &dr + int(2)) / (&dr * (p + int(2)));
    let lo = std::cmp::max(p.clone(), conjugate(p));
    let mut reasons = Vec::new();
    if !p_in_window(d, p) {
        reasons.push(Reason::WindowP);
    }
    if !in_open(q, &lo, &qbar) {
        reasons.push(Reason::WindowTransferQ);
    }
    TransferTable {
        d,
        p: p.clone(),
        q: q.clone(),
        s,
        alpha_s,
        alpha_s_direct,
        beta,
        qdim,
        theta0_s,
        theta1_s,
        thetav_s,
        qbar,
        valid: reasons.is_empty(),
        reasons,
    }
}

impl TransferTable {
    /// Scaling residuals with the Besov smoothness on the left; S₀ ∈ L^{p′}.
    pub fn scaling_residuals(&self) -> (Rational, Rational) {
        scaling_balance(self.d, &self.q.recip(), &self.s, &self.p, &conjugate(&self.p), &self.alpha_s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeGiorgiExponents {
    /// δ = 1 − p/q̄ for the p ≥ 2 iteration.
    pub delta: Rational,
    /// s = 2(p−1)/p + 1 − 2/q̄ for the singular iteration.
    pub s_sing: Rational,
    /// s_sing > 1, equivalently p > 2 − 2/(3d+2).
    pub singular_contracts: bool,
}

pub fn degiorgi_exponents(d: u32, p: &Rational) -> DeGiorgiExponents {
    let dr = int(d as i64);
    let qbar = p * (int(4) * &dr + int(2)) / (&dr * (p + int(2)));
    let delta = int(1) - p / &qbar;
    let s_sing = int(2) * (p - int(1)) / p + int(1) - int(2) / &qbar;
    let singular_contracts = s_sing > int(1);
    debug_assert_eq!(singular_contracts, *p > p_admissible_window(d).0);
    DeGiorgiExponents {
        delta,
        s_sing,
        singular_contracts,
    }
}
