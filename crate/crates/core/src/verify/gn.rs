use serde::Serialize;

use super::{sample, spread, Report};
use crate::error::{Error, Result};
use crate::exponents::{compute_exponents, to_f64, ProblemParams};
use crate::field::{Box3, PhaseFn};
use crate::mollify::Decomposed;

pub const RESCALINGS: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Clone, Debug, Serialize)]
pub struct RescaledRatio {
    pub lambda: f64,
    pub nu: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GnReport {
    pub q: f64,
    pub p: f64,
    pub mu: f64,
    pub alpha: f64,
    pub norm_f_q: f64,
    pub norm_grad_p: f64,
    pub norm_s0_mu: f64,
    /// ‖f‖_q / (‖∂_v f‖_p^α ‖S₀‖_μ^{1−α}); `None` when degenerate.
    pub ratio: Option<f64>,
    pub scaling_spread: Option<f64>,
    pub rescalings: Vec<RescaledRatio>,
    pub degenerate: bool,
}

struct Rescaled<'a> {
    g: &'a dyn PhaseFn,
    lambda: f64,
    nu: f64,
    factor: f64,
}

impl PhaseFn for Rescaled<'_> {
    fn at(&self, t: f64, x: f64, v: f64) -> f64 {
        self.factor * self.g.at(self.nu * t, self.lambda * self.nu * x, self.lambda * v)
    }
}

/// Norms of the (λ, ν)-rescaled triple f(νt, λνx, λv), λ ∂_v f(…), (ν/λ) S₀(…).
fn norms(src: &Decomposed, q: f64, p: f64, mu: f64, lambda: f64, nu: f64, grid: Box3, shape: [usize; 3]) -> Result<(f64, f64, f64)> {
    let r = |g, factor| Rescaled { g, lambda, nu, factor };
    let f = sample(&r(src.f, 1.0), grid, shape)?.lp_norm(q, None)?;
    let g = sample(&r(src.grad_v, lambda), grid, shape)?.lp_norm(p, None)?;
    let s = sample(&r(src.s0, nu / lambda), grid, shape)?.lp_norm(mu, None)?;
    Ok((f, g, s))
}

/// Gagliardo–Nirenberg ratio and its spread over the two scaling families,
/// all evaluated on one fixed grid.
pub fn gn_experiment(src: &Decomposed, params: &ProblemParams, grid: Box3, shape: [usize; 3]) -> Result<GnReport> {
    if params.d != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: params.d as usize,
        });
    }
    let tab = compute_exponents(params);
    let q = match (&tab.q, tab.admissible) {
        (Some(q), true) => to_f64(q),
        _ => return Err(Error::ExponentRelation(format!("inadmissible exponents: {:?}", tab.reasons))),
    };
    let (p, mu, alpha) = (to_f64(&params.p), to_f64(&params.mu), to_f64(&tab.alpha));
    let ratio_of = |(f, g, s): (f64, f64, f64)| {
        let den = g.powf(alpha) * s.powf(1.0 - alpha);
        (den > 0.0).then(|| f / den)
    };
    let base = norms(src, q, p, mu, 1.0, 1.0, grid, shape)?;
    let ratio = ratio_of(base);
    let degenerate = ratio.is_none();
    let mut rescalings = Vec::new();
    if !degenerate {
        for &lambda in &RESCALINGS {
            for &nu in &RESCALINGS {
                let r = ratio_of(norms(src, q, p, mu, lambda, nu, grid, shape)?).unwrap_or(f64::NAN);
                rescalings.push(RescaledRatio { lambda, nu, ratio: r });
            }
        }
    }
    let scaling_spread = spread(&rescalings.iter().map(|r| r.ratio).collect::<Vec<_>>());
    Ok(GnReport {
        q,
        p,
        mu,
        alpha,
        norm_f_q: base.0,
        norm_grad_p: base.1,
        norm_s0_mu: base.2,
        ratio,
        scaling_spread,
        rescalings,
        degenerate,
    })
}

impl GnReport {
    pub fn report(&self, spread_tol: f64) -> Report {
        let mut r = Report::new("verify-gn");
        r.record("q", self.q);
        r.record("alpha", self.alpha);
        r.record("norm_f_q", self.norm_f_q);
        r.record("norm_grad_p", self.norm_grad_p);
        r.record("norm_s0_mu", self.norm_s0_mu);
        r.check("degenerate", f64::from(self.degenerate as u8), "", 0.0, true, 0.0);
        if let Some(c) = self.ratio {
            r.check("ratio", c, "finite", c, c.is_finite(), 0.0);
        }
        for s in &self.rescalings {
            r.record(format!("ratio[lambda={};nu={}]", s.lambda, s.nu), s.ratio);
        }
        if let Some(s) = self.scaling_spread {
            r.check("scaling_spread", s, format!("<= {spread_tol}"), s, s <= spread_tol, spread_tol);
        }
        r
    }
}
