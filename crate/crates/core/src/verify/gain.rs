use serde::Serialize;

use super::{InputKind, Report};
use crate::error::{invalid, Error, Result};
use crate::exponents::{compute_exponents, to_f64, ProblemParams, Rational};
use crate::field::Field;
use crate::solver::SourceDecomposition;

#[derive(Clone, Debug, Serialize)]
pub struct GainReport {
    pub input: InputKind,
    pub q: f64,
    pub r: f64,
    pub norm_f_q: f64,
    pub norm_grad_p: f64,
    pub norm_s0_dual: f64,
    /// ‖(S₁)₊‖_r: only the positive part can push a subsolution up.
    pub norm_s1_r: f64,
    pub c_meas: f64,
}

/// ‖f‖_q ≤ C (‖∂_v f‖_p + ‖S₀‖_{p′} + ‖S₁‖_r) for a nonnegative subsolution.
pub fn subsolution_gain_experiment(f: &Field, src: &SourceDecomposition, p: &Rational, input: InputKind) -> Result<GainReport> {
    let params = ProblemParams::dual(1, p.clone())?;
    let tab = compute_exponents(&params);
    if !tab.admissible {
        return Err(Error::ExponentRelation(format!(
            "p outside the admissible window: {:?}",
            tab.reasons
        )));
    }
    if f.min() < -1e-12 * f.max_abs().max(1.0) {
        return Err(invalid("f", "subsolution input must be nonnegative"));
    }
    let q = to_f64(&tab.qbar);
    let r = to_f64(tab.r_source.as_ref().expect("defined inside the window"));
    let pf = to_f64(p);
    let norm_f_q = f.lp_norm(q, None)?;
    let norm_grad_p = src.grad_v.lp_norm(pf, None)?;
    let norm_s0_dual = src.s0.lp_norm(pf / (pf - 1.0), None)?;
    let norm_s1_r = src.s1.map(|s| s.max(0.0)).lp_norm(r, None)?;
    let den = norm_grad_p + norm_s0_dual + norm_s1_r;
    let c_meas = if norm_f_q == 0.0 { 0.0 } else { norm_f_q / den };
    Ok(GainReport {
        input,
        q,
        r,
        norm_f_q,
        norm_grad_p,
        norm_s0_dual,
        norm_s1_r,
        c_meas,
    })
}

impl GainReport {
    pub fn report(&self) -> Report {
        let mut rep = Report::new(format!("subsolution-gain[{}]", self.input.tag()));
        rep.record("q", self.q);
        rep.record("r", self.r);
        rep.record("norm_f_q", self.norm_f_q);
        rep.record("norm_grad_p", self.norm_grad_p);
        rep.record("norm_s0_dual", self.norm_s0_dual);
        rep.record("norm_s1_r", self.norm_s1_r);
        rep.check("c_meas", self.c_meas, "finite", self.c_meas, self.c_meas.is_finite(), 0.0);
        rep
    }
}
