use serde::Serialize;

use super::Report;
use crate::error::{invalid, Result};
use crate::field::Field;
use crate::geometry::{gamma_t, gamma_v, Cylinder, PhasePoint};

fn nonnegative(f: &Field) -> Result<()> {
    if f.min() < -1e-12 * f.max_abs().max(1.0) {
        return Err(invalid("f", "subsolution input must be nonnegative"));
    }
    Ok(())
}

fn cylinders(f: &Field, z0: &PhasePoint, theta: f64, r1: f64, r2: f64, p: f64) -> Result<(Cylinder, Cylinder)> {
    if !(0.0 < r1 && r1 < r2) {
        return Err(invalid("R1", "need 0 < R1 < R2"));
    }
    let inner = Cylinder::new(z0.clone(), theta, r1, p)?;
    let outer = Cylinder::new(z0.clone(), theta, r2, p)?;
    f.require_inside(&outer)?;
    Ok((inner, outer))
}

#[derive(Clone, Debug, Serialize)]
pub struct LocalGainReport {
    pub theta: f64,
    pub r1: f64,
    pub r2: f64,
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub gamma_t: f64,
    pub gamma_v: f64,
    pub volume_outer: f64,
    pub lhs: f64,
    /// ‖∂_v f‖_p, (1 + Γ_v|Q|^{1/r−(p−1)/p})‖∂_v f‖_p^{p−1}, Γ_v‖f‖_p, Γ_t|Q|^{1/r−1/p}‖f‖_p
    pub terms: [f64; 4],
    /// The p ≥ 2 variant with Γ_t|Q|^{1/r−1/2}‖f‖_2 as last term.
    pub terms_l2: Option<[f64; 4]>,
    pub c_meas: f64,
    pub c_meas_l2: Option<f64>,
}

/// Both sides of the localized gain of integrability on Q_{θ,R₁} ⊂ Q_{θ,R₂}.
pub fn localized_gain_experiment(f: &Field, p: f64, z0: &PhasePoint, theta: f64, r1: f64, r2: f64) -> Result<LocalGainReport> {
    nonnegative(f)?;
    let (inner, outer) = cylinders(f, z0, theta, r1, r2, p)?;
    let q = 6.0 * p / (p + 2.0);
    let r = 6.0 * p / (5.0 * p - 2.0);
    let (gt, gv) = (gamma_t(theta, r1, r2, p), gamma_v(r1, r2, p));
    let vol = outer.volume();
    let grad = f.grad_v()?;
    let lhs = f.lp_norm(q, Some(&inner))?;
    let g = grad.lp_norm(p, Some(&outer))?;
    let fp = f.lp_norm(p, Some(&outer))?;
    let shared = [g, (1.0 + gv * vol.powf(1.0 / r - (p - 1.0) / p)) * g.powf(p - 1.0), gv * fp];
    let terms = [shared[0], shared[1], shared[2], gt * vol.powf(1.0 / r - 1.0 / p) * fp];
    let ratio = |t: &[f64; 4]| {
        let s: f64 = t.iter().sum();
        if lhs == 0.0 {
            0.0
        } else {
            lhs / s
        }
    };
    let terms_l2 = if p >= 2.0 {
        let f2 = f.lp_norm(2.0, Some(&outer))?;
        Some([shared[0], shared[1], shared[2], gt * vol.powf(1.0 / r - 0.5) * f2])
    } else {
        None
    };
    Ok(LocalGainReport {
        theta,
        r1,
        r2,
        p,
        q,
        r,
        gamma_t: gt,
        gamma_v: gv,
        volume_outer: vol,
        lhs,
        c_meas: ratio(&terms),
        c_meas_l2: terms_l2.as_ref().map(ratio),
        terms,
        terms_l2,
    })
}

impl LocalGainReport {
    pub fn report(&self) -> Report {
        let mut rep = Report::new("verify-local-gain");
        rep.record("gamma_t", self.gamma_t);
        rep.record("gamma_v", self.gamma_v);
        rep.record("lhs", self.lhs);
        for (i, t) in self.terms.iter().enumerate() {
            rep.record(format!("term{}", i + 1), *t);
        }
        rep.check("c_meas", self.c_meas, "finite", self.c_meas, self.c_meas.is_finite(), 0.0);
        if let Some(c) = self.c_meas_l2 {
            rep.check("c_meas_l2", c, "finite", c, c.is_finite(), 0.0);
        }
        rep
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub theta: f64,
    pub r1: f64,
    pub r2: f64,
    pub p: f64,
    pub slice_l2_sq: f64,
    pub grad_p_pow: f64,
    pub lhs: f64,
    /// ‖f‖²_{L²(Q₂)}/(θ(R₂−R₁)^p)
    pub rhs_l2: f64,
    /// ‖f‖^p_{L^p(Q₂)}/(R₂−R₁)^p
    pub rhs_lp: f64,
    pub c_meas: f64,
}

/// Caccioppoli estimate: the smallest C with LHS ≤ C·(rhs_l2 + rhs_lp).
pub fn energy_experiment(f: &Field, p: f64, z0: &PhasePoint, theta: f64, r1: f64, r2: f64) -> Result<EnergyReport> {
    nonnegative(f)?;
    let (inner, outer) = cylinders(f, z0, theta, r1, r2, p)?;
    let slice = f.linf_l2_slice_norm(&inner)?;
    let grad = f.grad_v()?.lp_norm(p, Some(&inner))?;
    let (slice_l2_sq, grad_p_pow) = (slice * slice, grad.powf(p));
    let lhs = slice_l2_sq + grad_p_pow;
    let gap = (r2 - r1).powf(p);
    let rhs_l2 = f.lp_norm(2.0, Some(&outer))?.powi(2) / (theta * gap);
    let rhs_lp = f.lp_norm(p, Some(&outer))?.powf(p) / gap;
    let c_meas = if lhs == 0.0 { 0.0 } else { lhs / (rhs_l2 + rhs_lp) };
    Ok(EnergyReport {
        theta,
        r1,
        r2,
        p,
        slice_l2_sq,
        grad_p_pow,
        lhs,
        rhs_l2,
        rhs_lp,
        c_meas,
    })
}

impl EnergyReport {
    pub fn report(&self) -> Report {
        let mut rep = Report::new("verify-energy");
        rep.record("theta", self.theta);
        rep.record("slice_l2_sq", self.slice_l2_sq);
        rep.record("grad_p_pow", self.grad_p_pow);
        rep.record("rhs_l2", self.rhs_l2);
        rep.record("rhs_lp", self.rhs_lp);
        rep.check("c_meas", self.c_meas, "finite", self.c_meas, self.c_meas.is_finite(), 0.0);
        rep
    }
}
