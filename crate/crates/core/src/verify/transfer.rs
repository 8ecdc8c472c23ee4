use rayon::prelude::*;
use serde::Serialize;

use super::Report;
use crate::error::{Error, Result};
use crate::exponents::{compute_transfer, to_f64, Rational};
use crate::field::{Box3, Field};
use crate::mollify::Decomposed;

#[derive(Clone, Debug, Serialize)]
pub struct TransferReport {
    pub q: f64,
    pub s: f64,
    pub alpha: f64,
    pub h_set: Vec<f64>,
    /// ‖Δ_x^h f‖_q / |h|^s per shift.
    pub quotients: Vec<f64>,
    pub besov: f64,
    pub rhs: f64,
    pub c_meas: f64,
    /// The quotients do not grow as h shrinks (within 1%).
    pub profile_bounded: bool,
}

/// Dyadic shifts h₀·2^{−j}, j = 0..n.
pub fn dyadic_h_set(h0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|j| h0 * 0.5f64.powi(j as i32)).collect()
}

/// Besov bound of the transfer of regularity with measured constant. The
/// shifted differences are sampled from `src.f` directly, so no grid
/// interpolation enters the quotients.
pub fn transfer_experiment(
    src: &Decomposed,
    p: &Rational,
    q: &Rational,
    grid: Box3,
    shape: [usize; 3],
    h_set: &[f64],
) -> Result<TransferReport> {
    let tab = compute_transfer(1, p, q);
    if !tab.valid {
        return Err(Error::ExponentRelation(format!("q outside the transfer window: {:?}", tab.reasons)));
    }
    if h_set.is_empty() || h_set.contains(&0.0) {
        return Err(crate::error::invalid("h_set", "needs nonzero shifts"));
    }
    let (pf, qf, s, alpha) = (to_f64(p), to_f64(q), to_f64(&tab.s), to_f64(&tab.alpha_s));
    let f = src.f;
    let quotients = h_set
        .par_iter()
        .map(|&h| {
            let d = Field::from_fn(grid, shape, |t, x, v| f.at(t, x + h, v) - f.at(t, x, v))?;
            Ok(d.lp_norm(qf, None)? / h.abs().powf(s))
        })
        .collect::<Result<Vec<f64>>>()?;
    let besov = quotients.iter().cloned().fold(0.0, f64::max);
    let grad = Field::from_fn(grid, shape, |t, x, v| src.grad_v.at(t, x, v))?.lp_norm(pf, None)?;
    let s0 = Field::from_fn(grid, shape, |t, x, v| src.s0.at(t, x, v))?.lp_norm(pf / (pf - 1.0), None)?;
    let rhs = grad.powf(alpha) * s0.powf(1.0 - alpha);
    let c_meas = if besov == 0.0 { 0.0 } else { besov / rhs };
    let mut order: Vec<usize> = (0..h_set.len()).collect();
    order.sort_by(|&a, &b| h_set[b].abs().total_cmp(&h_set[a].abs()));
    let profile_bounded = quotients.iter().all(|x| x.is_finite())
        && order
            .windows(2)
            .all(|w| quotients[w[1]] <= quotients[w[0]] * 1.01 || quotients[w[1]] <= besov * 1e-12);
    Ok(TransferReport {
        q: qf,
        s,
        alpha,
        h_set: h_set.to_vec(),
        quotients,
        besov,
        rhs,
        c_meas,
        profile_bounded,
    })
}

impl TransferReport {
    pub fn report(&self) -> Report {
        let mut rep = Report::new("verify-transfer");
        rep.record("s", self.s);
        rep.record("alpha", self.alpha);
        for (h, v) in self.h_set.iter().zip(&self.quotients) {
            rep.record(format!("quotient[h={h}]"), *v);
        }
        rep.record("besov", self.besov);
        rep.record("rhs", self.rhs);
        rep.check("c_meas", self.c_meas, "finite", self.c_meas, self.c_meas.is_finite(), 0.0);
        let b = f64::from(self.profile_bounded as u8);
        rep.check("profile_bounded", b, "1", b, self.profile_bounded, 0.01);
        rep
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::rat;

    #[test]
    fn x_independent_has_zero_besov() {
        let f = |t: f64, _: f64, v: f64| (-(t * t + v * v)).exp();
        let g = |t: f64, _: f64, v: f64| -2.0 * v * (-(t * t + v * v)).exp();
        let z = |_: f64, _: f64, _: f64| 0.0;
        let src = Decomposed {
            f: &f,
            grad_v: &g,
            s0: &g,
            s1: &z,
        };
        let b = Box3::new((-3.0, 3.0), (-3.0, 3.0), (-3.0, 3.0)).unwrap();
        let r = transfer_experiment(&src, &rat(2, 1), &rat(5, 2), b, [16, 16, 16], &dyadic_h_set(1.0, 6)).unwrap();
        assert_eq!(r.besov, 0.0);
        assert_eq!(r.c_meas, 0.0);
        assert!((r.s - 2.0 / 15.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_q_rejected() {
        let z = |_: f64, _: f64, _: f64| 0.0;
        let src = Decomposed {
            f: &z,
            grad_v: &z,
            s0: &z,
            s1: &z,
        };
        let b = Box3::new((-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)).unwrap();
        assert!(transfer_experiment(&src, &rat(2, 1), &rat(3, 1), b, [8, 8, 8], &[0.5]).is_err());
    }
}
