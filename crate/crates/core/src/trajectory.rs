//! Critical kinetic trajectories γ^m(r; z) and their 2×2 block matrices.
//!
//! Every matrix here is a 2×2 block acting on ℝ^{2d} as its tensor with Id_d.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{group_compose, Coords, PhasePoint};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryParams {
    pub beta: f64,
    pub m0: f64,
    pub m1: Coords,
    pub m2: Coords,
}

impl TrajectoryParams {
    pub fn new(beta: f64, m0: f64, m1: &[f64], m2: &[f64]) -> Result<Self> {
        if !(beta > 1.0) || !beta.is_finite() {
            return Err(invalid("beta", "trajectories need beta > 1"));
        }
        if m0 == 0.0 || !m0.is_finite() {
            return Err(invalid("m0", "must be nonzero"));
        }
        if m1.len() != m2.len() {
            return Err(Error::DimensionMismatch {
                expected: m1.len(),
                got: m2.len(),
            });
        }
        Ok(Self {
            beta,
            m0,
            m1: Coords::from_slice(m1),
            m2: Coords::from_slice(m2),
        })
    }

    pub fn d1(beta: f64, m0: f64, m1: f64, m2: f64) -> Result<Self> {
        Self::new(beta, m0, &[m1], &[m2])
    }

    pub fn dim(&self) -> usize {
        self.m1.len()
    }

    fn m_size(&self) -> f64 {
        norm(&self.m1) + norm(&self.m2)
    }
}

fn norm(c: &[f64]) -> f64 {
    c.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// g₁ = r^β sin log r, g₂ = r^β cos log r and two derivatives, closed form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profiles {
    pub g1: f64,
    pub g2: f64,
    pub dg1: f64,
    pub dg2: f64,
    pub ddg1: f64,
    pub ddg2: f64,
}

pub fn profiles(beta: f64, r: f64) -> Profiles {
    let (s, c) = r.ln().sin_cos();
    let rb = r.powf(beta);
    let rb1 = rb / r;
    let rb2 = rb1 / r;
    let k = beta * beta - beta - 1.0;
    let l = 2.0 * beta - 1.0;
    Profiles {
        g1: rb * s,
        g2: rb * c,
        dg1: rb1 * (beta * s + c),
        dg2: rb1 * (beta * c - s),
        ddg1: rb2 * (k * s + l * c),
        ddg2: rb2 * (k * c - l * s),
    }
}

/// 2×2 real block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block2(pub [[f64; 2]; 2]);

impl Block2 {
    pub const IDENTITY: Block2 = Block2([[1.0, 0.0], [0.0, 1.0]]);

    pub fn det(&self) -> f64 {
        let m = self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn inverse(&self) -> Result<Block2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::Numerical(format!("singular 2x2 block (det={det:e})")));
        }
        let m = self.0;
        Ok(Block2([[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]]))
    }

    pub fn mul(&self, o: &Block2) -> Block2 {
        let (a, b) = (self.0, o.0);
        let mut c = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Block2(c)
    }

    /// Scalar action on (a, b) ∈ ℝ².
    #[inline]
    pub fn apply(&self, a: f64, b: f64) -> (f64, f64) {
        let m = self.0;
        (m[0][0] * a + m[0][1] * b, m[1][0] * a + m[1][1] * b)
    }

    /// Blockwise action on (a, b) ∈ ℝ^d × ℝ^d.
    pub fn apply_blocks(&self, a: &[f64], b: &[f64]) -> (Coords, Coords) {
        a.iter().zip(b).map(|(x, y)| self.apply(*x, *y)).unzip()
    }

    pub fn max_abs_diff(&self, o: &Block2) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                m = m.max((self.0[i][j] - o.0[i][j]).abs());
            }
        }
        m
    }
}

/// W(r).
pub fn wronskian(beta: f64, r: f64) -> Block2 {
    let g = profiles(beta, r);
    Block2([[g.g1, g.g2], [g.dg1, g.dg2]])
}

/// A_{m₀}(r) = D_{m₀}⁻¹ W(r).
pub fn a_matrix(beta: f64, m0: f64, r: f64) -> Block2 {
    let g = profiles(beta, r);
    Block2([[g.g1, g.g2], [g.dg1 / m0, g.dg2 / m0]])
}

/// A_{m₀}(r)⁻¹ in closed form, using det W = −r^{2β−1}.
pub fn a_inverse(beta: f64, m0: f64, r: f64) -> Block2 {
    let g = profiles(beta, r);
    let det = -r.powf(2.0 * beta - 1.0);
    Block2([[g.dg2 / det, -m0 * g.g2 / det], [-g.dg1 / det, m0 * g.g1 / det]])
}

/// E_δ(r).
pub fn e_matrix(delta: f64, r: f64) -> Block2 {
    Block2([[1.0, delta * r], [0.0, 1.0]])
}

/// F_{m₀}(r) = (g̈₁/m₀, g̈₂/m₀).
pub fn forcing(beta: f64, m0: f64, r: f64) -> [f64; 2] {
    let g = profiles(beta, r);
    [g.ddg1 / m0, g.ddg2 / m0]
}

/// c₀ = (−1)^d.
pub fn c0(d: usize) -> f64 {
    if d.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMatrices {
    pub w: Block2,
    pub a: Block2,
    pub a_inv: Block2,
    pub e: Block2,
    pub f: [f64; 2],
    pub c0: f64,
}

pub fn matrices(params: &TrajectoryParams, r: f64) -> Result<TrajectoryMatrices> {
    check_r(r)?;
    let (b, m0) = (params.beta, params.m0);
    Ok(TrajectoryMatrices {
        w: wronskian(b, r),
        a: a_matrix(b, m0, r),
        a_inv: a_inverse(b, m0, r),
        e: e_matrix(m0, r),
        f: forcing(b, m0, r),
        c0: c0(params.dim()),
    })
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(invalid("r", "trajectories live on r > 0"));
    }
    Ok(())
}

fn check_dim(params: &TrajectoryParams, z: &PhasePoint) -> Result<()> {
    if params.dim() != z.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: z.dim(),
        });
    }
    Ok(())
}

/// γ^m(r; z) = (t + m₀r, x + m₀rv + m₁g₁ + m₂g₂, v + (m₁ġ₁ + m₂ġ₂)/m₀).
pub fn eval_trajectory(params: &TrajectoryParams, r: f64, z: &PhasePoint) -> Result<PhasePoint> {
    check_r(r)?;
    check_dim(params, z)?;
    let g = profiles(params.beta, r);
    let m0 = params.m0;
    let mut out = z.clone();
    out.t = z.t + m0 * r;
    for i in 0..z.dim() {
        let (m1, m2) = (params.m1[i], params.m2[i]);
        out.x[i] = z.x[i] + m0 * r * z.v[i] + m1 * g.g1 + m2 * g.g2;
        out.v[i] = z.v[i] + (m1 * g.dg1 + m2 * g.dg2) / m0;
    }
    Ok(out)
}

/// Matrix form E_{m₀}(r)(x, v) + A_{m₀}(r)(m₁, m₂).
pub fn eval_trajectory_matrix(params: &TrajectoryParams, r: f64, z: &PhasePoint) -> Result<PhasePoint> {
    check_r(r)?;
    check_dim(params, z)?;
    let mats = matrices(params, r)?;
    let (ex, ev) = mats.e.apply_blocks(&z.x, &z.v);
    let (ax, av) = mats.a.apply_blocks(&params.m1, &params.m2);
    Ok(PhasePoint {
        t: z.t + params.m0 * r,
        x: ex.iter().zip(&ax).map(|(a, b)| a + b).collect(),
        v: ev.iter().zip(&av).map(|(a, b)| a + b).collect(),
    })
}

/// u = (m₀τ, A_{m₀}(τ)(m₁, m₂)), so that γ^m(τ; z) = z ∘ u.
pub fn group_increment(params: &TrajectoryParams, tau: f64) -> Result<PhasePoint> {
    check_r(tau)?;
    let a = a_matrix(params.beta, params.m0, tau);
    let (x, v) = a.apply_blocks(&params.m1, &params.m2);
    Ok(PhasePoint { t: params.m0 * tau, x, v })
}

pub fn eval_trajectory_group(params: &TrajectoryParams, tau: f64, z: &PhasePoint) -> Result<PhasePoint> {
    check_dim(params, z)?;
    group_compose(z, &group_increment(params, tau)?)
}

/// γ̇_v = F_{m₀}(r)(m₁, m₂).
pub fn velocity_rate(params: &TrajectoryParams, r: f64) -> Result<Coords> {
    check_r(r)?;
    let f = forcing(params.beta, params.m0, r);
    Ok(params.m1.iter().zip(&params.m2).map(|(a, b)| f[0] * a + f[1] * b).collect())
}

/// ‖central-difference γ̇_x − γ̇_t γ_v‖ at r with step h.
///
/// Differences are taken of the displacement γ_x − x − m₀ r v about r so that
/// the drift part cancels exactly.
pub fn check_m1(params: &TrajectoryParams, r: f64, z: &PhasePoint, h: f64) -> Result<f64> {
    check_dim(params, z)?;
    if !(h > 0.0 && r > h) {
        return Err(invalid("h", "need 0 < h < r"));
    }
    let (rp, rm) = (r + h, r - h);
    let (a, b) = (rp - r, r - rm);
    let gp = profiles(params.beta, rp);
    let gm = profiles(params.beta, rm);
    let g = profiles(params.beta, r);
    let m0 = params.m0;
    let dt = m0;
    let mut acc = 0.0;
    for i in 0..z.dim() {
        let (m1, m2, v) = (params.m1[i], params.m2[i], z.v[i]);
        let xp = m0 * v * a + m1 * gp.g1 + m2 * gp.g2;
        let xm = -m0 * v * b + m1 * gm.g1 + m2 * gm.g2;
        let dx = (xp - xm) / (a + b);
        let gv = v + (m1 * g.dg1 + m2 * g.dg2) / m0;
        acc += (dx - dt * gv).powi(2);
    }
    Ok(acc.sqrt())
}

/// One row of measured M2–M4 ratios.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyRow {
    pub r: f64,
    /// det W / (−r^{2β−1}).
    pub det_ratio: f64,
    /// max_i |(A⁻¹)_{i;1}| / r^{−β}.
    pub m3_col1: f64,
    /// max_i |(A⁻¹)_{i;2}| / (|m₀| r^{1−β}).
    pub m3_col2: f64,
    /// |A A⁻¹ − Id|.
    pub inverse_defect: f64,
    /// |γ̇_v| / (|m₀|⁻¹(|m₁|+|m₂|) r^{β−2}).
    pub m4_vdot: f64,
    /// |γ_v − v| / (|m₀|⁻¹(|m₁|+|m₂|) r^{β−1}).
    pub m4_v: f64,
    /// |γ_x − x − m₀vr| / ((|m₁|+|m₂|) r^β).
    pub m4_x: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub beta: f64,
    pub rows: Vec<PropertyRow>,
    pub max_det_error: f64,
    pub max_m3_col1: f64,
    pub max_m3_col2: f64,
    pub max_m4_vdot: f64,
    pub max_m4_v: f64,
    pub max_m4_x: f64,
}

pub fn check_m2_m3_m4(params: &TrajectoryParams, r_grid: &[f64]) -> Result<PropertyReport> {
    if r_grid.is_empty() {
        return Err(invalid("r_grid", "must not be empty"));
    }
    let beta = params.beta;
    let m0 = params.m0;
    let ms = params.m_size();
    let z = PhasePoint::origin(params.dim());
    let mut rows = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        check_r(r)?;
        let w = wronskian(beta, r);
        let det_ratio = w.det() / (-r.powf(2.0 * beta - 1.0));
        let a = a_matrix(beta, m0, r);
        let ai = a_inverse(beta, m0, r);
        let col1 = ai.0[0][0].abs().max(ai.0[1][0].abs()) / r.powf(-beta);
        let col2 = ai.0[0][1].abs().max(ai.0[1][1].abs()) / (m0.abs() * r.powf(1.0 - beta));
        let inverse_defect = a.mul(&ai).max_abs_diff(&Block2::IDENTITY);
        let gam = eval_trajectory(params, r, &z)?;
        let vdot = norm(&velocity_rate(params, r)?);
        let dv = norm(&gam.v);
        let dx = norm(&gam.x);
        let (m4_vdot, m4_v, m4_x) = if ms > 0.0 {
            (
                vdot / (ms / m0.abs() * r.powf(beta - 2.0)),
                dv / (ms / m0.abs() * r.powf(beta - 1.0)),
                dx / (ms * r.powf(beta)),
            )
        } else {
            (0.0, 0.0, 0.0)
        };
        rows.push(PropertyRow {
            r,
            det_ratio,
            m3_col1: col1,
            m3_col2: col2,
            inverse_defect,
            m4_vdot,
            m4_v,
            m4_x,
        });
    }
    let fold = |f: fn(&PropertyRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    Ok(PropertyReport {
        beta,
        max_det_error: fold(|r| (r.det_ratio - 1.0).abs()),
        max_m3_col1: fold(|r| r.m3_col1),
        max_m3_col2: fold(|r| r.m3_col2),
        max_m4_vdot: fold(|r| r.m4_vdot),
        max_m4_v: fold(|r| r.m4_v),
        max_m4_x: fold(|r| r.m4_x),
        rows,
    })
}

/// Maxima of `ys` over sliding windows r ∈ [r_i, r_i e^{2π}], one full
/// oscillation period of the profiles; returns (window start, max).
pub fn period_window_maxima(rs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let span = 2.0 * std::f64::consts::PI;
    let last = match rs.last() {
        Some(r) => r.ln(),
        None => return Vec::new(),
    };
    let mut out = Vec::new();
    for (i, &r) in rs.iter().enumerate() {
        let l = r.ln();
        if l + span > last {
            break;
        }
        let m = rs[i..]
            .iter()
            .zip(&ys[i..])
            .take_while(|(q, _)| q.ln() <= l + span)
            .map(|(_, y)| *y)
            .fold(0.0, f64::max);
        out.push((r, m));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{loglog_slope, logspace};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_params(rng: &mut impl Rng, d: usize) -> TrajectoryParams {
        let m1: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m2: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        TrajectoryParams::new(rng.gen_range(1.05..1.95), rng.gen_range(-2.0..-1.0), &m1, &m2).unwrap()
    }

    #[test]
    fn free_transport() {
        let p = TrajectoryParams::d1(1.5, -1.5, 0.0, 0.0).unwrap();
        let z = PhasePoint::d1(0.3, 1.0, -2.0);
        let g = eval_trajectory(&p, 0.7, &z).unwrap();
        assert_eq!(g, PhasePoint::d1(0.3 - 1.5 * 0.7, 1.0 + 1.5 * 0.7 * 2.0, -2.0));
        assert!(eval_trajectory(&p, 0.0, &z).is_err());
        assert!(TrajectoryParams::d1(1.5, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn three_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 0..500 {
            let d = 1 + n % 3;
            let p = random_params(&mut rng, d);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let z = PhasePoint::new(rng.gen_range(-1.0..1.0), &x, &v).unwrap();
            let r = rng.gen_range(0.01..5.0);
            let a = eval_trajectory(&p, r, &z).unwrap();
            let b = eval_trajectory_matrix(&p, r, &z).unwrap();
            let c = eval_trajectory_group(&p, r, &z).unwrap();
            assert!(a.max_abs_diff(&b) < 1e-12);
            assert!(a.max_abs_diff(&c) < 1e-12);
        }
    }

    #[test]
    fn profile_derivatives_match_differences() {
        let (beta, r, h) = (1.37, 0.8, 1e-5);
        let p = profiles(beta, r);
        let (pp, pm) = (profiles(beta, r + h), profiles(beta, r - h));
        assert!(((pp.g1 - pm.g1) / (2.0 * h) - p.dg1).abs() < 1e-8);
        assert!(((pp.g2 - pm.g2) / (2.0 * h) - p.dg2).abs() < 1e-8);
        assert!(((pp.dg1 - pm.dg1) / (2.0 * h) - p.ddg1).abs() < 1e-7);
        assert!(((pp.dg2 - pm.dg2) / (2.0 * h) - p.ddg2).abs() < 1e-7);
    }

    #[test]
    fn determinant_over_six_decades() {
        let rs = logspace(1e-3, 1e3, 61);
        for beta in [9.0 / 8.0, 1.5, 15.0 / 8.0] {
            for &r in &rs {
                let det = wronskian(beta, r).det();
                let target = -r.powf(2.0 * beta - 1.0);
                assert!(((det - target) / target).abs() < 1e-10, "beta={beta} r={r}");
            }
        }
        assert_eq!(c0(1), -1.0);
        assert_eq!(c0(2), 1.0);
    }

    #[test]
    fn inverse_is_inverse() {
        for beta in [9.0 / 8.0, 1.5, 15.0 / 8.0] {
            for &r in &logspace(1e-3, 1e3, 25) {
                let a = a_matrix(beta, -1.3, r);
                let ai = a_inverse(beta, -1.3, r);
                let scale = 1.0
                    + a.0.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max)
                        * ai.0.iter().flatten().map(|x| x.abs()).fold(0.0, f64::max);
                assert!(a.mul(&ai).max_abs_diff(&Block2::IDENTITY) < 1e-10 * scale);
                assert!(ai.max_abs_diff(&a.inverse().unwrap()) < 1e-9 * ai.0.iter().flatten().map(|x| x.abs()).fold(1.0, f64::max));
            }
        }
    }

    #[test]
    fn m1_second_order() {
        let p = TrajectoryParams::d1(1.5, -1.3, 0.7, -0.4).unwrap();
        let z = PhasePoint::d1(0.1, 0.2, 0.3);
        let hs = [4e-2, 2e-2, 1e-2, 5e-3];
        let res: Vec<f64> = hs.iter().map(|&h| check_m1(&p, 1.0, &z, h).unwrap()).collect();
        let slope = loglog_slope(&hs, &res);
        assert!((slope - 2.0).abs() < 0.1, "{slope}");
        let lin = TrajectoryParams::d1(1.5, -1.3, 0.0, 0.0).unwrap();
        for h in [1e-1, 1e-4, 1e-8] {
            assert!(check_m1(&lin, 1.0, &PhasePoint::d1(3.0, -2.0, 2.5), h).unwrap() <= 1e-12);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let q = random_params(&mut rng, 1);
            let q = TrajectoryParams { beta: 1.5, ..q };
            assert!(check_m1(&q, rng.gen_range(0.5..2.0), &z, 1e-4).unwrap() < 1e-6);
        }
    }

    #[test]
    fn m3_m4_constants_flat_in_r() {
        let rs = logspace(1e-3, 1e3, 1201);
        for beta in [9.0 / 8.0, 1.5, 15.0 / 8.0] {
            let p = TrajectoryParams::d1(beta, -1.5, 0.6, -0.8).unwrap();
            let rep = check_m2_m3_m4(&p, &rs).unwrap();
            assert!(rep.max_det_error < 1e-10);
            assert!(rep.max_m4_x <= 2f64.sqrt());
            assert!(rep.max_m3_col1 <= (1.0 + beta * beta).sqrt() * (1.0 + 1e-12));
            assert!(rep.max_m3_col2 <= 1.0 + 1e-12);
            for col in [
                |r: &PropertyRow| r.m3_col1,
                |r: &PropertyRow| r.m3_col2,
                |r: &PropertyRow| r.m4_v,
                |r: &PropertyRow| r.m4_vdot,
                |r: &PropertyRow| r.m4_x,
            ] {
                let ys: Vec<f64> = rep.rows.iter().map(col).collect();
                let (wr, wm): (Vec<f64>, Vec<f64>) = period_window_maxima(&rs, &ys).into_iter().unzip();
                assert!(wr.len() > 100);
                assert!(loglog_slope(&wr, &wm).abs() <= 0.01, "{}", loglog_slope(&wr, &wm));
            }
        }
    }
}
