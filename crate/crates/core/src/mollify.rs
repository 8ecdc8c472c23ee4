//! Kinetic mollification along trajectories (d = 1).
//!
//! Operators come in two parametrizations: pulled back to the trajectory
//! parameters m (cheap, used for fields) and as group convolutions against
//! the explicit kernels in u = (s, y, w) (used for norms and cross-checks).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{Box3, Field, PhaseFn};
use crate::numerics::{gauss_legendre, graded_mesh, midpoints};
use crate::trajectory::{a_inverse, c0, profiles};

/// exp(−1/(1−u²)) on (−1, 1).
#[inline]
pub fn bump(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q > 0.0 {
        (-1.0 / q).exp()
    } else {
        0.0
    }
}

#[inline]
pub fn bump_prime(u: f64) -> f64 {
    let q = 1.0 - u * u;
    if q > 0.0 {
        (-1.0 / q).exp() * (-2.0 * u / (q * q))
    } else {
        0.0
    }
}

/// ∫_{−1}^{1} bump by composite Gauss–Legendre.
pub fn bump_integral() -> f64 {
    let (x, w) = gauss_legendre(12);
    let n = 256;
    let h = 2.0 / n as f64;
    let mut acc = 0.0;
    for i in 0..n {
        let a = -1.0 + i as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc += wi * 0.5 * h * bump(a + 0.5 * h * (xi + 1.0));
        }
    }
    acc
}

/// ψ(m₀, m₁, m₂) = N·bump(2m₀+3)·bump(m₁)·bump(m₂), supported in
/// (−2,−1) × B₁ × B₁.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollifierSpec {
    pub bump_integral: f64,
    pub norm: f64,
}

impl Default for MollifierSpec {
    fn default() -> Self {
        Self::standard()
    }
}

impl MollifierSpec {
    pub fn standard() -> Self {
        let i = bump_integral();
        Self {
            bump_integral: i,
            norm: 2.0 / (i * i * i),
        }
    }

    #[inline]
    pub fn psi(&self, m0: f64, m1: f64, m2: f64) -> f64 {
        self.norm * bump(2.0 * m0 + 3.0) * bump(m1) * bump(m2)
    }

    /// (∂_{m₁}ψ, ∂_{m₂}ψ).
    #[inline]
    pub fn grad12(&self, m0: f64, m1: f64, m2: f64) -> (f64, f64) {
        let a = self.norm * bump(2.0 * m0 + 3.0);
        (a * bump_prime(m1) * bump(m2), a * bump(m1) * bump_prime(m2))
    }

    /// ∫ψ by a tensor Gauss rule of the three factors.
    pub fn mass(&self) -> f64 {
        let i = bump_integral();
        self.norm * (0.5 * i) * i * i
    }
}

/// Tensor midpoint rule on supp ψ with weights renormalized to unit discrete
/// mass per axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MRule {
    /// (m₀, weight).
    pub m0: Vec<(f64, f64)>,
    /// (m, weight, derivative weight) for m₁ and m₂.
    pub m: Vec<(f64, f64, f64)>,
}

impl MRule {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid("m_res", "need at least 2 nodes per axis"));
        }
        let us: Vec<f64> = midpoints(-1.0, 1.0, n).collect();
        let total: f64 = us.iter().map(|&u| bump(u)).sum();
        let m0 = us.iter().map(|&u| ((u - 3.0) / 2.0, bump(u) / total)).collect();
        let m = us.iter().map(|&u| (u, bump(u) / total, bump_prime(u) / total)).collect();
        Ok(Self { m0, m })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    K,
    G0,
    G1,
    Gv,
}

/// Resolution knobs for every quadrature in this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quadrature {
    pub m_res: usize,
    pub u_res: usize,
    pub r_intervals: usize,
    pub kappa: f64,
    pub r_gauss: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self {
            m_res: 24,
            u_res: 96,
            r_intervals: 64,
            kappa: 3.0,
            r_gauss: 2,
        }
    }
}

impl Quadrature {
    /// One refinement level: 1.5× in m and r.
    pub fn refined(&self) -> Self {
        Self {
            m_res: self.m_res * 3 / 2,
            u_res: self.u_res * 3 / 2,
            r_intervals: self.r_intervals * 3 / 2,
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFamily {
    pub beta: f64,
    pub tau: f64,
    pub qdim: f64,
    pub mollifier: MollifierSpec,
    pub quad: Quadrature,
    rule: MRule,
}

/// A compactly supported kernel J(s, y, w).
pub trait Kernel: Sync {
    fn eval(&self, s: f64, y: f64, w: f64) -> f64;
    /// Box (s, y, w) outside which `eval` vanishes.
    fn support(&self) -> [(f64, f64); 3];
}

/// The kernel of one kind at one scale r.
#[derive(Clone, Copy, Debug)]
pub struct KernelAt<'a> {
    pub family: &'a KernelFamily,
    pub kind: KernelKind,
    pub r: f64,
}

impl Kernel for KernelAt<'_> {
    fn eval(&self, s: f64, y: f64, w: f64) -> f64 {
        self.family.kernel(self.kind, self.r, s, y, w)
    }

    fn support(&self) -> [(f64, f64); 3] {
        self.family.support_box(self.r)
    }
}

/// Δ_y^{−h} J = J(s, y − h, w) − J(s, y, w).
#[derive(Clone, Copy, Debug)]
pub struct ShiftedDifference<J> {
    pub inner: J,
    pub h: f64,
}

impl<J: Kernel> Kernel for ShiftedDifference<J> {
    fn eval(&self, s: f64, y: f64, w: f64) -> f64 {
        self.inner.eval(s, y - self.h, w) - self.inner.eval(s, y, w)
    }

    fn support(&self) -> [(f64, f64); 3] {
        let [s, y, w] = self.inner.support();
        [s, (y.0 + self.h.min(0.0), y.1 + self.h.max(0.0)), w]
    }
}

/// The four inputs of the representation identity.
#[derive(Clone, Copy)]
pub struct Decomposed<'a> {
    pub f: &'a dyn PhaseFn,
    pub grad_v: &'a dyn PhaseFn,
    pub s0: &'a dyn PhaseFn,
    pub s1: &'a dyn PhaseFn,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepresentationReport {
    pub samples: Vec<[f64; 3]>,
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    pub residual: f64,
    pub consistency_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct YoungReport {
    pub theta: f64,
    pub p_in: f64,
    pub q: f64,
    pub norm_tf: f64,
    pub norm_kernel: f64,
    pub norm_f: f64,
    pub lhs: f64,
    pub rhs: f64,
}

fn check_footprint(f: &dyn PhaseFn, fp: Box3) -> Result<()> {
    if let Some(dom) = f.domain() {
        if !dom.contains_box(&fp, 1e-12) {
            return Err(Error::Domain {
                missing: dom.excess(&fp).unwrap_or(fp),
            });
        }
    }
    Ok(())
}

/// Image of a (s, y, w) box under z ∘ ·.
fn footprint(z: [f64; 3], sup: [(f64, f64); 3]) -> Box3 {
    let [t, x, v] = z;
    let (s, y, w) = (sup[0], sup[1], sup[2]);
    let xs = [s.0 * v, s.1 * v];
    Box3 {
        lo: [t + s.0, x + y.0 + xs[0].min(xs[1]), v + w.0],
        hi: [t + s.1, x + y.1 + xs[0].max(xs[1]), v + w.1],
    }
}

/// Weak L^{θ,∞} quasi-norm sup_λ λ|{|g| > λ}|^{1/θ} of a function sampled on
/// cells with the given volumes; the sup is taken exactly over all levels.
pub fn weak_lp_norm(values: &[f64], volumes: &[f64], theta: f64) -> Result<f64> {
    if !(theta > 1.0) {
        return Err(invalid("theta", "weak norms need theta > 1"));
    }
    if values.len() != volumes.len() {
        return Err(invalid("volumes", "one volume per value"));
    }
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i] != 0.0).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()));
    let mut best: f64 = 0.0;
    let mut mass = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let level = values[idx[i]].abs();
        while i < idx.len() && values[idx[i]].abs() == level {
            mass += volumes[idx[i]];
            i += 1;
        }
        best = best.max(level * mass.powf(1.0 / theta));
    }
    Ok(best)
}

/// Weak norm of a uniformly gridded field.
pub fn weak_lp_norm_field(g: &Field, theta: f64) -> Result<f64> {
    let vals: Vec<f64> = g.data.iter().copied().collect();
    let vols = vec![g.cell_volume(); vals.len()];
    weak_lp_norm(&vals, &vols, theta)
}

fn grid_values(k: &dyn Kernel, n: usize) -> (Vec<f64>, f64) {
    let sup = k.support();
    let h: Vec<f64> = sup.iter().map(|(a, b)| (b - a) / n as f64).collect();
    let vals: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let s = sup[0].0 + (i as f64 + 0.5) * h[0];
            let sup = &sup;
            let h = &h;
            (0..n * n).map(move |jk| {
                let (j, kk) = (jk / n, jk % n);
                let y = sup[1].0 + (j as f64 + 0.5) * h[1];
                let w = sup[2].0 + (kk as f64 + 0.5) * h[2];
                k.eval(s, y, w)
            })
        })
        .collect();
    (vals, h.iter().product())
}

/// ‖J‖_{L^θ} by the midpoint rule on its support box with n cells per axis.
pub fn kernel_lp_norm(k: &dyn Kernel, theta: f64, n: usize) -> Result<f64> {
    if !(theta >= 1.0) {
        return Err(invalid("theta", "need theta >= 1"));
    }
    let (vals, vol) = grid_values(k, n);
    if theta.is_infinite() {
        return Ok(vals.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let sum: f64 = vals.iter().map(|v| v.abs().powf(theta)).sum();
    Ok((sum * vol).powf(1.0 / theta))
}

/// ∫J by the midpoint rule on its support box.
pub fn kernel_integral(k: &dyn Kernel, n: usize) -> f64 {
    let (vals, vol) = grid_values(k, n);
    vals.iter().sum::<f64>() * vol
}

/// Weak L^{θ,∞} norm of J sampled on its support box.
pub fn kernel_weak_norm(k: &dyn Kernel, theta: f64, n: usize) -> Result<f64> {
    let (vals, vol) = grid_values(k, n);
    let vols = vec![vol; vals.len()];
    weak_lp_norm(&vals, &vols, theta)
}

/// [T_J f](z) = ∫ f(z ∘ w) J(w) dw by the midpoint rule on supp J.
pub fn apply_tj_kernel(k: &dyn Kernel, f: &dyn PhaseFn, z: [f64; 3], n: usize) -> Result<f64> {
    let sup = k.support();
    check_footprint(f, footprint(z, sup))?;
    let h: Vec<f64> = sup.iter().map(|(a, b)| (b - a) / n as f64).collect();
    let [t, x, v] = z;
    let acc: f64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let s = sup[0].0 + (i as f64 + 0.5) * h[0];
            let mut acc = 0.0;
            for j in 0..n {
                let y = sup[1].0 + (j as f64 + 0.5) * h[1];
                for kk in 0..n {
                    let w = sup[2].0 + (kk as f64 + 0.5) * h[2];
                    let jv = k.eval(s, y, w);
                    if jv != 0.0 {
                        acc += f.at(t + s, x + y + s * v, v + w) * jv;
                    }
                }
            }
            acc
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(acc * h.iter().product::<f64>())
}

impl KernelFamily {
    pub fn new(beta: f64, tau: f64) -> Result<Self> {
        Self::with_quadrature(beta, tau, Quadrature::default())
    }

    pub fn with_quadrature(beta: f64, tau: f64, quad: Quadrature) -> Result<Self> {
        if !(beta > 1.0 && beta < 2.0) {
            return Err(invalid("beta", "kernel estimates need beta in (1,2)"));
        }
        if !(tau > 0.0) {
            return Err(invalid("tau", "must be positive"));
        }
        if quad.r_intervals == 0 || quad.r_gauss == 0 || quad.u_res == 0 || !(quad.kappa >= 1.0) {
            return Err(invalid("quadrature", "resolutions must be positive and kappa >= 1"));
        }
        Ok(Self {
            beta,
            tau,
            qdim: 2.0 * beta,
            mollifier: MollifierSpec::standard(),
            rule: MRule::new(quad.m_res)?,
            quad,
        })
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::with_quadrature(self.beta, tau, self.quad)
    }

    pub fn refined(&self) -> Self {
        Self::with_quadrature(self.beta, self.tau, self.quad.refined()).expect("refinement keeps validity")
    }

    pub fn rule(&self) -> &MRule {
        &self.rule
    }

    pub fn at(&self, kind: KernelKind, r: f64) -> KernelAt<'_> {
        KernelAt { family: self, kind, r }
    }

    /// Stated support constants (C_y, C_w): |y| ≤ C_y r^β, |w| ≤ C_w r^{β−1}.
    pub fn support_constants(&self) -> (f64, f64) {
        let sq2 = std::f64::consts::SQRT_2;
        (sq2, sq2 * (1.0 + self.beta * self.beta).sqrt())
    }

    /// Tight support box at scale r: s ∈ [−2r, −r], |y| ≤ |g₁|+|g₂|,
    /// |w| ≤ |ġ₁|+|ġ₂|.
    pub fn support_box(&self, r: f64) -> [(f64, f64); 3] {
        let g = profiles(self.beta, r);
        let ym = g.g1.abs() + g.g2.abs();
        let wm = g.dg1.abs() + g.dg2.abs();
        [(-2.0 * r, -r), (-ym, ym), (-wm, wm)]
    }

    /// The stated box with constants from `support_constants`.
    pub fn stated_box(&self, r: f64) -> [(f64, f64); 3] {
        let (cy, cw) = self.support_constants();
        let ym = cy * r.powf(self.beta);
        let wm = cw * r.powf(self.beta - 1.0);
        [(-2.0 * r, -r), (-ym, ym), (-wm, wm)]
    }

    /// K_r, G⁰_r, G¹_r, Gᵛ_r at (s, y, w).
    pub fn kernel(&self, kind: KernelKind, r: f64, s: f64, y: f64, w: f64) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let m0 = s / r;
        if !(m0 > -2.0 && m0 < -1.0) {
            return 0.0;
        }
        let ai = a_inverse(self.beta, m0, r);
        let (m1, m2) = ai.apply(y, w);
        if m1.abs() >= 1.0 || m2.abs() >= 1.0 {
            return 0.0;
        }
        let c0inv = 1.0 / c0(1);
        let rq = r.powf(-self.qdim);
        let psi = &self.mollifier;
        match kind {
            KernelKind::K => c0inv * rq * m0 * psi.psi(m0, m1, m2),
            KernelKind::G1 => -c0inv * m0 * m0 * rq * psi.psi(m0, m1, m2),
            KernelKind::Gv => {
                let g = profiles(self.beta, r);
                let vdot = (m1 * g.ddg1 + m2 * g.ddg2) / m0;
                -c0inv * m0 * rq * psi.psi(m0, m1, m2) * vdot
            }
            KernelKind::G0 => {
                let (d1, d2) = psi.grad12(m0, m1, m2);
                c0inv * m0 * m0 * rq * (d1 * ai.0[0][1] + d2 * ai.0[1][1])
            }
        }
    }

    /// [T_{J_r} g](z) pulled back to m-space along γ^m(r; z).
    pub fn apply_mspace(&self, kind: KernelKind, r: f64, g: &dyn PhaseFn, z: [f64; 3]) -> Result<f64> {
        if !(r > 0.0) {
            return Err(invalid("r", "must be positive"));
        }
        check_footprint(g, footprint(z, self.support_box(r)))?;
        Ok(self.mspace_sum(kind, r, g, z))
    }

    fn mspace_sum(&self, kind: KernelKind, r: f64, g: &dyn PhaseFn, z: [f64; 3]) -> f64 {
        let [t, x, v] = z;
        let p = profiles(self.beta, r);
        let det = -r.powf(2.0 * self.beta - 1.0);
        let rule = &self.rule;
        let mut acc = 0.0;
        for &(m0, w0) in &rule.m0 {
            let tt = t + m0 * r;
            let xb = x + m0 * r * v;
            // second column of A_{m₀}(r)⁻¹
            let (a01, a11) = (-m0 * p.g2 / det, m0 * p.g1 / det);
            for &(m1, w1, d1) in &rule.m {
                for &(m2, w2, d2) in &rule.m {
                    let weight = match kind {
                        KernelKind::K => w0 * w1 * w2,
                        KernelKind::G1 => -m0 * w0 * w1 * w2,
                        KernelKind::Gv => -(m1 * p.ddg1 + m2 * p.ddg2) / m0 * w0 * w1 * w2,
                        KernelKind::G0 => m0 * w0 * (d1 * w2 * a01 + w1 * d2 * a11),
                    };
                    if weight == 0.0 {
                        continue;
                    }
                    let gx = xb + m1 * p.g1 + m2 * p.g2;
                    let gv = v + (m1 * p.dg1 + m2 * p.dg2) / m0;
                    acc += weight * g.at(tt, gx, gv);
                }
            }
        }
        acc
    }

    /// [T_{K_τ} f](z) = Σ_m f(γ^m(τ; z)) ψ(m) Δm.
    pub fn apply_tk_mspace(&self, f: &dyn PhaseFn, z: [f64; 3]) -> Result<f64> {
        self.apply_mspace(KernelKind::K, self.tau, f, z)
    }

    /// [T_{K_τ} f](z) by u-space quadrature against K_τ.
    pub fn apply_tk_kernel(&self, f: &dyn PhaseFn, z: [f64; 3]) -> Result<f64> {
        apply_tj_kernel(&self.at(KernelKind::K, self.tau), f, z, self.quad.u_res)
    }

    /// Nodes and weights for ∫₀^τ on the graded mesh.
    pub fn r_nodes(&self) -> Vec<(f64, f64)> {
        let mesh = graded_mesh(self.tau, self.quad.r_intervals, self.quad.kappa);
        let (x, w) = gauss_legendre(self.quad.r_gauss);
        let mut out = Vec::with_capacity(mesh.len() * x.len());
        for win in mesh.windows(2) {
            let (a, b) = (win[0], win[1]);
            for (xi, wi) in x.iter().zip(&w) {
                out.push((a + 0.5 * (b - a) * (xi + 1.0), 0.5 * (b - a) * wi));
            }
        }
        out
    }

    /// ∫₀^τ (T_{G⁰}S₀ + T_{G¹}S₁ + T_{Gᵛ}∇_v f)(z) dr.
    pub fn representation_rhs(&self, src: &Decomposed, z: [f64; 3]) -> Result<f64> {
        check_footprint(src.s0, footprint(z, self.hull_box()))?;
        check_footprint(src.s1, footprint(z, self.hull_box()))?;
        check_footprint(src.grad_v, footprint(z, self.hull_box()))?;
        Ok(self
            .r_nodes()
            .par_iter()
            .map(|&(r, wr)| {
                wr * (self.mspace_sum(KernelKind::G0, r, src.s0, z)
                    + self.mspace_sum(KernelKind::G1, r, src.s1, z)
                    + self.mspace_sum(KernelKind::Gv, r, src.grad_v, z))
            })
            .collect::<Vec<f64>>()
            .iter()
            .sum())
    }

    /// Union of the support boxes over r ∈ (0, τ].
    pub fn hull_box(&self) -> [(f64, f64); 3] {
        let (cy, cw) = self.support_constants();
        let ym = cy * self.tau.powf(self.beta);
        let wm = cw * self.tau.powf(self.beta - 1.0);
        [(-2.0 * self.tau, 0.0), (-ym, ym), (-wm, wm)]
    }

    /// max |(∂_t + v∂_x)f − ∂_vS₀ − S₁| by central differences at the samples
    /// and along their trajectories, relative to the size of the terms.
    pub fn consistency_defect(&self, src: &Decomposed, zs: &[[f64; 3]]) -> f64 {
        let h = 1e-4;
        let mut pts = Vec::new();
        for &z in zs {
            pts.push(z);
            for &r in &[0.25 * self.tau, 0.5 * self.tau, self.tau] {
                for &m0 in &[-1.75, -1.25] {
                    for &m1 in &[-0.5, 0.5] {
                        for &m2 in &[-0.5, 0.5] {
                            let p = profiles(self.beta, r);
                            pts.push([
                                z[0] + m0 * r,
                                z[1] + m0 * r * z[2] + m1 * p.g1 + m2 * p.g2,
                                z[2] + (m1 * p.dg1 + m2 * p.dg2) / m0,
                            ]);
                        }
                    }
                }
            }
        }
        pts.par_iter()
            .map(|&[t, x, v]| {
                let tf = (src.f.at(t + h, x + h * v, v) - src.f.at(t - h, x - h * v, v)) / (2.0 * h);
                let ds0 = (src.s0.at(t, x, v + h) - src.s0.at(t, x, v - h)) / (2.0 * h);
                let s1 = src.s1.at(t, x, v);
                (tf - ds0 - s1).abs() / (1.0 + tf.abs() + ds0.abs() + s1.abs())
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Max over samples of |(f − T_{K_τ}f) − ∫₀^τ(…)dr|.
    pub fn representation_residual(&self, src: &Decomposed, zs: &[[f64; 3]]) -> Result<RepresentationReport> {
        if zs.is_empty() {
            return Err(invalid("z_samples", "need at least one sample"));
        }
        let defect = self.consistency_defect(src, zs);
        if defect > 1e-4 {
            return Err(Error::Precondition(format!(
                "sources do not decompose the transport of f (relative defect {defect:e})"
            )));
        }
        let mut lhs = Vec::with_capacity(zs.len());
        let mut rhs = Vec::with_capacity(zs.len());
        for &z in zs {
            lhs.push(src.f.at(z[0], z[1], z[2]) - self.apply_tk_mspace(src.f, z)?);
            rhs.push(self.representation_rhs(src, z)?);
        }
        let residual = lhs.iter().zip(&rhs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        Ok(RepresentationReport {
            samples: zs.to_vec(),
            lhs,
            rhs,
            residual,
            consistency_defect: defect,
        })
    }

    /// T_{J_r} g on a target grid via the m-space pull-back.
    pub fn mspace_on_grid(&self, kind: KernelKind, r: f64, g: &dyn PhaseFn, bbox: Box3, shape: [usize; 3]) -> Result<Field> {
        check_footprint(g, {
            let a = footprint([bbox.lo[0], bbox.lo[1], bbox.lo[2]], self.support_box(r));
            let b = footprint([bbox.hi[0], bbox.hi[1], bbox.hi[2]], self.support_box(r));
            let c = footprint([bbox.lo[0], bbox.lo[1], bbox.hi[2]], self.support_box(r));
            let d = footprint([bbox.hi[0], bbox.hi[1], bbox.lo[2]], self.support_box(r));
            Box3 {
                lo: [0, 1, 2].map(|i| a.lo[i].min(b.lo[i]).min(c.lo[i]).min(d.lo[i])),
                hi: [0, 1, 2].map(|i| a.hi[i].max(b.hi[i]).max(c.hi[i]).max(d.hi[i])),
            }
        })?;
        Field::from_fn(bbox, shape, |t, x, v| self.mspace_sum(kind, r, g, [t, x, v]))
    }

    /// Box carrying the support of T_{J_r} g when g is supported in `b`.
    pub fn output_box(&self, r: f64, b: &Box3) -> Result<Box3> {
        let [s, y, w] = self.support_box(r);
        let vmax = (b.lo[2] - w.0)
            .abs()
            .max((b.hi[2] - w.1).abs())
            .max(b.lo[2].abs())
            .max(b.hi[2].abs())
            + w.1;
        let spread = y.1 + s.0.abs() * vmax;
        Box3::new(
            (b.lo[0] - s.1, b.hi[0] - s.0),
            (b.lo[1] - spread, b.hi[1] + spread),
            (b.lo[2] - w.1, b.hi[2] - w.0),
        )
    }

    /// (‖T_J f‖_q, ‖J‖_θ ‖f‖_{p_in}) for J = K_r or G¹_r with
    /// 1/q + 1 = 1/θ + 1/p_in.
    pub fn young_check(
        &self,
        kind: KernelKind,
        r: f64,
        theta: f64,
        f: &Field,
        p_in: f64,
        q: f64,
        out_shape: [usize; 3],
    ) -> Result<YoungReport> {
        let lhs_rel = 1.0 / q + 1.0;
        let rhs_rel = 1.0 / theta + 1.0 / p_in;
        if !(theta >= 1.0 && p_in >= 1.0 && q >= 1.0) || (lhs_rel - rhs_rel).abs() > 1e-12 {
            return Err(Error::ExponentRelation(format!(
                "need 1/q + 1 = 1/theta + 1/p_in, got q={q}, theta={theta}, p_in={p_in}"
            )));
        }
        if matches!(kind, KernelKind::G0 | KernelKind::Gv) {
            return Err(invalid("kind", "young_check takes a scalar kernel (K or G1)"));
        }
        let norm_f = f.lp_norm(p_in, None)?;
        let norm_kernel = kernel_lp_norm(&self.at(kind, r), theta, self.quad.u_res)?;
        let out = self.output_box(r, &f.bbox)?;
        let tf = self.mspace_on_grid(kind, r, f, out, out_shape)?;
        let norm_tf = tf.lp_norm(q, None)?;
        Ok(YoungReport {
            theta,
            p_in,
            q,
            norm_tf,
            norm_kernel,
            norm_f,
            lhs: norm_tf,
            rhs: norm_kernel * norm_f,
        })
    }

    /// ∫₀^τ J_r(s, y, w) dr; only r ∈ [|s|/2, |s|] contributes.
    pub fn integrated_kernel(&self, kind: KernelKind, tau: f64, s: f64, y: f64, w: f64, nodes: &(Vec<f64>, Vec<f64>)) -> f64 {
        if s >= 0.0 {
            return 0.0;
        }
        let (a, b) = (-s / 2.0, (-s).min(tau));
        if a >= b {
            return 0.0;
        }
        let (x, wt) = nodes;
        let mut acc = 0.0;
        for (xi, wi) in x.iter().zip(wt) {
            let r = a + 0.5 * (b - a) * (xi + 1.0);
            acc += wi * self.kernel(kind, r, s, y, w);
        }
        0.5 * (b - a) * acc
    }

    /// Weak L^{θ,∞} norm of ∫₀^τ J_r dr sampled on n³ cells of its support
    /// box [−2τ, 0] × [±C_y τ^β] × [±C_w τ^{β−1}].
    pub fn integrated_weak_norm(&self, kind: KernelKind, tau: f64, theta: f64, n: usize) -> Result<f64> {
        let (cy, cw) = self.support_constants();
        let sup = [
            (-2.0 * tau, 0.0),
            (-cy * tau.powf(self.beta), cy * tau.powf(self.beta)),
            (-cw * tau.powf(self.beta - 1.0), cw * tau.powf(self.beta - 1.0)),
        ];
        let nodes = gauss_legendre(16);
        let g = FnKernel {
            f: |s: f64, y: f64, w: f64| self.integrated_kernel(kind, tau, s, y, w, &nodes),
            sup,
        };
        kernel_weak_norm(&g, theta, n)
    }

    /// Weak L^{θ,∞} norm of Δ_y^{−h} ∫₀^τ J_r dr on the window |s| ≤ τ with
    /// τ = window·|h|^{1/β}, where the truncation at τ is invisible.
    pub fn integrated_difference_weak_norm(&self, kind: KernelKind, h: f64, theta: f64, window: f64, n: usize) -> Result<f64> {
        if h == 0.0 {
            return Ok(0.0);
        }
        let tau = window * h.abs().powf(1.0 / self.beta);
        let (cy, cw) = self.support_constants();
        let ym = cy * tau.powf(self.beta) + h.abs();
        let wm = cw * tau.powf(self.beta - 1.0);
        let nodes = gauss_legendre(16);
        let g = FnKernel {
            f: |s: f64, y: f64, w: f64| {
                self.integrated_kernel(kind, tau, s, y - h, w, &nodes) - self.integrated_kernel(kind, tau, s, y, w, &nodes)
            },
            sup: [(-tau, 0.0), (-ym, ym), (-wm, wm)],
        };
        kernel_weak_norm(&g, theta, n)
    }
}

/// A closure with a declared support box.
pub struct FnKernel<F> {
    pub f: F,
    pub sup: [(f64, f64); 3],
}

impl<F: Fn(f64, f64, f64) -> f64 + Sync> Kernel for FnKernel<F> {
    fn eval(&self, s: f64, y: f64, w: f64) -> f64 {
        (self.f)(s, y, w)
    }

    fn support(&self) -> [(f64, f64); 3] {
        self.sup
    }
}

/// max |Δ_x^h[T_J g](z) − [T_{Δ_y^{−h}J} g](z)| over the samples.
pub fn difference_commutation_check(k: &dyn Kernel, g: &dyn PhaseFn, h: f64, zs: &[[f64; 3]], n: usize) -> Result<f64> {
    if h == 0.0 {
        return Ok(0.0);
    }
    let shifted = ShiftedDifference { inner: KernelRef(k), h };
    let mut worst: f64 = 0.0;
    for &z in zs {
        let lhs = apply_tj_kernel(k, g, [z[0], z[1] + h, z[2]], n)? - apply_tj_kernel(k, g, z, n)?;
        let rhs = apply_tj_kernel(&shifted, g, z, n)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

struct KernelRef<'a>(&'a dyn Kernel);

impl Kernel for KernelRef<'_> {
    fn eval(&self, s: f64, y: f64, w: f64) -> f64 {
        self.0.eval(s, y, w)
    }

    fn support(&self) -> [(f64, f64); 3] {
        self.0.support()
    }
}
