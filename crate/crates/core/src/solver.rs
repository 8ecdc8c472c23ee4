//! Explicit splitting solver for (∂_t + v ∂_x) f = ∂_v A(t, x, v, f, ∂_v f), d = 1.
//!
//! Transport is first-order upwind in flux form (periodic in x), diffusion is a
//! conservative face-flux difference in v with zero flux through the v faces.

use std::sync::Arc;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::field::{Box3, Field, PhaseFn};

pub type FluxFn = dyn Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync;

#[derive(Clone)]
pub enum Flux {
    /// |ξ|^{p−2} ξ.
    PLaplace,
    /// (1 + amp·sin x) |ξ|^{p−2} ξ, a continuous x-dependent coefficient.
    Modulated {
        amp: f64,
    },
    /// No diffusion: pure free transport.
    Zero,
    Custom(Arc<FluxFn>),
}

impl std::fmt::Debug for Flux {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Flux::PLaplace => write!(f, "PLaplace"),
            Flux::Modulated { amp } => write!(f, "Modulated {{ amp: {amp} }}"),
            Flux::Zero => write!(f, "Zero"),
            Flux::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Nonlinearity {
    pub p: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub flux: Flux,
    pub eps_reg: f64,
}

/// Sampled growth constants of a flux.
#[derive(Clone, Debug, Serialize)]
pub struct GrowthCheck {
    pub samples: usize,
    /// min of A·ξ / |ξ|^p
    pub coercivity: f64,
    /// max of |A| / |ξ|^{p−1}
    pub growth: f64,
    pub holds: bool,
}

pub const DEFAULT_EPS_REG: f64 = 1e-6;

impl Nonlinearity {
    pub fn p_laplace(p: f64) -> Result<Self> {
        Self::with_flux(p, 1.0, 1.0, Flux::PLaplace)
    }

    pub fn modulated(p: f64, amp: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&amp) {
            return Err(invalid("amp", "must lie in [0,1)"));
        }
        Self::with_flux(p, 1.0 - amp, 1.0 + amp, Flux::Modulated { amp })
    }

    pub fn transport_only() -> Self {
        Self {
            p: 2.0,
            lambda: 0.0,
            big_lambda: 0.0,
            flux: Flux::Zero,
            eps_reg: 0.0,
        }
    }

    pub fn custom(p: f64, lambda: f64, big_lambda: f64, f: Arc<FluxFn>) -> Result<Self> {
        Self::with_flux(p, lambda, big_lambda, Flux::Custom(f))
    }

    fn with_flux(p: f64, lambda: f64, big_lambda: f64, flux: Flux) -> Result<Self> {
        if !(p > 1.0) {
            return Err(invalid("p", "must exceed 1"));
        }
        if !(lambda > 0.0 && big_lambda >= lambda) {
            return Err(invalid("lambda", "need 0 < λ ≤ Λ"));
        }
        let eps_reg = if p < 2.0 { DEFAULT_EPS_REG } else { 0.0 };
        Ok(Self {
            p,
            lambda,
            big_lambda,
            flux,
            eps_reg,
        })
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps_reg = eps;
        self
    }

    #[inline]
    fn mobility(&self, xi: f64) -> f64 {
        let p = self.p;
        if p == 2.0 {
            1.0
        } else if p < 2.0 && self.eps_reg > 0.0 {
            (xi * xi + self.eps_reg * self.eps_reg).powf(0.5 * (p - 2.0))
        } else if xi == 0.0 {
            0.0
        } else {
            xi.abs().powf(p - 2.0)
        }
    }

    #[inline]
    pub fn eval(&self, t: f64, x: f64, v: f64, eta: f64, xi: f64) -> f64 {
        match &self.flux {
            Flux::PLaplace => self.mobility(xi) * xi,
            Flux::Modulated { amp } => (1.0 + amp * x.sin()) * self.mobility(xi) * xi,
            Flux::Zero => 0.0,
            Flux::Custom(f) => f(t, x, v, eta, xi),
        }
    }

    /// Upper bound for ∂A/∂ξ when |ξ| ≤ xi_max.
    pub fn diffusivity_bound(&self, xi_max: f64) -> f64 {
        if matches!(self.flux, Flux::Zero) {
            return 0.0;
        }
        let p = self.p;
        let m = if p == 2.0 {
            1.0
        } else if p > 2.0 {
            (p - 1.0) * xi_max.powf(p - 2.0)
        } else if self.eps_reg > 0.0 {
            self.eps_reg.powf(p - 2.0)
        } else {
            f64::INFINITY
        };
        self.big_lambda * m
    }

    pub fn check_growth_bounds(&self, samples: usize, seed: u64) -> GrowthCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.p;
        let mut coercivity = f64::INFINITY;
        let mut growth: f64 = 0.0;
        for _ in 0..samples {
            let (t, x, v, eta) = (
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
                rng.gen_range(-4.0..4.0),
            );
            let xi: f64 = rng.gen_range(-1.0f64..1.0) * 10f64.powf(rng.gen_range(-3.0..3.0));
            if xi == 0.0 {
                continue;
            }
            let a = self.eval(t, x, v, eta, xi);
            coercivity = coercivity.min(a * xi / xi.abs().powf(p));
            growth = growth.max(a.abs() / xi.abs().powf(p - 1.0));
        }
        let tol = 1e-12;
        GrowthCheck {
            samples,
            coercivity,
            growth,
            holds: coercivity >= self.lambda * (1.0 - tol) && growth <= self.big_lambda * (1.0 + tol),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcX {
    #[default]
    Periodic,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BcV {
    #[default]
    ZeroFlux,
}

fn default_cfl() -> f64 {
    0.4
}

fn default_eps() -> f64 {
    DEFAULT_EPS_REG
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub x: (f64, f64),
    pub v: (f64, f64),
    pub nx: usize,
    pub nv: usize,
    pub t_end: f64,
    /// Number of stored time slices.
    pub slices: usize,
    /// Fixed step; `None` steps at the CFL limit.
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default = "default_cfl")]
    pub cfl_transport: f64,
    #[serde(default = "default_cfl")]
    pub cfl_diffusion: f64,
    /// Used for p < 2 only.
    #[serde(default = "default_eps")]
    pub eps_reg: f64,
    #[serde(default)]
    pub bc_x: BcX,
    #[serde(default)]
    pub bc_v: BcV,
}

impl SolverConfig {
    pub fn new(x: (f64, f64), v: (f64, f64), nx: usize, nv: usize, t_end: f64, slices: usize) -> Self {
        Self {
            x,
            v,
            nx,
            nv,
            t_end,
            slices,
            dt: None,
            cfl_transport: default_cfl(),
            cfl_diffusion: default_cfl(),
            eps_reg: DEFAULT_EPS_REG,
            bc_x: BcX::Periodic,
            bc_v: BcV::ZeroFlux,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 8 || self.nv < 8 || self.slices < 8 {
            return Err(invalid("shape", "grid must be at least 8×8×8"));
        }
        if !(self.x.1 > self.x.0 && self.v.1 > self.v.0) {
            return Err(invalid("box", "empty x or v range"));
        }
        if !(self.t_end > 0.0) {
            return Err(invalid("t_end", "must be positive"));
        }
        if !(self.cfl_transport > 0.0 && self.cfl_transport <= 1.0 && self.cfl_diffusion > 0.0 && self.cfl_diffusion <= 0.5) {
            return Err(invalid("cfl", "need 0 < cfl_transport ≤ 1 and 0 < cfl_diffusion ≤ 1/2"));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(invalid("dt", "must be positive"));
            }
        }
        Ok(())
    }

    pub fn space_time_box(&self) -> Result<Box3> {
        Box3::new((0.0, self.t_end), self.x, self.v)
    }

    pub fn dx(&self) -> f64 {
        (self.x.1 - self.x.0) / self.nx as f64
    }

    pub fn dv(&self) -> f64 {
        (self.v.1 - self.v.0) / self.nv as f64
    }

    fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x.0 + (j as f64 + 0.5) * self.dx()).collect()
    }

    fn vs(&self) -> Vec<f64> {
        (0..self.nv).map(|k| self.v.0 + (k as f64 + 0.5) * self.dv()).collect()
    }

    /// Time-slice Field holding f0 sampled at cell centres.
    pub fn initial_slice(&self, f0: impl Fn(f64, f64) -> f64 + Sync) -> Result<Field> {
        self.validate()?;
        Field::from_fn(Box3::new((-0.5, 0.5), self.x, self.v)?, [1, self.nx, self.nv], |_, x, v| f0(x, v))
    }
}

/// Grid and stencil data shared by `step`, `residual` and the CFL check.
struct Stencil<'a> {
    xs: Vec<f64>,
    vs: Vec<f64>,
    dx: f64,
    dv: f64,
    nl: &'a Nonlinearity,
}

impl<'a> Stencil<'a> {
    fn new(xs: Vec<f64>, vs: Vec<f64>, dx: f64, dv: f64, nl: &'a Nonlinearity) -> Self {
        Self { xs, vs, dx, dv, nl }
    }

    fn for_field(f: &Field, nl: &'a Nonlinearity) -> Self {
        let h = f.spacing();
        Self::new(f.centers(1), f.centers(2), h[1], h[2], nl)
    }

    fn max_face_gradient(&self, f: ArrayView2<f64>) -> f64 {
        let nv = self.vs.len();
        let dv = self.dv;
        f.axis_iter(Axis(0))
            .into_par_iter()
            .map(|row| (0..nv - 1).fold(0.0f64, |m, k| m.max((row[k + 1] - row[k]).abs() / dv)))
            .reduce(|| 0.0, f64::max)
    }

    fn limits(&self, f: ArrayView2<f64>, cfg_t: f64, cfg_d: f64) -> (f64, f64) {
        let vmax = self.vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let lt = if vmax > 0.0 { cfg_t * self.dx / vmax } else { f64::INFINITY };
        let a = self.nl.diffusivity_bound(self.max_face_gradient(f));
        let ld = if a > 0.0 { cfg_d * self.dv * self.dv / a } else { f64::INFINITY };
        (lt, ld)
    }

    /// −(F_{j+1/2} − F_{j−1/2})/Δx with upwind F = v⁺ f_j + v⁻ f_{j+1}, periodic.
    fn transport_row(&self, f: ArrayView2<f64>, j: usize, out: &mut [f64]) {
        let nx = self.xs.len();
        let (jm, jp) = ((j + nx - 1) % nx, (j + 1) % nx);
        for (k, o) in out.iter_mut().enumerate() {
            let v = self.vs[k];
            let flux = |a: usize, b: usize| if v > 0.0 { v * f[[a, k]] } else { v * f[[b, k]] };
            *o = -(flux(j, jp) - flux(jm, j)) / self.dx;
        }
    }

    /// (A_{k+1/2} − A_{k−1/2})/Δv with zero flux on the outer faces.
    fn diffusion_row(&self, t: f64, row: &[f64], x: f64, out: &mut [f64]) {
        let nv = row.len();
        let mut left = 0.0;
        for k in 0..nv {
            let right = if k + 1 < nv {
                let xi = (row[k + 1] - row[k]) / self.dv;
                let vf = 0.5 * (self.vs[k] + self.vs[k + 1]);
                self.nl.eval(t, x, vf, 0.5 * (row[k] + row[k + 1]), xi)
            } else {
                0.0
            };
            out[k] = (right - left) / self.dv;
            left = right;
        }
    }

    /// Transport then diffusion, plus an explicit source.
    fn advance(&self, f: &Array2<f64>, t: f64, dt: f64, src: Option<&dyn PhaseFn>) -> Array2<f64> {
        let (nx, nv) = f.dim();
        let mut g = f.clone();
        g.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(j, mut row)| {
            let mut tr = vec![0.0; nv];
            self.transport_row(f.view(), j, &mut tr);
            for k in 0..nv {
                row[k] += dt * tr[k];
            }
        });
        let mut h = g.clone();
        h.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(j, mut row)| {
            let gr: Vec<f64> = g.row(j).to_vec();
            let mut df = vec![0.0; nv];
            self.diffusion_row(t, &gr, self.xs[j], &mut df);
            for k in 0..nv {
                row[k] += dt * df[k];
                if let Some(s) = src {
                    row[k] += dt * s.at(t, self.xs[j], self.vs[k]);
                }
            }
        });
        debug_assert_eq!(h.dim(), (nx, nv));
        h
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub cfl_limit: f64,
    pub mass: f64,
    pub l2: f64,
    pub max: f64,
    pub min: f64,
}

impl StepDiagnostics {
    pub const CSV_HEADER: &'static str = "step,t,dt,cfl_limit,mass,l2,max,min";

    pub fn csv_row(&self) -> String {
        use crate::numerics::fmt_f64 as g;
        format!(
            "{},{},{},{},{},{},{},{}",
            self.step,
            g(self.t),
            g(self.dt),
            g(self.cfl_limit),
            g(self.mass),
            g(self.l2),
            g(self.max),
            g(self.min)
        )
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    /// Slice i holds f at t = (i + 1/2)·t_end/slices.
    pub field: Field,
    pub diagnostics: Vec<StepDiagnostics>,
    pub eps_reg: f64,
}

impl Solution {
    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from(StepDiagnostics::CSV_HEADER);
        s.push('\n');
        for d in &self.diagnostics {
            s.push_str(&d.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn times(&self) -> Vec<f64> {
        self.field.centers(0)
    }
}

fn slice_of(f: &Field) -> Result<Array2<f64>> {
    if f.shape()[0] != 1 {
        return Err(invalid("f", "expected a single time slice"));
    }
    Ok(f.data.index_axis(Axis(0), 0).to_owned())
}

fn moments(f: &Array2<f64>, area: f64) -> (f64, f64, f64, f64) {
    let mut mass = 0.0;
    let mut l2 = 0.0;
    let mut mx = f64::NEG_INFINITY;
    let mut mn = f64::INFINITY;
    for &v in f.iter() {
        mass += v;
        l2 += v * v;
        mx = mx.max(v);
        mn = mn.min(v);
    }
    (mass * area, (l2 * area).sqrt(), mx, mn)
}

fn guard(new: &Array2<f64>, old_max: f64) -> Result<()> {
    let mut m = 0.0f64;
    for v in new.iter() {
        if !v.is_finite() {
            return Err(Error::Numerical("non-finite value after step".into()));
        }
        m = m.max(v.abs());
    }
    if m > 10.0 * old_max.max(1e-300) {
        return Err(Error::Numerical(format!(
            "instability: max |f| grew from {old_max:e} to {m:e} in one step"
        )));
    }
    Ok(())
}

fn effective(nl: &Nonlinearity, cfg: &SolverConfig) -> Nonlinearity {
    let mut nl = nl.clone();
    if nl.p < 2.0 {
        nl.eps_reg = cfg.eps_reg;
    }
    nl
}

/// One forward-Euler splitting step of length `dt` for a single-slice Field
/// whose time is the centre of its t-range.
pub fn step(f: &Field, nl: &Nonlinearity, cfg: &SolverConfig, dt: f64) -> Result<Field> {
    let nl = effective(nl, cfg);
    let st = Stencil::for_field(f, &nl);
    let cur = slice_of(f)?;
    let (lt, ld) = st.limits(cur.view(), cfg.cfl_transport, cfg.cfl_diffusion);
    let limit = lt.min(ld);
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    let t = f.center(0, 0);
    let next = st.advance(&cur, t, dt, None);
    guard(&next, cur.iter().fold(0.0f64, |m, v| m.max(v.abs())))?;
    let mut bbox = f.bbox;
    bbox.lo[0] += dt;
    bbox.hi[0] += dt;
    Field::from_array(bbox, next.insert_axis(Axis(0)))
}

pub fn solve(f0: &Field, nl: &Nonlinearity, cfg: &SolverConfig) -> Result<Solution> {
    solve_forced(f0, nl, cfg, None)
}

/// Runs from t = 0 to t_end, adding the source term `src` (manufactured mode).
pub fn solve_forced(f0: &Field, nl: &Nonlinearity, cfg: &SolverConfig, src: Option<&dyn PhaseFn>) -> Result<Solution> {
    cfg.validate()?;
    let s = f0.shape();
    if s[1] != cfg.nx || s[2] != cfg.nv {
        return Err(invalid("f0", "shape does not match the solver grid"));
    }
    let nl = effective(nl, cfg);
    let st = Stencil::new(cfg.xs(), cfg.vs(), cfg.dx(), cfg.dv(), &nl);
    let area = cfg.dx() * cfg.dv();
    let mut cur = slice_of(f0)?;
    let ts = cfg.t_end / cfg.slices as f64;
    let targets: Vec<f64> = (0..cfg.slices).map(|i| (i as f64 + 0.5) * ts).collect();
    let mut data = Array3::zeros((cfg.slices, cfg.nx, cfg.nv));
    let mut diags = Vec::new();
    let (m, l2, mx, mn) = moments(&cur, area);
    diags.push(StepDiagnostics {
        step: 0,
        t: 0.0,
        dt: 0.0,
        cfl_limit: 0.0,
        mass: m,
        l2,
        max: mx,
        min: mn,
    });
    let mut t = 0.0;
    let mut n = 0;
    for (i, &target) in targets.iter().enumerate() {
        while target - t > 1e-14 * cfg.t_end {
            let (lt, ld) = st.limits(cur.view(), cfg.cfl_transport, cfg.cfl_diffusion);
            let limit = lt.min(ld);
            let want = cfg.dt.unwrap_or(limit);
            if want > limit * (1.0 + 1e-12) {
                return Err(Error::Cfl { dt: want, limit });
            }
            let dt = want.min(target - t);
            let next = st.advance(&cur, t, dt, src);
            guard(&next, cur.iter().fold(0.0f64, |m, v| m.max(v.abs())))?;
            cur = next;
            t += dt;
            n += 1;
            let (m, l2, mx, mn) = moments(&cur, area);
            diags.push(StepDiagnostics {
                step: n,
                t,
                dt,
                cfl_limit: limit,
                mass: m,
                l2,
                max: mx,
                min: mn,
            });
        }
        t = target;
        data.index_axis_mut(Axis(0), i).assign(&cur);
    }
    Ok(Solution {
        field: Field::from_array(cfg.space_time_box()?, data)?,
        diagnostics: diags,
        eps_reg: nl.eps_reg,
    })
}

/// Discrete residual ∂_t f + v ∂_x f − ∂_v A with the stencils of `step`;
/// forward differences in t (backward on the last slice).
pub fn residual(f: &Field, nl: &Nonlinearity) -> Result<Field> {
    let s = f.shape();
    if s[0] < 2 || s[2] < 2 {
        return Err(invalid("f", "need at least two slices and two velocity cells"));
    }
    let st = Stencil::for_field(f, nl);
    let ht = f.spacing()[0];
    let ts = f.centers(0);
    let mut out = Array3::zeros((s[0], s[1], s[2]));
    out.axis_iter_mut(Axis(0)).into_par_iter().enumerate().for_each(|(i, mut plane)| {
        let cur = f.data.index_axis(Axis(0), i);
        let (a, b) = if i + 1 < s[0] { (i, i + 1) } else { (i - 1, i) };
        let mut tr = vec![0.0; s[2]];
        let mut df = vec![0.0; s[2]];
        for j in 0..s[1] {
            st.transport_row(cur, j, &mut tr);
            let row: Vec<f64> = cur.row(j).to_vec();
            st.diffusion_row(ts[i], &row, st.xs[j], &mut df);
            for k in 0..s[2] {
                let dtf = (f.data[[b, j, k]] - f.data[[a, j, k]]) / ht;
                plane[[j, k]] = dtf - tr[k] - df[k];
            }
        }
    });
    Field::from_array(f.bbox, out)
}

/// (∂_t + v ∂_x) f = ∂_v S₀ + S₁ with S₀ = A(·, f, ∂_v f) and S₁ the residual.
#[derive(Clone, Debug)]
pub struct SourceDecomposition {
    pub s0: Field,
    pub s1: Field,
    pub grad_v: Field,
}

pub fn transport_decomposition(f: &Field, nl: &Nonlinearity) -> Result<SourceDecomposition> {
    let grad_v = f.grad_v()?;
    let mut s0 = grad_v.clone();
    let (ts, xs, vs) = (f.centers(0), f.centers(1), f.centers(2));
    for ((i, j, k), o) in s0.data.indexed_iter_mut() {
        *o = nl.eval(ts[i], xs[j], vs[k], f.data[[i, j, k]], grad_v.data[[i, j, k]]);
    }
    Ok(SourceDecomposition {
        s0,
        s1: residual(f, nl)?,
        grad_v,
    })
}
