//! Galilean kinetic group, p-dilations, backward kinetic p-cylinders and the
//! transport-aligned cutoffs used by the local estimates.

use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{invalid, Error, Result};

pub type Coords = SmallVec<[f64; 3]>;

/// A point (t, x, v) of ℝ^{1+2d}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub t: f64,
    pub x: Coords,
    pub v: Coords,
}

impl PhasePoint {
    pub fn new(t: f64, x: &[f64], v: &[f64]) -> Result<Self> {
        if x.len() != v.len() {
            return Err(Error::DimensionMismatch {
                expected: x.len(),
                got: v.len(),
            });
        }
        if x.is_empty() {
            return Err(invalid("d", "must be at least 1"));
        }
        let z = Self {
            t,
            x: Coords::from_slice(x),
            v: Coords::from_slice(v),
        };
        if !z.is_finite() {
            return Err(invalid("z", "components must be finite"));
        }
        Ok(z)
    }

    /// Shorthand for d = 1.
    pub fn d1(t: f64, x: f64, v: f64) -> Self {
        Self {
            t,
            x: smallvec::smallvec![x],
            v: smallvec::smallvec![v],
        }
    }

    pub fn origin(d: usize) -> Self {
        Self {
            t: 0.0,
            x: smallvec::smallvec![0.0; d],
            v: smallvec::smallvec![0.0; d],
        }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().chain(&self.v).all(|c| c.is_finite())
    }

    /// Max-norm distance, used by the group-axiom checks.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = (self.t - other.t).abs();
        for (a, b) in self.x.iter().zip(&other.x).chain(self.v.iter().zip(&other.v)) {
            m = m.max((a - b).abs());
        }
        m
    }
}

fn check_dims(a: &PhasePoint, b: &PhasePoint) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// (t, x, v) ∘ (s, y, w) = (t + s, x + y + s·v, v + w).
pub fn group_compose(a: &PhasePoint, b: &PhasePoint) -> Result<PhasePoint> {
    check_dims(a, b)?;
    Ok(PhasePoint {
        t: a.t + b.t,
        x: a.x.iter().zip(&b.x).zip(&a.v).map(|((x, y), v)| x + y + b.t * v).collect(),
        v: a.v.iter().zip(&b.v).map(|(v, w)| v + w).collect(),
    })
}

/// (t, x, v)⁻¹ = (−t, −x + t·v, −v).
pub fn group_inverse(a: &PhasePoint) -> PhasePoint {
    PhasePoint {
        t: -a.t,
        x: a.x.iter().zip(&a.v).map(|(x, v)| -x + a.t * v).collect(),
        v: a.v.iter().map(|v| -v).collect(),
    }
}

/// δ_r(t, x, v) = (r^p t, r^{1+p} x, r v).
pub fn dilate(z: &PhasePoint, r: f64, p: f64) -> Result<PhasePoint> {
    if !(r > 0.0) {
        return Err(invalid("r", "dilation factor must be positive"));
    }
    let rt = r.powf(p);
    let rx = r * rt;
    Ok(PhasePoint {
        t: rt * z.t,
        x: z.x.iter().map(|x| rx * x).collect(),
        v: z.v.iter().map(|v| r * v).collect(),
    })
}

/// Volume of the Euclidean unit ball in ℝ^d.
pub fn unit_ball_volume(d: usize) -> f64 {
    match d {
        0 => 1.0,
        1 => 2.0,
        _ => 2.0 * std::f64::consts::PI / d as f64 * unit_ball_volume(d - 2),
    }
}

fn norm(c: impl Iterator<Item = f64>) -> f64 {
    c.map(|a| a * a).sum::<f64>().sqrt()
}

/// Backward kinetic p-cylinder Q_{θ,R}(z₀).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cylinder {
    pub center: PhasePoint,
    pub theta: f64,
    pub radius: f64,
    pub p: f64,
}

impl Cylinder {
    pub fn new(center: PhasePoint, theta: f64, radius: f64, p: f64) -> Result<Self> {
        if !(theta > 0.0) {
            return Err(invalid("theta", "must be positive"));
        }
        if !(radius > 0.0) {
            return Err(invalid("R", "must be positive"));
        }
        if !(p > 1.0) {
            return Err(invalid("p", "must exceed 1"));
        }
        Ok(Self { center, theta, radius, p })
    }

    pub fn at_origin(d: usize, theta: f64, radius: f64, p: f64) -> Result<Self> {
        Self::new(PhasePoint::origin(d), theta, radius, p)
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    /// θR^p.
    pub fn duration(&self) -> f64 {
        self.theta * self.radius.powf(self.p)
    }

    /// θR^{1+p}.
    pub fn x_radius(&self) -> f64 {
        self.theta * self.radius.powf(1.0 + self.p)
    }

    pub fn contains(&self, z: &PhasePoint) -> bool {
        let c = &self.center;
        let dt = z.t - c.t;
        if !(dt >= -self.duration() && dt < 0.0) {
            return false;
        }
        let dv = norm(z.v.iter().zip(&c.v).map(|(v, v0)| v - v0));
        if !(dv < self.radius) {
            return false;
        }
        let dx = norm(z.x.iter().zip(&c.x).zip(&z.v).map(|((x, x0), v)| x - x0 - dt * v));
        dx < self.x_radius()
    }

    /// Scalar membership for d = 1, used in grid loops.
    #[inline]
    pub fn contains_1d(&self, t: f64, x: f64, v: f64) -> bool {
        let dt = t - self.center.t;
        dt >= -self.duration()
            && dt < 0.0
            && (v - self.center.v[0]).abs() < self.radius
            && (x - self.center.x[0] - dt * v).abs() < self.x_radius()
    }

    /// |D_{θ,R}(t)|, constant in t.
    pub fn slice_measure(&self) -> f64 {
        let d = self.dim() as i32;
        let vb = unit_ball_volume(self.dim());
        self.x_radius().powi(d) * self.radius.powi(d) * vb * vb
    }

    /// θ^{d+1} R^{p + d(1+p) + d} |B₁|².
    pub fn volume(&self) -> f64 {
        let d = self.dim() as f64;
        let vb = unit_ball_volume(self.dim());
        self.theta.powf(d + 1.0) * self.radius.powf(self.p + d * (1.0 + self.p) + d) * vb * vb
    }

    /// Axis-aligned bounding box (t, x, v) ranges for d = 1.
    pub fn bounding_box_1d(&self) -> [(f64, f64); 3] {
        let c = &self.center;
        let (t0, x0, v0) = (c.t, c.x[0], c.v[0]);
        let tau = self.duration();
        let vmax = v0.abs() + self.radius;
        let xr = self.x_radius() + tau * vmax;
        [(t0 - tau, t0), (x0 - xr, x0 + xr), (v0 - self.radius, v0 + self.radius)]
    }
}

/// Smooth monotone step: 1 for u ≤ 0, 0 for u ≥ 1, built from exp(−1/x).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SmoothStep;

impl SmoothStep {
    fn e(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp()
        } else {
            0.0
        }
    }

    fn de(x: f64) -> f64 {
        if x > 0.0 {
            (-1.0 / x).exp() / (x * x)
        } else {
            0.0
        }
    }

    pub fn value(u: f64) -> f64 {
        if u <= 0.0 {
            return 1.0;
        }
        if u >= 1.0 {
            return 0.0;
        }
        let (a, b) = (Self::e(1.0 - u), Self::e(u));
        a / (a + b)
    }

    pub fn derivative(u: f64) -> f64 {
        if u <= 0.0 || u >= 1.0 {
            return 0.0;
        }
        let (a, b) = (Self::e(1.0 - u), Self::e(u));
        let (da, db) = (-Self::de(1.0 - u), Self::de(u));
        let s = a + b;
        (da * s - a * (da + db)) / (s * s)
    }

    /// sup |S′|, attained at u = 1/2 by symmetry.
    pub fn max_slope() -> f64 {
        Self::derivative(0.5).abs()
    }
}

/// Radial plateau profile: 1 on |y| ≤ inner, 0 on |y| ≥ outer.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub inner: f64,
    pub outer: f64,
}

impl Plateau {
    pub fn value(&self, rho: f64) -> f64 {
        SmoothStep::value((rho - self.inner) / (self.outer - self.inner))
    }

    /// d/dρ of the profile.
    pub fn slope(&self, rho: f64) -> f64 {
        let w = self.outer - self.inner;
        SmoothStep::derivative((rho - self.inner) / w) / w
    }
}

/// χ(t, x, v) = η(t) ζ(x − t v) φ(v) for the nested pair Q_{θ,R₁} ⊂ Q_{θ,R₂}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSet {
    pub theta: f64,
    pub r1: f64,
    pub r2: f64,
    pub p: f64,
    /// η as a profile in −t: 1 on [−θR₁^p, ∞), 0 for t ≤ −θR₂^p.
    pub eta: Plateau,
    pub zeta: Plateau,
    pub phi: Plateau,
    pub gamma_t: f64,
    pub gamma_v: f64,
    /// Measured sup|(∂_t + v·∇_x)χ| / Γ_t over Q_{θ,R₂}.
    pub measured_c_t: f64,
    /// Measured sup|∇_v χ| / Γ_v over Q_{θ,R₂}.
    pub measured_c_v: f64,
}

/// Γ_t = 1/(θ(R₂^p − R₁^p)).
pub fn gamma_t(theta: f64, r1: f64, r2: f64, p: f64) -> f64 {
    1.0 / (theta * (r2.powf(p) - r1.powf(p)))
}

/// Γ_v = R₂^p/(R₂^{1+p} − R₁^{1+p}) + 1/(R₂ − R₁).
pub fn gamma_v(r1: f64, r2: f64, p: f64) -> f64 {
    r2.powf(p) / (r2.powf(1.0 + p) - r1.powf(1.0 + p)) + 1.0 / (r2 - r1)
}

/// Cutoff values and derivatives at one point (d = 1).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffSample {
    pub chi: f64,
    /// (∂_t + v ∂_x)χ = η′ ζ φ.
    pub transport: f64,
    pub grad_v: f64,
}

impl CutoffSet {
    pub fn eta(&self, t: f64) -> f64 {
        self.eta.value(-t)
    }

    pub fn eta_prime(&self, t: f64) -> f64 {
        -self.eta.slope(-t)
    }

    pub fn chi(&self, z: &PhasePoint) -> f64 {
        let y = norm(z.x.iter().zip(&z.v).map(|(x, v)| x - z.t * v));
        let vn = norm(z.v.iter().copied());
        self.eta(z.t) * self.zeta.value(y) * self.phi.value(vn)
    }

    /// η′(t) ζ(x − t v) φ(v).
    pub fn transport_derivative(&self, z: &PhasePoint) -> f64 {
        let y = norm(z.x.iter().zip(&z.v).map(|(x, v)| x - z.t * v));
        let vn = norm(z.v.iter().copied());
        self.eta_prime(z.t) * self.zeta.value(y) * self.phi.value(vn)
    }

    /// ∇_v χ = η(−t ∇ζ(x − tv) φ + ζ ∇φ).
    pub fn grad_v(&self, z: &PhasePoint) -> Coords {
        let yv: Coords = z.x.iter().zip(&z.v).map(|(x, v)| x - z.t * v).collect();
        let y = norm(yv.iter().copied());
        let vn = norm(z.v.iter().copied());
        let (zeta, phi) = (self.zeta.value(y), self.phi.value(vn));
        let (dz, dp) = (self.zeta.slope(y), self.phi.slope(vn));
        let eta = self.eta(z.t);
        yv.iter()
            .zip(&z.v)
            .map(|(yi, vi)| {
                let gz = if y > 0.0 { dz * yi / y } else { 0.0 };
                let gp = if vn > 0.0 { dp * vi / vn } else { 0.0 };
                eta * (-z.t * gz * phi + zeta * gp)
            })
            .collect()
    }

    #[inline]
    pub fn sample_1d(&self, t: f64, x: f64, v: f64) -> CutoffSample {
        let y = x - t * v;
        let (zeta, phi) = (self.zeta.value(y.abs()), self.phi.value(v.abs()));
        let (dz, dp) = (self.zeta.slope(y.abs()) * y.signum(), self.phi.slope(v.abs()) * v.signum());
        let eta = self.eta(t);
        CutoffSample {
            chi: eta * zeta * phi,
            transport: self.eta_prime(t) * zeta * phi,
            grad_v: eta * (-t * dz * phi + zeta * dp),
        }
    }
}

/// Builds the cutoffs for Q_{θ,R₁} ⊂ Q_{θ,R₂} (centred at the origin, d = 1)
/// and measures the derivative constants on a sampling grid of Q_{θ,R₂}.
pub fn build_cutoffs(theta: f64, r1: f64, r2: f64, p: f64) -> Result<CutoffSet> {
    if !(r1 > 0.0 && r1 < r2) {
        return Err(invalid("R1", format!("need 0 < R1 < R2, got R1={r1}, R2={r2}")));
    }
    if !(theta > 0.0) {
        return Err(invalid("theta", "must be positive"));
    }
    if !(p > 1.0) {
        return Err(invalid("p", "must exceed 1"));
    }
    let mut set = CutoffSet {
        theta,
        r1,
        r2,
        p,
        eta: Plateau {
            inner: theta * r1.powf(p),
            outer: theta * r2.powf(p),
        },
        zeta: Plateau {
            inner: theta * r1.powf(1.0 + p),
            outer: theta * r2.powf(1.0 + p),
        },
        phi: Plateau { inner: r1, outer: r2 },
        gamma_t: gamma_t(theta, r1, r2, p),
        gamma_v: gamma_v(r1, r2, p),
        measured_c_t: 0.0,
        measured_c_v: 0.0,
    };
    let (ct, cv) = measure_constants(&set, 48);
    set.measured_c_t = ct;
    set.measured_c_v = cv;
    Ok(set)
}

/// Samples Q_{θ,R₂} in its straightened coordinates (t, y = x − tv, v).
fn measure_constants(set: &CutoffSet, n: usize) -> (f64, f64) {
    let tau = set.eta.outer;
    let yr = set.zeta.outer;
    let vr = set.phi.outer;
    let mut mt: f64 = 0.0;
    let mut mv: f64 = 0.0;
    for i in 0..n {
        let t = -tau * (i as f64 + 0.5) / n as f64;
        for j in 0..n {
            let y = -yr + 2.0 * yr * (j as f64 + 0.5) / n as f64;
            for k in 0..n {
                let v = -vr + 2.0 * vr * (k as f64 + 0.5) / n as f64;
                let s = set.sample_1d(t, y + t * v, v);
                mt = mt.max(s.transport.abs());
                mv = mv.max(s.grad_v.abs());
            }
        }
    }
    (mt / set.gamma_t, mv / set.gamma_v)
}
