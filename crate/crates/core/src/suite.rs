//! Standard inputs shared by the CLI, the examples and the tests: smooth
//! manufactured decompositions and the solver setups of the experiments.

use std::f64::consts::PI;

use crate::error::Result;
use crate::field::{Box3, Field, PhaseFn};
use crate::geometry::{Cylinder, PhasePoint};
use crate::mollify::Decomposed;
use crate::solver::{solve, Nonlinearity, Solution, SolverConfig};

type Fn3 = fn(f64, f64, f64) -> f64;

/// A field with its exact transport decomposition
/// (∂_t + v∂_x)f = ∂_v S₀ + S₁.
#[derive(Clone, Copy)]
pub struct Manufactured {
    pub name: &'static str,
    pub f: Fn3,
    pub grad_v: Fn3,
    pub s0: Fn3,
    pub s1: Fn3,
}

impl Manufactured {
    pub fn decomposed(&self) -> Decomposed<'_> {
        Decomposed {
            f: &self.f,
            grad_v: &self.grad_v,
            s0: &self.s0,
            s1: &self.s1,
        }
    }

    pub fn sup_f(&self, bbox: Box3, shape: [usize; 3]) -> Result<f64> {
        Ok(Field::from_fn(bbox, shape, self.f)?.max_abs())
    }
}

fn gauss(t: f64, x: f64, v: f64) -> f64 {
    (-(t * t + x * x + v * v)).exp()
}

fn zero(_: f64, _: f64, _: f64) -> f64 {
    0.0
}

/// f = ∂²_v G for G = e^{−(t²+x²+v²)}; the transport of f is a pure
/// v-divergence, so S₁ = 0.
pub fn gn_pair() -> Manufactured {
    Manufactured {
        name: "gaussian-d2v",
        f: |t, x, v| (4.0 * v * v - 2.0) * gauss(t, x, v),
        grad_v: |t, x, v| (12.0 * v - 8.0 * v * v * v) * gauss(t, x, v),
        s0: |t, x, v| (2.0 * x + 4.0 * v * (t + v * x)) * gauss(t, x, v),
        s1: zero,
    }
}

/// Bounding box on which every standard GN pair is negligible at the edges.
pub fn gn_box() -> Box3 {
    Box3::new((-6.0, 6.0), (-7.0, 7.0), (-5.5, 5.5)).expect("static box")
}

/// Inputs of the representation identity.
pub fn representation_suite() -> Vec<Manufactured> {
    vec![
        Manufactured {
            name: "gaussian-s1",
            f: gauss,
            grad_v: |t, x, v| -2.0 * v * gauss(t, x, v),
            s0: zero,
            s1: |t, x, v| -2.0 * (t + v * x) * gauss(t, x, v),
        },
        Manufactured {
            name: "gaussian-s0",
            f: gauss,
            grad_v: |t, x, v| -2.0 * v * gauss(t, x, v),
            s0: |t, x, v| -2.0 * v * gauss(t, x, v),
            s1: |t, x, v| (-2.0 * t - 2.0 * v * x - 4.0 * v * v + 2.0) * gauss(t, x, v),
        },
        Manufactured {
            name: "stationary",
            f: |_, _, v| 0.5 * (-v * v).exp(),
            grad_v: |_, _, v| -v * (-v * v).exp(),
            s0: |_, _, v| 0.5 * (-v * v).exp(),
            s1: |_, _, v| v * (-v * v).exp(),
        },
    ]
}

/// Sample points for the representation identity.
pub const REPRESENTATION_SAMPLES: [[f64; 3]; 3] = [[0.0, 0.0, 0.0], [0.3, -0.2, 0.4], [-0.4, 0.5, -0.3]];

/// The exact solution e^{−t}(1 + ½sin(x − tv))e^{−v²} of the forced equation
/// on the periodic strip, with its source for the p-Laplace flux.
pub struct SolverMms {
    pub p: f64,
}

impl SolverMms {
    pub fn exact(&self, t: f64, x: f64, v: f64) -> f64 {
        (-t).exp() * (1.0 + 0.5 * (x - t * v).sin()) * (-v * v).exp()
    }

    pub fn source(&self, t: f64, x: f64, v: f64) -> f64 {
        let (a, y, c) = ((-t).exp(), x - t * v, (-v * v).exp());
        let (b, b1, b2) = (1.0 + 0.5 * y.sin(), 0.5 * y.cos(), -0.5 * y.sin());
        let (c1, c2) = (-2.0 * v * c, (4.0 * v * v - 2.0) * c);
        let xi = a * (-t * b1 * c + b * c1);
        let xiv = a * (t * t * b2 * c - 2.0 * t * b1 * c1 + b * c2);
        -a * b * c - (self.p - 1.0) * xi.abs().powf(self.p - 2.0) * xiv
    }

    pub fn config(n: usize) -> SolverConfig {
        SolverConfig::new((0.0, 2.0 * PI), (-4.0, 4.0), n, n, 0.5, 8)
    }

    /// max over stored slices of |f_h − f|.
    pub fn linf_error(&self, sol: &Solution) -> f64 {
        let f = &sol.field;
        let (ts, xs, vs) = (sol.times(), f.centers(1), f.centers(2));
        f.data
            .indexed_iter()
            .map(|((i, j, k), u)| (u - self.exact(ts[i], xs[j], vs[k])).abs())
            .fold(0.0, f64::max)
    }
}

impl PhaseFn for SolverMms {
    fn at(&self, t: f64, x: f64, v: f64) -> f64 {
        self.source(t, x, v)
    }
}

/// Solver run whose output carries Q_{θ,R₂}(z₀) with z₀ = (t_end, 0, 0).
pub struct EnergySetup {
    pub p: f64,
    pub theta: f64,
    pub r1: f64,
    pub r2: f64,
    pub config: SolverConfig,
    pub z0: PhasePoint,
}

impl EnergySetup {
    pub const R1: f64 = 1.0;
    pub const R2: f64 = 1.25;

    pub fn new(p: f64, theta: f64, n: usize) -> Result<Self> {
        Self::with_radii(p, theta, Self::R1, Self::R2, n)
    }

    pub fn with_radii(p: f64, theta: f64, r1: f64, r2: f64, n: usize) -> Result<Self> {
        let t_end = 1.1 * theta * r2.powf(p);
        let z0 = PhasePoint::d1(t_end, 0.0, 0.0);
        let bb = Cylinder::new(z0.clone(), theta, r2, p)?.bounding_box_1d();
        let xl = 1.05 * bb[1].1;
        let config = SolverConfig::new((-xl, xl), (-2.5, 2.5), n, n, t_end, n);
        Ok(Self {
            p,
            theta,
            r1,
            r2,
            config,
            z0,
        })
    }

    pub fn solve(&self) -> Result<Solution> {
        let l = self.config.x.1 - self.config.x.0;
        let f0 = self
            .config
            .initial_slice(|x, v| (1.0 + 0.5 * (2.0 * PI * x / l).cos()) * (-2.0 * v * v).exp())?;
        solve(&f0, &Nonlinearity::p_laplace(self.p)?, &self.config)
    }
}

/// Concentrated initial datum whose solution drops below level one near
/// z₀ = (1, 0, 0) after intrinsic rescaling.
pub struct DeGiorgiSetup {
    pub p: f64,
    pub radius: f64,
    pub config: SolverConfig,
    pub z0: PhasePoint,
    pub shape: [usize; 3],
    pub n_max: usize,
}

impl DeGiorgiSetup {
    pub fn new(p: f64, n: usize) -> Self {
        Self {
            p,
            radius: if p >= 2.0 { 0.25 } else { 0.3 },
            config: SolverConfig::new((-4.0, 4.0), (-3.0, 3.0), n, n, 1.0, n),
            z0: PhasePoint::d1(1.0, 0.0, 0.0),
            shape: [48, 96, 48],
            n_max: 12,
        }
    }

    pub fn levels() -> Vec<f64> {
        crate::numerics::logspace(0.02, 2.0, 12)
    }

    pub fn solve(&self) -> Result<Solution> {
        let f0 = self.config.initial_slice(|x, v| (-4.0 * (x * x + v * v)).exp())?;
        solve(&f0, &Nonlinearity::p_laplace(self.p)?, &self.config)
    }
}
