use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinetic_workbench::field::{Box3, Field};
use kinetic_workbench::solver::{residual, solve, Nonlinearity, Solution, SolverConfig};
use kinetic_workbench::suite::DeGiorgiSetup;

fn bump_sum(rng: &mut ChaCha8Rng) -> impl Fn(f64, f64) -> f64 + Sync {
    let bumps: Vec<[f64; 4]> = (0..4)
        .map(|_| {
            [
                rng.gen_range(0.0..2.0),
                rng.gen_range(0.0..2.0 * PI),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(1.0..6.0),
            ]
        })
        .collect();
    move |x, v| {
        bumps
            .iter()
            .map(|[a, x0, v0, c]| a * (-c * ((x - x0).sin().powi(2) + (v - v0).powi(2))).exp())
            .sum()
    }
}

fn strip(n: usize, t_end: f64) -> SolverConfig {
    SolverConfig::new((0.0, 2.0 * PI), (-4.0, 4.0), n, n, t_end, 8)
}

#[test]
fn nonnegative_data_stays_nonnegative() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for p in [1.8, 2.0, 3.0] {
        for _ in 0..3 {
            let cfg = strip(32, 0.3);
            let f0 = cfg.initial_slice(bump_sum(&mut rng)).unwrap();
            let sol = solve(&f0, &Nonlinearity::p_laplace(p).unwrap(), &cfg).unwrap();
            assert!(sol.field.min() >= 0.0, "p={p}: min {}", sol.field.min());
            assert!(sol.diagnostics.iter().all(|d| d.min >= 0.0));
        }
    }
}

/// p = 2 only: the step size does not depend on the data, so both runs share
/// one monotone linear scheme.
#[test]
fn comparison_principle_linear() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let nl = Nonlinearity::p_laplace(2.0).unwrap();
    let cfg = strip(32, 0.3);
    let low = bump_sum(&mut rng);
    let extra = bump_sum(&mut rng);
    let f0 = cfg.initial_slice(&low).unwrap();
    let g0 = cfg.initial_slice(|x, v| low(x, v) + extra(x, v)).unwrap();
    let (f, g) = (solve(&f0, &nl, &cfg).unwrap(), solve(&g0, &nl, &cfg).unwrap());
    let gap = g.field.zip_map(&f.field, |a, b| a - b).unwrap().min();
    assert!(gap >= -1e-12, "ordering violated by {gap}");
}

#[test]
fn l2_decays_for_p_laplace() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for p in [1.8, 2.0, 3.0] {
        let cfg = strip(32, 0.5);
        let f0 = cfg.initial_slice(bump_sum(&mut rng)).unwrap();
        let sol = solve(&f0, &Nonlinearity::p_laplace(p).unwrap(), &cfg).unwrap();
        let d = &sol.diagnostics;
        assert!(d.windows(2).all(|w| w[1].l2 <= w[0].l2 * (1.0 + 1e-13)), "p={p}");
        assert!(d.last().unwrap().l2 < d[0].l2);
        let m0 = d[0].mass;
        assert!(d.iter().all(|s| ((s.mass - m0) / m0).abs() < 1e-10));
    }
}

#[test]
fn transport_only_translates() {
    let n = 128;
    let cfg = SolverConfig::new((0.0, 2.0 * PI), (-1.0, 1.0), n, 8, 1.0, 8);
    let f0 = cfg.initial_slice(|x, _| (x.sin() + 1.5).powi(2)).unwrap();
    let sol = solve(&f0, &Nonlinearity::transport_only(), &cfg).unwrap();
    let (ts, xs, vs) = (sol.times(), sol.field.centers(1), sol.field.centers(2));
    let err = sol
        .field
        .data
        .indexed_iter()
        .map(|((i, j, k), u)| (u - ((xs[j] - ts[i] * vs[k]).sin() + 1.5).powi(2)).abs())
        .fold(0.0, f64::max);
    assert!(err < 0.1, "translation error {err}");
    let d = &sol.diagnostics;
    let loss = 1.0 - d.last().unwrap().l2 / d[0].l2;
    assert!((0.0..0.02).contains(&loss), "upwind L² loss {loss}");
}

/// Bilinear interpolation of slice i, periodic in x.
fn slice_at(f: &Field, i: usize, x: f64, v: f64) -> f64 {
    let [_, nx, nv] = f.shape();
    let [_, dx, dv] = f.spacing();
    let lx = f.bbox.hi[1] - f.bbox.lo[1];
    let gx = ((x - f.bbox.lo[1]).rem_euclid(lx)) / dx - 0.5;
    let gv = ((v - f.bbox.lo[2]) / dv - 0.5).clamp(0.0, (nv - 1) as f64);
    let (j0, k0) = (gx.floor(), gv.floor().min((nv - 2) as f64));
    let (a, b) = (gx - j0, gv - k0);
    let j0 = (j0 as isize).rem_euclid(nx as isize) as usize;
    let j1 = (j0 + 1) % nx;
    let k0 = k0 as usize;
    let u = |j: usize, k: usize| f.data[[i, j, k]];
    (1.0 - a) * ((1.0 - b) * u(j0, k0) + b * u(j0, k0 + 1)) + a * ((1.0 - b) * u(j1, k0) + b * u(j1, k0 + 1))
}

fn galilean_defect(n: usize, w: f64) -> f64 {
    let nl = Nonlinearity::p_laplace(3.0).unwrap();
    let cfg = SolverConfig::new((0.0, 2.0 * PI), (-4.0, 4.0), n, n, 0.5, 8);
    let datum = |x: f64, v: f64| (1.0 + 0.5 * x.cos()) * (-4.0 * v * v).exp();
    let base: Solution = solve(&cfg.initial_slice(datum).unwrap(), &nl, &cfg).unwrap();
    let boosted = solve(&cfg.initial_slice(|x, v| datum(x, v - w)).unwrap(), &nl, &cfg).unwrap();
    let (ts, xs, vs) = (boosted.times(), boosted.field.centers(1), boosted.field.centers(2));
    let sup = base.field.max_abs();
    boosted
        .field
        .data
        .indexed_iter()
        .map(|((i, j, k), u)| (u - slice_at(&base.field, i, xs[j] - ts[i] * w, vs[k] - w)).abs())
        .fold(0.0, f64::max)
        / sup
}

#[test]
fn galilean_covariance() {
    let (a, b) = (galilean_defect(32, 0.5), galilean_defect(64, 0.5));
    println!("galilean defect {a:.3e} -> {b:.3e}");
    assert!(b < a && b < 0.05, "{a} -> {b}");
}

fn smooth(t: f64, x: f64, v: f64) -> f64 {
    (1.0 + 0.3 * (0.7 * t - x + 0.5 * v).sin()) * (-(v - 0.2 * t).powi(2)).exp()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 16, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn residual_dilation_covariance(r in 0.5f64..2.0) {
        let p = 3.0;
        let nl = Nonlinearity::p_laplace(p).unwrap();
        let b = Box3::new((0.0, 1.0), (-2.0, 2.0), (-2.0, 2.0)).unwrap();
        let s = [r.powf(p), r.powf(1.0 + p), r];
        let bd = Box3::new((b.lo[0] * s[0], b.hi[0] * s[0]), (b.lo[1] * s[1], b.hi[1] * s[1]), (b.lo[2] * s[2], b.hi[2] * s[2])).unwrap();
        let shape = [8, 16, 16];
        let fr = Field::from_fn(b, shape, |t, x, v| smooth(s[0] * t, s[1] * x, s[2] * v)).unwrap();
        let f = Field::from_fn(bd, shape, smooth).unwrap();
        let (rr, rf) = (residual(&fr, &nl).unwrap(), residual(&f, &nl).unwrap());
        let scale = rf.max_abs() * r.powf(p);
        let gap = rr.zip_map(&rf, |a, c| a - r.powf(p) * c).unwrap().max_abs();
        prop_assert!(gap <= 1e-9 * scale, "gap {} at scale {}", gap, scale);
    }
}

#[test]
fn truncations_are_weak_subsolutions() {
    for n in [32, 64] {
        let setup = DeGiorgiSetup::new(3.0, n);
        let sol = setup.solve().unwrap();
        let nl = Nonlinearity::p_laplace(3.0).unwrap();
        let base = residual(&sol.field, &nl).unwrap();
        let k = 0.1 * sol.field.max();
        let w = sol.field.truncate(k);
        let res = residual(&w, &nl).unwrap();
        let (ts, xs, vs) = (w.centers(0), w.centers(1), w.centers(2));
        let phis: [&dyn Fn(f64, f64, f64) -> f64; 3] = [&|_, _, _| 1.0, &|_, x, v| (-(x * x + v * v)).exp(), &|t, x, v| {
            (1.0 - t) * (-2.0 * ((x - 0.5).powi(2) + v * v)).exp()
        }];
        for phi in phis {
            let (mut pairing, mut mass) = (0.0, 0.0);
            for ((i, j, l), rv) in res.data.indexed_iter() {
                let c = phi(ts[i], xs[j], vs[l]);
                pairing += rv * c;
                mass += (rv.abs() + base.data[[i, j, l]].abs()) * c;
            }
            println!("n={n} pairing {pairing:.3e} against {mass:.3e}");
            assert!(pairing <= 0.05 * mass, "n={n}: {pairing} vs {mass}");
        }
    }
}
