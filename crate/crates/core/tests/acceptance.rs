//! Desk-scale acceptance suite. One line per criterion, non-zero exit if any
//! fails.

use std::time::Instant;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kinetic_workbench::cli::{kernel_norm_series, young_field, KernelNormsConfig, YOUNG_TRIPLES};
use kinetic_workbench::exponents::{compute_exponents, compute_transfer, fmt_rat, rat, ProblemParams};
use kinetic_workbench::field::{Box3, Field, PhaseFn};
use kinetic_workbench::geometry::PhasePoint;
use kinetic_workbench::mollify::{kernel_integral, KernelFamily, KernelKind};
use kinetic_workbench::numerics::{loglog_slope, logspace};
use kinetic_workbench::solver::{solve, solve_forced, Nonlinearity, Solution, SolverConfig};
use kinetic_workbench::suite::{gn_box, gn_pair, representation_suite, DeGiorgiSetup, EnergySetup, SolverMms, REPRESENTATION_SAMPLES};
use kinetic_workbench::trajectory::{check_m1, wronskian, TrajectoryParams};
use kinetic_workbench::verify::{
    dyadic_h_set, end_to_end, energy_experiment, fast_convergence_lemma, gn_experiment, transfer_experiment, StartValue,
};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn random_rational(rng: &mut ChaCha8Rng, lo: &BigRational, hi: &BigRational) -> BigRational {
    let den: i64 = rng.gen_range(1..=97);
    let u = q(rng.gen_range(1..den.max(2)), den);
    lo + (hi - lo) * u
}

/// 1/q, β and 𝖰 from scratch.
fn oracle(d: i64, p: &BigRational, mu: &BigRational) -> (BigRational, Option<(BigRational, BigRational)>) {
    let one = BigRational::one();
    let dd = q(d, 1);
    let inv_q = ((q(3 * d + 1, 1) / p) + (q(d + 1, 1) / mu) - &one) / q(4 * d + 2, 1);
    let a = p.recip() - mu.recip();
    let den = q(2, 1) * (&one - &dd * &a);
    if den.is_zero() {
        return (inv_q, None);
    }
    let beta = (q(3, 1) + (&one - &dd) * &a) / den;
    let qdim = (q(2, 1) * &beta - &one) * &dd + &one;
    (inv_q, Some((beta, qdim)))
}

fn exponent_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    let mut attempts = 0;
    while checked < 1000 {
        attempts += 1;
        if attempts > 200_000 {
            return Err("could not draw 1000 admissible triples".into());
        }
        let d = rng.gen_range(1..=3i64);
        let p = random_rational(&mut rng, &q(1, 1), &q(5, 1));
        let mu = random_rational(&mut rng, &q(1, 1), &q(5, 1));
        let params = match ProblemParams::new(d as u32, p.clone(), mu.clone()) {
            Ok(x) => x,
            Err(_) => continue,
        };
        let tab = compute_exponents(&params);
        if !tab.admissible {
            continue;
        }
        let (inv_q, bq) = oracle(d, &p, &mu);
        let (beta, qdim) = bq.ok_or("oracle β undefined on an admissible triple")?;
        let from_grad = p.recip() + (BigRational::one() - &beta) / &qdim;
        let from_drift = mu.recip() + (&beta - q(2, 1)) / &qdim;
        let lib_ok = tab.inv_q == inv_q
            && tab.inv_q_from_gradient().as_ref() == Some(&inv_q)
            && tab.inv_q_from_drift().as_ref() == Some(&inv_q)
            && tab.beta.as_ref() == Some(&beta);
        if inv_q != from_grad || inv_q != from_drift || !lib_ok {
            return Ok((false, format!("mismatch at d={d} p={p} mu={mu}")));
        }
        checked += 1;
    }
    let tab = compute_exponents(&ProblemParams::new(1, rat(2, 1), rat(2, 1)).map_err(|e| e.to_string())?);
    let quadratic = tab.q == Some(q(3, 1)) && tab.beta == Some(q(3, 2));
    Ok((
        quadratic,
        format!(
            "{checked} admissible triples exact; (1,2,2) gives q={} beta={}",
            tab.q.as_ref().map(fmt_rat).unwrap_or_default(),
            tab.beta.as_ref().map(fmt_rat).unwrap_or_default()
        ),
    ))
}

fn trajectory_determinant() -> Outcome {
    let rs = logspace(1e-3, 1e3, 25);
    let mut worst: f64 = 0.0;
    for beta in [9.0 / 8.0, 1.5, 15.0 / 8.0] {
        for &r in &rs {
            let exact = -r.powf(2.0 * beta - 1.0);
            worst = worst.max((wronskian(beta, r).det() / exact - 1.0).abs());
        }
    }
    let z = PhasePoint::d1(0.2, -0.4, 0.9);
    let hs = [2e-2, 1e-2, 5e-3, 2.5e-3];
    let mut slopes = Vec::new();
    for beta in [9.0 / 8.0, 1.5, 15.0 / 8.0] {
        let params = TrajectoryParams::d1(beta, -1.5, 0.6, -0.8).map_err(|e| e.to_string())?;
        let res = hs
            .iter()
            .map(|&h| check_m1(&params, 0.7, &z, h))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| e.to_string())?;
        slopes.push(loglog_slope(&hs, &res));
    }
    let ok = worst <= 1e-10 && slopes.iter().all(|s| (s - 2.0).abs() <= 0.1);
    Ok((ok, format!("max rel det error {worst:.1e}; M1 slopes {slopes:.3?}")))
}

fn wave(t: f64, x: f64, v: f64) -> f64 {
    (0.7 * t - 0.4 * x + v).cos() + 0.3 * v * v
}

fn consistency() -> Outcome {
    let fam = KernelFamily::new(1.5, 1.0).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let zs: Vec<[f64; 3]> = (0..3).map(|_| [0; 3].map(|_| rng.gen_range(-0.5..0.5))).collect();
    let suite = representation_suite();
    let gn = gn_pair();
    let mut fields: Vec<&dyn PhaseFn> = suite.iter().map(|m| &m.f as &dyn PhaseFn).collect();
    fields.push(&gn.f);
    fields.push(&wave);
    let mut worst: f64 = 0.0;
    for f in fields {
        for &z in &zs {
            let a = fam.apply_tk_mspace(f, z).map_err(|e| e.to_string())?;
            let b = fam.apply_tk_kernel(f, z).map_err(|e| e.to_string())?;
            worst = worst.max((a - b).abs() / a.abs().max(b.abs()));
        }
    }
    let one = |_: f64, _: f64, _: f64| 1.0;
    let mass_m = (fam.apply_tk_mspace(&one, zs[0]).map_err(|e| e.to_string())? - 1.0).abs();
    let mass_k = (kernel_integral(&fam.at(KernelKind::K, 1.0), 96) - 1.0).abs();
    let ok = worst <= 1e-3 && mass_m <= 1e-6 && mass_k <= 1e-6;
    Ok((
        ok,
        format!("max rel defect {worst:.1e}; unit mass error {mass_m:.1e} (m-space) {mass_k:.1e} (kernel)"),
    ))
}

fn representation() -> Outcome {
    let fam = KernelFamily::new(1.5, 1.0).map_err(|e| e.to_string())?;
    let finer = fam.refined();
    let big = Box3::new((-3.0, 3.0), (-3.0, 3.0), (-3.0, 3.0)).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut notes = Vec::new();
    for m in representation_suite() {
        let sup = m.sup_f(big, [48; 3]).map_err(|e| e.to_string())?;
        let a = fam
            .representation_residual(&m.decomposed(), &REPRESENTATION_SAMPLES)
            .map_err(|e| e.to_string())?
            .residual;
        let b = finer
            .representation_residual(&m.decomposed(), &REPRESENTATION_SAMPLES)
            .map_err(|e| e.to_string())?
            .residual;
        ok &= a <= 1e-2 * sup && b < a;
        notes.push(format!("{} {a:.1e}->{b:.1e}", m.name));
    }
    Ok((ok, notes.join(", ")))
}

fn kernel_scaling() -> Outcome {
    let cfg = KernelNormsConfig::default();
    let series = kernel_norm_series(&cfg).map_err(|e| format!("{e:?}"))?;
    let qdim = 3.0;
    let s = 2.0 / 15.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for ser in &series {
        let (pass, note) = match ser.kind.as_str() {
            "K" => {
                let pred = qdim * (1.0 / ser.theta - 1.0);
                (
                    (ser.measured_slope - pred).abs() <= 0.05,
                    format!("K θ={} {:.3}/{pred:.3}", ser.theta, ser.measured_slope),
                )
            }
            "int_G0_weak" => {
                let hi = ser.norms.iter().cloned().fold(f64::MIN, f64::max);
                let lo = ser.norms.iter().cloned().fold(f64::MAX, f64::min);
                let spread = hi / lo - 1.0;
                (spread < 0.2, format!("weak spread {:.1}%", 100.0 * spread))
            }
            k => (
                (ser.measured_slope - s).abs() <= 0.05,
                format!("{k} {:.3}/{s:.3}", ser.measured_slope),
            ),
        };
        ok &= pass;
        notes.push(note);
    }
    Ok((ok && series.len() == 7, notes.join(", ")))
}

fn gn_invariance() -> Outcome {
    let pair = gn_pair();
    let params = ProblemParams::dual(1, rat(2, 1)).map_err(|e| e.to_string())?;
    let a = gn_experiment(&pair.decomposed(), &params, gn_box(), [64; 3]).map_err(|e| e.to_string())?;
    let b = gn_experiment(&pair.decomposed(), &params, gn_box(), [96; 3]).map_err(|e| e.to_string())?;
    let (sa, sb) = (a.scaling_spread.unwrap_or(f64::INFINITY), b.scaling_spread.unwrap_or(f64::INFINITY));
    let (ca, cb) = (a.ratio.unwrap_or(f64::NAN), b.ratio.unwrap_or(f64::NAN));
    let drift = (cb / ca - 1.0).abs();
    let ok = sa <= 1.02 && sb <= 1.02 && drift <= 0.1;
    Ok((ok, format!("spread {sa:.4} (64³) {sb:.4} (96³); C {ca:.4} -> {cb:.4}")))
}

fn young() -> Outcome {
    let fam = KernelFamily::new(1.5, 1.0).map_err(|e| e.to_string())?;
    let b = Box3::new((-2.0, 2.0), (-2.0, 2.0), (-2.0, 2.0)).map_err(|e| e.to_string())?;
    let gauss = |t: f64, x: f64, v: f64| (-(t * t + x * x + v * v)).exp();
    let gn = gn_pair();
    let fields = [
        young_field(24).map_err(|e| e.to_string())?,
        Field::from_fn(b, [16; 3], gauss).map_err(|e| e.to_string())?,
        Field::from_fn(b, [16; 3], gn.f).map_err(|e| e.to_string())?,
    ];
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for f in &fields {
        for kind in [KernelKind::K, KernelKind::G1] {
            for (th, p, qq) in YOUNG_TRIPLES {
                let y = fam.young_check(kind, 0.5, th, f, p, qq, f.shape()).map_err(|e| e.to_string())?;
                worst = worst.max(y.lhs / y.rhs);
                cases += 1;
            }
        }
    }
    Ok((worst <= 1.05, format!("{cases} cases, max lhs/rhs {worst:.3}")))
}

fn energy() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();
    for p in [1.8, 2.0, 3.0] {
        let mut cs = Vec::new();
        let mut drift: f64 = 0.0;
        for theta in [0.25, 1.0, 4.0] {
            let c = |n| -> Result<f64, String> {
                let s = EnergySetup::new(p, theta, n).map_err(|e| e.to_string())?;
                let sol = s.solve().map_err(|e| e.to_string())?;
                Ok(energy_experiment(&sol.field, p, &s.z0, theta, s.r1, s.r2)
                    .map_err(|e| e.to_string())?
                    .c_meas)
            };
            let (c32, c64) = (c(32)?, c(64)?);
            ok &= c32.is_finite() && c64.is_finite() && c64 > 0.0;
            drift = drift.max((c64 / c32 - 1.0).abs());
            cs.push(c64);
        }
        let hi = cs.iter().cloned().fold(f64::MIN, f64::max);
        let lo = cs.iter().cloned().fold(f64::MAX, f64::min);
        ok &= drift <= 0.2 && hi / lo <= 10.0;
        notes.push(format!("p={p}: refinement {:.1}%, θ-spread {:.2}", 100.0 * drift, hi / lo));
    }
    Ok((ok, notes.join("; ")))
}

fn degiorgi() -> Outcome {
    let mut worst_iter = 0;
    let mut lemma_ok = true;
    for c1 in [1.0, 10.0, 100.0] {
        for b in [2.0, 4.0, 8.0] {
            for delta in [0.2, 1.0 / 3.0, 1.0] {
                let r = fast_convergence_lemma(c1, b, delta, StartValue::Relative(1.0)).map_err(|e| e.to_string())?;
                let it = r.iterations_to_tol.unwrap_or(usize::MAX);
                lemma_ok &= it <= 60 && r.strictly_decreasing;
                worst_iter = worst_iter.max(it);
            }
        }
    }
    let mut notes = vec![format!("27 lemma points, worst {worst_iter} iterations")];
    let mut exact = true;
    let mut bounded = true;
    for p in [3.0, 1.8] {
        let s = DeGiorgiSetup::new(p, 64);
        let sol = s.solve().map_err(|e| e.to_string())?;
        let rep = end_to_end(&sol.field, p, &s.z0, s.radius, &DeGiorgiSetup::levels(), s.shape, s.n_max).map_err(|e| e.to_string())?;
        exact &= rep.runs.iter().all(|r| r.exact_checks);
        let hit = rep.runs.iter().find(|r| r.converged && r.sup_inner <= 1.0);
        bounded &= hit.is_some();
        notes.push(match hit {
            Some(r) => format!("p={p} bounded at K={:.3} (sup {:.3})", r.k, r.sup_inner),
            None => format!("p={p} never bounded"),
        });
    }
    notes.push(format!("exact inequalities {}", if exact { "hold" } else { "violated" }));
    Ok((lemma_ok && exact && bounded, notes.join("; ")))
}

fn mass_and_l2(sol: &Solution) -> (f64, bool) {
    let d = &sol.diagnostics;
    let m0 = d[0].mass;
    let drift = d.iter().map(|s| (s.mass - m0).abs() / m0.abs()).fold(0.0, f64::max);
    let monotone = d.windows(2).all(|w| w[1].l2 <= w[0].l2 * (1.0 + 1e-13));
    (drift, monotone)
}

fn solver_sanity() -> Outcome {
    let mut notes = Vec::new();
    let mut ok = true;
    let mut drift: f64 = 0.0;
    let mut monotone = true;
    for p in [1.8, 2.0, 3.0] {
        for sol in [
            EnergySetup::new(p, 1.0, 32).and_then(|s| s.solve()),
            DeGiorgiSetup::new(p, 48).solve(),
        ] {
            let (d, m) = mass_and_l2(&sol.map_err(|e| e.to_string())?);
            drift = drift.max(d);
            monotone &= m;
        }
    }
    ok &= drift <= 1e-10 && monotone;
    notes.push(format!("mass drift {drift:.1e}, L² monotone {monotone}"));

    for (p, ns) in [(3.0, [32, 64, 128]), (2.0, [64, 128, 256])] {
        let mms = SolverMms { p };
        let nl = Nonlinearity::p_laplace(p).map_err(|e| e.to_string())?;
        let mut errs = Vec::new();
        for n in ns {
            let cfg = SolverMms::config(n);
            let f0 = cfg.initial_slice(|x, v| mms.exact(0.0, x, v)).map_err(|e| e.to_string())?;
            let sol = solve_forced(&f0, &nl, &cfg, Some(&mms)).map_err(|e| e.to_string())?;
            errs.push(mms.linf_error(&sol));
        }
        let hs: Vec<f64> = ns.iter().map(|&n| 1.0 / n as f64).collect();
        let slope = loglog_slope(&hs, &errs);
        ok &= errs.windows(2).all(|w| w[1] < w[0]) && (slope - 1.0).abs() <= 0.3;
        notes.push(format!("MMS p={p} order {slope:.2}"));
    }

    let a = 0.05;
    let cfg = SolverConfig::new((0.0, 1.0), (-3.0, 3.0), 8, 128, 0.2, 8);
    let f0 = cfg.initial_slice(|_, v| (-v * v / (4.0 * a)).exp()).map_err(|e| e.to_string())?;
    let sol = solve(&f0, &Nonlinearity::p_laplace(2.0).map_err(|e| e.to_string())?, &cfg).map_err(|e| e.to_string())?;
    let sup0 = f0.max();
    let mut worst: f64 = 0.0;
    for (i, t) in sol.times().iter().enumerate() {
        let sup = sol
            .field
            .data
            .index_axis(ndarray::Axis(0), i)
            .iter()
            .cloned()
            .fold(f64::MIN, f64::max);
        let exact = (a / (a + t)).sqrt();
        worst = worst.max((sup / sup0 / exact - 1.0).abs());
    }
    ok &= worst <= 0.05;
    notes.push(format!("heat sup-decay error {:.2}%", 100.0 * worst));
    Ok((ok, notes.join("; ")))
}

fn transfer() -> Outcome {
    let pair = gn_pair();
    let grid = Box3::new((-5.0, 5.0), (-7.0, 7.0), (-5.0, 5.0)).map_err(|e| e.to_string())?;
    let hs = dyadic_h_set(2.0, 10);
    let decades = (hs[0] / hs[hs.len() - 1]).log10();
    let tab = compute_transfer(1, &rat(2, 1), &rat(5, 2));
    let s_ok = tab.s == q(2, 15);
    let a = transfer_experiment(&pair.decomposed(), &rat(2, 1), &rat(5, 2), grid, [48; 3], &hs).map_err(|e| e.to_string())?;
    let b = transfer_experiment(&pair.decomposed(), &rat(2, 1), &rat(5, 2), grid, [64; 3], &hs).map_err(|e| e.to_string())?;
    let drift = (b.c_meas / a.c_meas - 1.0).abs();
    let bounded = a.profile_bounded && b.profile_bounded && a.quotients.iter().chain(&b.quotients).all(|x| x.is_finite());
    let ok = s_ok && bounded && decades >= 2.0 && drift <= 0.2;
    Ok((
        ok,
        format!("s={} over {decades:.1} decades; C {:.4} -> {:.4}", tab.s, a.c_meas, b.c_meas),
    ))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("exponent identities", exponent_identities),
        ("trajectory determinant", trajectory_determinant),
        ("change-of-variables consistency", consistency),
        ("representation identity", representation),
        ("kernel norm scaling", kernel_scaling),
        ("GN scaling invariance", gn_invariance),
        ("Young inequality", young),
        ("energy estimate", energy),
        ("De Giorgi machinery", degiorgi),
        ("solver sanity", solver_sanity),
        ("transfer of regularity", transfer),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "criterion {:>2} {:<34} {}  [{:.1}s] {detail}",
            i + 1,
            name,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
