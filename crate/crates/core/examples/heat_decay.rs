//! p = 2, x-independent datum: the v-equation is the heat equation with
//! zero-flux walls, so the first cosine mode decays like e^{−(π/L)²t}.

use std::f64::consts::PI;

use kinetic_workbench::solver::{solve, Nonlinearity, SolverConfig};

fn main() -> kinetic_workbench::Result<()> {
    let (v0, v1) = (-2.0, 2.0);
    let l = v1 - v0;
    let cfg = SolverConfig::new((0.0, 1.0), (v0, v1), 8, 128, 1.0, 8);
    let f0 = cfg.initial_slice(|_, v| 1.0 + (PI * (v - v0) / l).cos())?;
    let sol = solve(&f0, &Nonlinearity::p_laplace(2.0)?, &cfg)?;

    let f = &sol.field;
    let vs = f.centers(2);
    let mode = |i: usize| {
        let num: f64 = vs
            .iter()
            .enumerate()
            .map(|(k, v)| f.data[[i, 0, k]] * (PI * (v - v0) / l).cos())
            .sum();
        let den: f64 = vs.iter().map(|v| (PI * (v - v0) / l).cos().powi(2)).sum();
        num / den
    };
    for (i, t) in sol.times().iter().enumerate() {
        let exact = (-(PI / l).powi(2) * t).exp();
        println!(
            "t={t:.4} amplitude {:.6} exact {:.6} rel.err {:.2e}",
            mode(i),
            exact,
            (mode(i) / exact - 1.0).abs()
        );
    }
    let m0 = sol.diagnostics.first().map(|d| d.mass).unwrap_or(0.0);
    let drift = sol.diagnostics.iter().map(|d| (d.mass - m0).abs()).fold(0.0, f64::max);
    println!("{} steps, mass drift {drift:.2e}", sol.diagnostics.len());
    Ok(())
}
