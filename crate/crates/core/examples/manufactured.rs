//! Convergence of the solver against a forced exact solution.

use kinetic_workbench::numerics::loglog_slope;
use kinetic_workbench::solver::{solve_forced, Nonlinearity};
use kinetic_workbench::suite::SolverMms;

fn main() -> kinetic_workbench::Result<()> {
    for (p, ns) in [(3.0, [32, 64, 128]), (2.0, [64, 128, 256])] {
        let mms = SolverMms { p };
        let nl = Nonlinearity::p_laplace(p)?;
        let mut hs = Vec::new();
        let mut errs = Vec::new();
        for n in ns {
            let cfg = SolverMms::config(n);
            let f0 = cfg.initial_slice(|x, v| mms.exact(0.0, x, v))?;
            let sol = solve_forced(&f0, &nl, &cfg, Some(&mms))?;
            let e = mms.linf_error(&sol);
            println!("p={p} n={n:<4} error {e:.3e}");
            hs.push(1.0 / n as f64);
            errs.push(e);
        }
        println!("p={p} observed order {:.3}", loglog_slope(&hs, &errs));
    }
    Ok(())
}
