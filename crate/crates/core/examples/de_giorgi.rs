//! Solve, rescale intrinsically about z₀ and run the De Giorgi cascade for
//! a range of levels K.

use kinetic_workbench::suite::DeGiorgiSetup;
use kinetic_workbench::verify::end_to_end;

fn main() -> kinetic_workbench::Result<()> {
    for p in [3.0, 1.8] {
        let s = DeGiorgiSetup::new(p, 64);
        let sol = s.solve()?;
        let rep = end_to_end(&sol.field, p, &s.z0, s.radius, &DeGiorgiSetup::levels(), s.shape, s.n_max)?;
        println!("p={p} mode {:?}", rep.mode);
        for r in &rep.runs {
            println!(
                "  K={:<8.4} smallness {:<10.4e} sup {:<8.4} exact {} converged {}",
                r.k, r.smallness, r.sup_inner, r.exact_checks, r.converged
            );
        }
        println!("  smallest K {:?}, empirical ε₀ {:?}", rep.smallest_k, rep.eps0_empirical);
    }
    Ok(())
}
