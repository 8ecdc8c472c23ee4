//! Transfer of regularity: x-difference quotients against the Besov bound.

use kinetic_workbench::exponents::rat;
use kinetic_workbench::field::Box3;
use kinetic_workbench::suite::gn_pair;
use kinetic_workbench::verify::{dyadic_h_set, transfer_experiment};

fn main() -> kinetic_workbench::Result<()> {
    let pair = gn_pair();
    let grid = Box3::new((-5.0, 5.0), (-7.0, 7.0), (-5.0, 5.0))?;
    let hs = dyadic_h_set(2.0, 10);
    for n in [48, 64] {
        let r = transfer_experiment(&pair.decomposed(), &rat(2, 1), &rat(5, 2), grid, [n; 3], &hs)?;
        println!(
            "n={n} s={:.4} alpha={:.4} besov {:.4} rhs {:.4} C {:.4} bounded {}",
            r.s, r.alpha, r.besov, r.rhs, r.c_meas, r.profile_bounded
        );
        for (h, q) in r.h_set.iter().zip(&r.quotients) {
            println!("  h={h:<10} ‖Δ_h f‖/h^s = {q:.4}");
        }
    }
    Ok(())
}
