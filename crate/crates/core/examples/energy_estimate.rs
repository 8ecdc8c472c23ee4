//! Caccioppoli and localized gain of integrability on solver output.

use kinetic_workbench::suite::EnergySetup;
use kinetic_workbench::verify::{energy_experiment, localized_gain_experiment};

fn main() -> kinetic_workbench::Result<()> {
    for p in [1.8, 2.0, 3.0] {
        for theta in [0.25, 1.0, 4.0] {
            let s = EnergySetup::new(p, theta, 32)?;
            let sol = s.solve()?;
            let e = energy_experiment(&sol.field, p, &s.z0, theta, s.r1, s.r2)?;
            let g = localized_gain_experiment(&sol.field, p, &s.z0, theta, s.r1, s.r2)?;
            println!(
                "p={p} θ={theta:<5} lhs {:.4} rhs {:.3} C_energy {:.4}  C_gain {:.4}",
                e.lhs,
                e.rhs_l2 + e.rhs_lp,
                e.c_meas,
                g.c_meas
            );
        }
    }
    Ok(())
}
