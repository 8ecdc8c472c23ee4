//! Kinetic Gagliardo–Nirenberg ratio and its invariance under the two
//! scaling families.

use kinetic_workbench::exponents::{rat, ProblemParams};
use kinetic_workbench::suite::{gn_box, gn_pair};
use kinetic_workbench::verify::gn_experiment;

fn main() -> kinetic_workbench::Result<()> {
    let pair = gn_pair();
    let params = ProblemParams::dual(1, rat(2, 1))?;
    for n in [48, 64, 96] {
        let r = gn_experiment(&pair.decomposed(), &params, gn_box(), [n; 3])?;
        println!(
            "n={n:<3} q={} alpha={:.4} ratio {:.5} spread {:.4}",
            r.q,
            r.alpha,
            r.ratio.unwrap_or(f64::NAN),
            r.scaling_spread.unwrap_or(f64::NAN)
        );
        if n == 96 {
            for s in &r.rescalings {
                println!("  λ={} ν={} ratio {:.5}", s.lambda, s.nu, s.ratio);
            }
        }
    }
    Ok(())
}
