//! Unit mass, m-space vs kernel consistency, the representation identity
//! and Young's inequality for the mollified trajectory kernels.

use kinetic_workbench::cli::{young_field, YOUNG_TRIPLES};
use kinetic_workbench::mollify::{KernelFamily, KernelKind};
use kinetic_workbench::suite::{representation_suite, REPRESENTATION_SAMPLES};

fn main() -> kinetic_workbench::Result<()> {
    let fam = KernelFamily::new(1.5, 1.0)?;

    let one = |_: f64, _: f64, _: f64| 1.0;
    let z = [0.1, -0.2, 0.3];
    println!(
        "T_K 1 = {:.12} (m-space), {:.9} (kernel)",
        fam.apply_tk_mspace(&one, z)?,
        fam.apply_tk_kernel(&one, z)?
    );

    for m in representation_suite() {
        let r = fam.representation_residual(&m.decomposed(), &REPRESENTATION_SAMPLES)?;
        let fine = fam.refined().representation_residual(&m.decomposed(), &REPRESENTATION_SAMPLES)?;
        println!(
            "{:<12} residual {:.2e} -> {:.2e} refined, consistency {:.2e}",
            m.name, r.residual, fine.residual, r.consistency_defect
        );
    }

    let f = young_field(16)?;
    for (th, p, q) in YOUNG_TRIPLES {
        let y = fam.young_check(KernelKind::K, 0.5, th, &f, p, q, [16; 3])?;
        println!("Young θ={th:.3} p={p} q={q}: ‖T f‖_q / ‖K‖_θ‖f‖_p = {:.3}", y.lhs / y.rhs);
    }
    Ok(())
}
