//! Y_{m+1} = C₁ bᵐ Y_m^{1+δ} started at the threshold δ₀ and just above it.

use kinetic_workbench::verify::{fast_convergence_lemma, StartValue};

fn main() -> kinetic_workbench::Result<()> {
    for (c1, b, delta) in [(1.0, 2.0, 1.0), (10.0, 4.0, 1.0 / 3.0), (100.0, 8.0, 0.2)] {
        for start in [StartValue::Relative(1.0), StartValue::Relative(0.5), StartValue::Relative(1.01)] {
            let r = fast_convergence_lemma(c1, b, delta, start)?;
            println!(
                "C1={c1:<5} b={b} δ={delta:.3} Y0={:?}: δ0={:.3e} converged {} after {:?} steps, decreasing {}",
                start, r.delta0, r.converged, r.iterations_to_tol, r.strictly_decreasing
            );
        }
    }
    Ok(())
}
