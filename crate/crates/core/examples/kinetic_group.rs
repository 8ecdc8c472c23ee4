//! Group law, dilations, cylinders and the cutoff family.

use kinetic_workbench::geometry::{build_cutoffs, dilate, group_compose, group_inverse, Cylinder, PhasePoint};

fn main() -> kinetic_workbench::Result<()> {
    let a = PhasePoint::d1(0.3, -1.2, 0.7);
    let b = PhasePoint::d1(-0.5, 0.4, 2.0);
    let ab = group_compose(&a, &b)?;
    println!("a∘b = {ab:?}");
    let e = group_compose(&a, &group_inverse(&a))?;
    println!("a∘a⁻¹ = {e:?}");

    let p = 3.0;
    for r in [0.5, 2.0] {
        println!("δ_{r} a = {:?}", dilate(&a, r, p)?);
    }

    let z0 = PhasePoint::d1(1.0, 0.0, 0.0);
    let q = Cylinder::new(z0.clone(), 0.5, 1.0, p)?;
    println!("Q: duration {} x-radius {} volume {}", q.duration(), q.x_radius(), q.volume());
    println!("bounding box {:?}", q.bounding_box_1d());
    println!("contains z0: {}", q.contains(&z0));

    let cut = build_cutoffs(0.5, 1.0, 1.5, p)?;
    println!(
        "Γ_t={:.4} Γ_v={:.4} measured C_t={:.3} C_v={:.3}",
        cut.gamma_t, cut.gamma_v, cut.measured_c_t, cut.measured_c_v
    );
    for (t, x, v) in [(0.0, 0.0, 0.0), (-0.6, 0.3, 0.5), (-1.0, 2.0, 1.4)] {
        let s = cut.sample_1d(t, x, v);
        println!("χ({t}, {x}, {v}) = {:.4}  transport {:.4}  ∂_v {:.4}", s.chi, s.transport, s.grad_v);
    }
    Ok(())
}
