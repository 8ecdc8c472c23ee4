//! Trajectory matrices and the structural properties M1–M4.

use kinetic_workbench::geometry::PhasePoint;
use kinetic_workbench::numerics::{loglog_slope, logspace};
use kinetic_workbench::trajectory::{check_m1, check_m2_m3_m4, eval_trajectory, matrices, TrajectoryParams};

fn main() -> kinetic_workbench::Result<()> {
    let params = TrajectoryParams::d1(1.5, -1.5, 0.6, -0.8)?;
    let m = matrices(&params, 0.5)?;
    println!("W(0.5) = {:?}  det {:.6}", m.w.0, m.w.det());
    println!("A(0.5) = {:?}", m.a.0);

    let z = PhasePoint::d1(0.2, -0.4, 0.9);
    for r in [0.01, 0.1, 1.0] {
        println!("γ_{r}(z) = {:?}", eval_trajectory(&params, r, &z)?);
    }

    let rs = logspace(1e-3, 1e3, 13);
    let rep = check_m2_m3_m4(&params, &rs)?;
    println!(
        "max det error {:.2e}, M3 {:.3} {:.3}, M4 {:.3} {:.3} {:.3}",
        rep.max_det_error, rep.max_m3_col1, rep.max_m3_col2, rep.max_m4_vdot, rep.max_m4_v, rep.max_m4_x
    );

    let hs = [1e-2, 5e-3, 2.5e-3, 1.25e-3];
    let res = hs
        .iter()
        .map(|&h| check_m1(&params, 0.7, &z, h))
        .collect::<kinetic_workbench::Result<Vec<_>>>()?;
    println!("M1 residuals {res:?}, order {:.3}", loglog_slope(&hs, &res));
    Ok(())
}
