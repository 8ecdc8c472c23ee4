//! Scaling of the trajectory kernels in L^θ and weak L^θ.

use kinetic_workbench::cli::{kernel_norm_series, KernelNormsConfig};

fn main() {
    let cfg = KernelNormsConfig::default();
    let series = match kernel_norm_series(&cfg) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{e:?}");
            std::process::exit(1);
        }
    };
    for s in series {
        println!(
            "{:<20} θ={:<8.4} slope {:>8.4} (predicted {:>8.4}) {}",
            s.kind,
            s.theta,
            s.measured_slope,
            s.predicted_slope,
            if s.pass { "ok" } else { "off" }
        );
    }
}
