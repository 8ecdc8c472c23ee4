//! Exponent table for a few (p, μ) pairs, exact rational arithmetic.

use kinetic_workbench::exponents::{compute_exponents, compute_transfer, degiorgi_exponents, fmt_rat, rat, ProblemParams};

fn show(label: &str, r: &Option<kinetic_workbench::exponents::Rational>) -> String {
    format!("{label}={}", r.as_ref().map(fmt_rat).unwrap_or_else(|| "-".into()))
}

fn main() -> kinetic_workbench::Result<()> {
    for (p, mu) in [(rat(2, 1), rat(2, 1)), (rat(3, 1), rat(3, 2)), (rat(9, 5), rat(9, 4))] {
        let tab = compute_exponents(&ProblemParams::new(1, p.clone(), mu.clone())?);
        println!(
            "p={} mu={}: {} {} {} {} {} {} qbar={} alpha={} admissible={}",
            fmt_rat(&p),
            fmt_rat(&mu),
            show("q", &tab.q),
            show("beta", &tab.beta),
            show("Q", &tab.qdim),
            show("theta0", &tab.theta0),
            show("theta1", &tab.theta1),
            show("thetav", &tab.thetav),
            fmt_rat(&tab.qbar),
            fmt_rat(&tab.alpha),
            tab.admissible
        );
        if !tab.reasons.is_empty() {
            println!("  reasons: {:?}", tab.reasons);
        }
    }

    let tr = compute_transfer(1, &rat(2, 1), &rat(5, 2));
    println!(
        "transfer p=2 q=5/2: s={} alpha_s={} valid={}",
        fmt_rat(&tr.s),
        fmt_rat(&tr.alpha_s),
        tr.valid
    );

    let dg = degiorgi_exponents(1, &rat(3, 1));
    println!("de giorgi p=3: {dg:?}");
    Ok(())
}
