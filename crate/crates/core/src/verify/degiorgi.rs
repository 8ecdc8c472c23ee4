use serde::{Deserialize, Serialize};

use super::Report;
use crate::error::{invalid, Error, Result};
use crate::field::{Box3, Field};
use crate::geometry::{Cylinder, PhasePoint};
use crate::numerics::linear_slope;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DgMode {
    /// M_n = ∫ w_n^p, p ≥ 2.
    PGe2,
    /// Y_n = ∫ w_n², p < 2.
    Singular,
}

impl DgMode {
    pub fn for_p(p: f64) -> Self {
        if p >= 2.0 {
            DgMode::PGe2
        } else {
            DgMode::Singular
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCheck {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn check(n: usize, lhs: f64, rhs: f64) -> InequalityCheck {
    InequalityCheck {
        n,
        lhs,
        rhs,
        holds: lhs <= rhs * (1.0 + 1e-12) + 1e-300,
    }
}

/// Fitted single-step recursion Z_{m+1} ≤ C₁ bᵐ Z_m^{1+δ} on a subsequence.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecursionFit {
    pub c1: f64,
    pub b: f64,
    pub points: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct DeGiorgiState {
    pub mode: DgMode,
    pub p: f64,
    pub q: f64,
    /// Gap in the recursion exponent 1 + δ.
    pub delta: f64,
    pub radii: Vec<f64>,
    pub levels: Vec<f64>,
    /// M_n or Y_n depending on the mode.
    pub energies: Vec<f64>,
    pub level_set: Vec<InequalityCheck>,
    /// Hölder step ∫w_n² ≤ (∫w_n^p)^{2/p}|{w_n>0}|^{1−2/p}, then ≤ 2^{n(p−2)}M_{n−1}.
    pub l2_vs_a: Vec<(InequalityCheck, InequalityCheck)>,
    pub chebyshev: Vec<InequalityCheck>,
    /// Average of u^p (or u²) over Q_{1,2}: the measured smallness.
    pub smallness: f64,
    pub sup_inner: f64,
    pub bounded: bool,
    pub decreasing: bool,
    pub vanishing: bool,
    /// Least-squares slope of log E_{n+1} against log E_{n−1}.
    pub recursion_slope: Option<f64>,
    pub even: Option<RecursionFit>,
    pub odd: Option<RecursionFit>,
}

impl DeGiorgiState {
    pub fn exact_checks_hold(&self) -> bool {
        self.level_set.iter().all(|c| c.holds)
            && self.l2_vs_a.iter().all(|(a, b)| a.holds && b.holds)
            && self.chebyshev.iter().all(|c| c.holds)
    }

    pub fn converged(&self) -> bool {
        self.bounded && self.decreasing && self.vanishing
    }

    pub fn report(&self) -> Report {
        let mut r = Report::new("degiorgi");
        r.record("delta", self.delta);
        for (n, e) in self.energies.iter().enumerate() {
            r.record(format!("energy[{n}]"), *e);
        }
        for c in &self.level_set {
            r.check(format!("level_set[{}]", c.n), c.lhs, format!("<= {}", c.rhs), c.lhs, c.holds, 0.0);
        }
        for (a, b) in &self.l2_vs_a {
            r.check(format!("l2_holder[{}]", a.n), a.lhs, format!("<= {}", a.rhs), a.lhs, a.holds, 0.0);
            r.check(format!("l2_vs_a[{}]", b.n), b.lhs, format!("<= {}", b.rhs), b.lhs, b.holds, 0.0);
        }
        for c in &self.chebyshev {
            r.check(format!("chebyshev[{}]", c.n), c.lhs, format!("<= {}", c.rhs), c.lhs, c.holds, 0.0);
        }
        r.record("smallness", self.smallness);
        r.record("sup_inner", self.sup_inner);
        if let Some(s) = self.recursion_slope {
            r.record("recursion_slope", s);
        }
        for (name, fit) in [("even", &self.even), ("odd", &self.odd)] {
            if let Some(f) = fit {
                r.record(format!("{name}_c1"), f.c1);
                r.record(format!("{name}_b"), f.b);
            }
        }
        let c = f64::from(self.converged() as u8);
        r.check("converged", c, "reported", c, true, 0.0);
        r
    }
}

fn fit(seq: &[f64], delta: f64) -> Option<RecursionFit> {
    let pts: Vec<(f64, f64)> = seq
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[0] > 0.0 && w[1] > 0.0)
        .map(|(m, w)| (m as f64, w[1].ln() - (1.0 + delta) * w[0].ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let lb = linear_slope(&pts).max(0.0);
    let lc = pts.iter().map(|(m, rho)| rho - m * lb).fold(f64::NEG_INFINITY, f64::max);
    Some(RecursionFit {
        c1: lc.exp(),
        b: lb.exp(),
        points: pts.len(),
    })
}

/// Truncation energies and the exact grid checks of the De Giorgi cascade
/// for u on Q_{1,2}, levels k_n = 1 − 2^{−n}, radii R_n = 1 + 2^{−n}.
pub fn degiorgi_run(u: &Field, p: f64, mode: DgMode, n_max: usize) -> Result<DeGiorgiState> {
    if mode == DgMode::PGe2 && p < 2.0 || mode == DgMode::Singular && p >= 2.0 {
        return Err(invalid("mode", "p ≥ 2 runs the L^p cascade, p < 2 the L² cascade"));
    }
    if !(p > 1.0) || n_max < 2 {
        return Err(invalid("p", "need p > 1 and at least two levels"));
    }
    if u.min() < 0.0 {
        return Err(invalid("u", "must be nonnegative"));
    }
    let outer = Cylinder::at_origin(1, 1.0, 2.0, p)?;
    u.require_inside(&outer)?;
    let q = 6.0 * p / (p + 2.0);
    let delta = match mode {
        DgMode::PGe2 => 1.0 - p / q,
        DgMode::Singular => 2.0 * (p - 1.0) / p - 2.0 / q,
    };
    let radii: Vec<f64> = (0..=n_max).map(|n| 1.0 + 0.5f64.powi(n as i32)).collect();
    let levels: Vec<f64> = (0..=n_max).map(|n| 1.0 - 0.5f64.powi(n as i32)).collect();
    let cyls = radii
        .iter()
        .map(|&r| Cylinder::at_origin(1, 1.0, r, p))
        .collect::<Result<Vec<_>>>()?;
    let cv = u.cell_volume();
    // cell list restricted to Q_{1,2}: (u, index of the smallest R_n containing it)
    let mut cells: Vec<(f64, usize)> = Vec::new();
    for ((i, j, k), &val) in u.data.indexed_iter() {
        let (t, x, v) = (u.center(0, i), u.center(1, j), u.center(2, k));
        if !outer.contains_1d(t, x, v) {
            continue;
        }
        let deepest = (0..=n_max).rev().find(|&n| cyls[n].contains_1d(t, x, v)).unwrap_or(0);
        cells.push((val, deepest));
    }
    if cells.is_empty() {
        return Err(Error::EmptyRegion);
    }
    // cell is in Q_{1,R_n} iff n ≤ deepest
    let int_over = |n: usize, g: &dyn Fn(f64) -> f64| -> f64 { cells.iter().filter(|c| c.1 >= n).map(|c| g(c.0)).sum::<f64>() * cv };
    let w = |n: usize| {
        let k = levels[n];
        move |x: f64| (x - k).max(0.0)
    };
    let m: Vec<f64> = (0..=n_max).map(|n| int_over(n, &|x| w(n)(x).powf(p))).collect();
    let y: Vec<f64> = (0..=n_max).map(|n| int_over(n, &|x| w(n)(x).powi(2))).collect();
    let energies = match mode {
        DgMode::PGe2 => m.clone(),
        DgMode::Singular => y.clone(),
    };

    let mut level_set = Vec::new();
    let mut chebyshev = Vec::new();
    for n in 0..n_max {
        let e = int_over(n + 1, &|x| if x > levels[n + 1] { 1.0 } else { 0.0 });
        level_set.push(check(n, e, 2f64.powf(p * (n + 1) as f64) * m[n]));
        let dn = 0.5f64.powi(n as i32 + 1);
        let wn = w(n);
        let c = int_over(n + 1, &|x| if wn(x) >= dn { 1.0 } else { 0.0 });
        chebyshev.push(check(n, c, y[n] / (dn * dn)));
    }
    let mut l2_vs_a = Vec::new();
    if p >= 2.0 {
        for n in 1..=n_max {
            let wn = w(n);
            let lhs = int_over(n - 1, &|x| wn(x).powi(2));
            let ip = int_over(n - 1, &|x| wn(x).powf(p));
            let pos = int_over(n - 1, &|x| if wn(x) > 0.0 { 1.0 } else { 0.0 });
            let mid = ip.powf(2.0 / p) * pos.powf(1.0 - 2.0 / p);
            l2_vs_a.push((check(n, lhs, mid), check(n, mid, 2f64.powf(n as f64 * (p - 2.0)) * m[n - 1])));
        }
    }

    let smallness = match mode {
        DgMode::PGe2 => int_over(0, &|x| x.powf(p)),
        DgMode::Singular => int_over(0, &|x| x * x),
    } / int_over(0, &|_| 1.0);
    let inner = Cylinder::at_origin(1, 1.0, 1.0, p)?;
    let sup_inner = u.sup_in(&inner)?;
    let decreasing = energies.windows(2).all(|w| w[1] <= w[0]);
    let last = *energies.last().expect("n_max ≥ 2");
    let vanishing = last == 0.0 || last <= 1e-6 * energies[0];
    let pts: Vec<(f64, f64)> = (1..n_max)
        .filter(|&n| energies[n - 1] > 0.0 && energies[n - 1] < 1.0 && energies[n + 1] > 0.0)
        .map(|n| (energies[n - 1].ln(), energies[n + 1].ln()))
        .collect();
    let recursion_slope = (pts.len() >= 2).then(|| linear_slope(&pts));
    let even: Vec<f64> = energies.iter().step_by(2).cloned().collect();
    let odd: Vec<f64> = energies.iter().skip(1).step_by(2).cloned().collect();
    Ok(DeGiorgiState {
        mode,
        p,
        q,
        delta,
        radii,
        levels,
        energies,
        level_set,
        l2_vs_a,
        chebyshev,
        smallness,
        sup_inner,
        bounded: sup_inner <= 1.0,
        decreasing,
        vanishing,
        recursion_slope,
        even: fit(&even, delta),
        odd: fit(&odd, delta),
    })
}

/// Y₀ either as an absolute value or as a multiple of the threshold δ₀.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartValue {
    Absolute(f64),
    Relative(f64),
}

#[derive(Clone, Debug, Serialize)]
pub struct FastLemma {
    pub c1: f64,
    pub b: f64,
    pub delta: f64,
    pub delta0: f64,
    pub y0: f64,
    /// log₁₀ Y_m; −∞ for Y_m = 0.
    pub log10_trace: Vec<f64>,
    pub converged: bool,
    pub iterations_to_tol: Option<usize>,
    /// Y_{m+1} < Y_m for every m ≥ 1 in the trace.
    pub strictly_decreasing: bool,
}

pub const FAST_TOL: f64 = 1e-12;
pub const FAST_MAX_ITER: usize = 200;

/// Iterates Y_{m+1} = C₁ bᵐ Y_m^{1+δ} through Z_m = Y_m / (δ₀ b^{−m/δ}),
/// which obeys Z_{m+1} = Z_m^{1+δ}; δ₀ = C₁^{−1/δ} b^{−1/δ²}.
pub fn fast_convergence_lemma(c1: f64, b: f64, delta: f64, start: StartValue) -> Result<FastLemma> {
    if !(c1 > 0.0 && b > 1.0 && delta > 0.0) || !(c1.is_finite() && b.is_finite() && delta.is_finite()) {
        return Err(invalid("constants", "need C1 > 0, b > 1, delta > 0"));
    }
    let ln_d0 = -c1.ln() / delta - b.ln() / (delta * delta);
    let delta0 = ln_d0.exp();
    let ln_z0 = match start {
        StartValue::Absolute(y) if y >= 0.0 => y.ln() - ln_d0,
        StartValue::Relative(z) if z >= 0.0 => z.ln(),
        _ => return Err(invalid("Y0", "must be nonnegative")),
    };
    let y0 = (ln_d0 + ln_z0).exp();
    let ln_tol = FAST_TOL.ln();
    let mut ln_z = ln_z0;
    let mut log10_trace = Vec::with_capacity(FAST_MAX_ITER + 1);
    let mut iterations_to_tol = None;
    for m in 0..=FAST_MAX_ITER {
        let ln_y = ln_d0 - m as f64 * b.ln() / delta + ln_z;
        log10_trace.push(ln_y / std::f64::consts::LN_10);
        if iterations_to_tol.is_none() && ln_y < ln_tol {
            iterations_to_tol = Some(m);
        }
        if ln_z > 700.0 {
            break;
        }
        ln_z *= 1.0 + delta;
    }
    let converged = iterations_to_tol.is_some();
    if ln_z0 <= 0.0 && !converged {
        return Err(Error::Numerical("Y0 ≤ δ0 but the recursion did not converge".into()));
    }
    let strictly_decreasing = log10_trace
        .iter()
        .skip(1)
        .collect::<Vec<_>>()
        .windows(2)
        .all(|w| w[1] < w[0] || *w[0] == f64::NEG_INFINITY);
    Ok(FastLemma {
        c1,
        b,
        delta,
        delta0,
        y0,
        log10_trace,
        converged,
        iterations_to_tol,
        strictly_decreasing,
    })
}

impl FastLemma {
    pub fn report(&self) -> Report {
        let mut r = Report::new("fast-lemma");
        r.record("delta0", self.delta0);
        r.record("Y0", self.y0);
        for (m, l) in self.log10_trace.iter().enumerate() {
            r.record(format!("log10_Y[{m}]"), *l);
        }
        let c = f64::from(self.converged as u8);
        let below = self.y0 <= self.delta0 * (1.0 + 1e-12);
        let pred = if below { "1 (Y0 <= delta0)" } else { "unconstrained (Y0 > delta0)" };
        r.check("converged", c, pred, c, !below || self.converged, 0.0);
        r
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct EndToEndRun {
    pub k: f64,
    pub theta: f64,
    pub smallness: f64,
    pub sup_inner: f64,
    pub converged: bool,
    pub exact_checks: bool,
    pub energies: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct EndToEndReport {
    pub mode: DgMode,
    pub p: f64,
    pub runs: Vec<EndToEndRun>,
    /// Smallest tried K whose cascade converged with sup_{Q_{1,1}} u ≤ 1.
    pub smallest_k: Option<f64>,
    /// Largest smallness value among converged runs: an empirically sufficient ε₀.
    pub eps0_empirical: Option<f64>,
}

/// solve → intrinsic rescaling about z₀ at scale R with Θ = K^{2−p} →
/// De Giorgi cascade, for each candidate level K.
pub fn end_to_end(f: &Field, p: f64, z0: &PhasePoint, r: f64, ks: &[f64], shape: [usize; 3], n_max: usize) -> Result<EndToEndReport> {
    let mode = DgMode::for_p(p);
    let target = Box3::from_ranges(Cylinder::at_origin(1, 1.0, 2.0, p)?.bounding_box_1d())?;
    let mut runs = Vec::new();
    for &k in ks {
        let u = f.intrinsic_rescale_about(k, p, z0, r, target, shape)?.map(|x| x.max(0.0));
        let st = degiorgi_run(&u, p, mode, n_max)?;
        runs.push(EndToEndRun {
            k,
            theta: k.powf(2.0 - p),
            smallness: st.smallness,
            sup_inner: st.sup_inner,
            converged: st.converged(),
            exact_checks: st.exact_checks_hold(),
            energies: st.energies.clone(),
        });
    }
    let ok: Vec<&EndToEndRun> = runs.iter().filter(|r| r.converged).collect();
    Ok(EndToEndReport {
        mode,
        p,
        smallest_k: ok.iter().map(|r| r.k).reduce(f64::min),
        eps0_empirical: ok.iter().map(|r| r.smallness).reduce(f64::max),
        runs,
    })
}

impl EndToEndReport {
    pub fn report(&self) -> Report {
        let mut r = Report::new("degiorgi-end-to-end");
        for run in &self.runs {
            r.record(format!("smallness[K={}]", run.k), run.smallness);
            r.record(format!("sup_inner[K={}]", run.k), run.sup_inner);
            let c = f64::from(run.exact_checks as u8);
            r.check(format!("exact_checks[K={}]", run.k), c, "1", c, run.exact_checks, 0.0);
        }
        let found = self.smallest_k.is_some();
        r.check("bounded_run_found", f64::from(found as u8), "1", f64::from(found as u8), found, 0.0);
        if let Some(e) = self.eps0_empirical {
            r.record("eps0_empirical", e);
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_q2(p: f64) -> Box3 {
        Box3::from_ranges(Cylinder::at_origin(1, 1.0, 2.0, p).unwrap().bounding_box_1d()).unwrap()
    }

    #[test]
    fn zero_has_zero_energies() {
        let u = Field::zeros(box_q2(3.0), [16, 24, 16]).unwrap();
        let s = degiorgi_run(&u, 3.0, DgMode::PGe2, 8).unwrap();
        assert!(s.energies.iter().all(|&e| e == 0.0));
        assert!(s.converged() && s.exact_checks_hold());
    }

    #[test]
    fn constant_two_level_sets_by_counting() {
        let u = Field::from_fn(box_q2(2.5), [16, 24, 16], |_, _, _| 2.0).unwrap();
        let s = degiorgi_run(&u, 2.5, DgMode::PGe2, 12).unwrap();
        assert!(s.exact_checks_hold());
        assert!(!s.bounded);
        let q = Cylinder::at_origin(1, 1.0, s.radii[1], 2.5).unwrap();
        assert_eq!(s.level_set[0].lhs, u.region_measure(Some(&q)));
    }

    #[test]
    fn mode_must_match_p() {
        let u = Field::zeros(box_q2(1.8), [16, 16, 16]).unwrap();
        assert!(degiorgi_run(&u, 1.8, DgMode::PGe2, 4).is_err());
    }

    #[test]
    fn fast_lemma_example() {
        let r = fast_convergence_lemma(1.0, 2.0, 1.0, StartValue::Absolute(0.5)).unwrap();
        assert!((r.delta0 - 0.5).abs() < 1e-15);
        assert!(r.converged && r.strictly_decreasing);
        // Y_m = 2^{−(m+1)} from the direct recursion
        let mut y: f64 = 0.5;
        for m in 0..30 {
            assert!((r.log10_trace[m] - y.log10()).abs() < 1e-9, "{m}");
            y = 2f64.powi(m as i32) * y * y;
        }
    }

    #[test]
    fn fast_lemma_trivial_and_invalid() {
        let r = fast_convergence_lemma(3.0, 2.0, 0.5, StartValue::Absolute(0.0)).unwrap();
        assert!(r.converged && r.iterations_to_tol == Some(0));
        assert!(fast_convergence_lemma(1.0, 1.0, 1.0, StartValue::Relative(1.0)).is_err());
    }
}
