use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

use kinetic_workbench::exponents::{compute_exponents, compute_transfer, p_admissible_window, ProblemParams, Rational};
use kinetic_workbench::geometry::{dilate, group_compose, group_inverse, Cylinder, PhasePoint};

fn cfg() -> ProptestConfig {
    ProptestConfig {
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn point(d: usize) -> impl Strategy<Value = PhasePoint> {
    (
        -10.0f64..10.0,
        prop::collection::vec(-10.0f64..10.0, d),
        prop::collection::vec(-10.0f64..10.0, d),
    )
        .prop_map(|(t, x, v)| PhasePoint::new(t, &x, &v).unwrap())
}

fn triple() -> impl Strategy<Value = (PhasePoint, PhasePoint, PhasePoint)> {
    (1usize..=3).prop_flat_map(|d| (point(d), point(d), point(d)))
}

/// Multiples of 1/8 keep every group operation exact in f64.
fn dyadic() -> impl Strategy<Value = PhasePoint> {
    (-16i32..16, -64i32..64, -16i32..16).prop_map(|(t, x, v)| PhasePoint::d1(t as f64 / 8.0, x as f64 / 8.0, v as f64 / 8.0))
}

fn frac(lo: &Rational, hi: &Rational, k: i64, n: i64) -> Rational {
    lo + (hi - lo) * BigRational::new(k.into(), n.into())
}

fn in_window() -> impl Strategy<Value = (u32, Rational, Rational)> {
    (1u32..=3, 1i64..64, 1i64..64, 1i64..64).prop_map(|(d, k, j, n)| {
        let (lo, hi) = p_admissible_window(d);
        let p = frac(&lo, &hi, k.min(n - 1).max(1), n.max(2));
        let mu = frac(&lo, &hi, j.min(n - 1).max(1), n.max(2));
        (d, p, mu)
    })
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn associativity((a, b, c) in triple()) {
        let l = group_compose(&group_compose(&a, &b).unwrap(), &c).unwrap();
        let r = group_compose(&a, &group_compose(&b, &c).unwrap()).unwrap();
        prop_assert!(l.max_abs_diff(&r) <= 1e-12 * (1.0 + l.max_abs_diff(&PhasePoint::origin(a.dim()))));
    }

    #[test]
    fn inverse_both_sides((a, _, _) in triple()) {
        let e = PhasePoint::origin(a.dim());
        let inv = group_inverse(&a);
        prop_assert!(group_compose(&a, &inv).unwrap().max_abs_diff(&e) <= 1e-12);
        prop_assert!(group_compose(&inv, &a).unwrap().max_abs_diff(&e) <= 1e-12);
        prop_assert!(group_compose(&a, &e).unwrap().max_abs_diff(&a) == 0.0);
    }

    #[test]
    fn dilations_are_automorphisms((a, b, _) in triple(), r in 0.25f64..4.0, s in 0.25f64..4.0, p in 1.1f64..4.0) {
        let lhs = dilate(&group_compose(&a, &b).unwrap(), r, p).unwrap();
        let rhs = group_compose(&dilate(&a, r, p).unwrap(), &dilate(&b, r, p).unwrap()).unwrap();
        let scale = 1.0 + lhs.max_abs_diff(&PhasePoint::origin(a.dim()));
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * scale);
        let twice = dilate(&dilate(&a, r, p).unwrap(), s, p).unwrap();
        let once = dilate(&a, r * s, p).unwrap();
        prop_assert!(twice.max_abs_diff(&once) <= 1e-12 * (1.0 + once.max_abs_diff(&PhasePoint::origin(a.dim()))));
    }

    #[test]
    fn cylinder_membership_is_left_invariant(z0 in dyadic(), z in dyadic(), th in 1i32..16, r in 1i32..16) {
        let (theta, radius) = (th as f64 / 4.0, r as f64 / 4.0);
        let at = Cylinder::new(z0.clone(), theta, radius, 2.0).unwrap();
        let origin = Cylinder::at_origin(1, theta, radius, 2.0).unwrap();
        let moved = group_compose(&group_inverse(&z0), &z).unwrap();
        prop_assert_eq!(at.contains(&z), origin.contains(&moved));
    }

    #[test]
    fn admissible_exponents_are_consistent((d, p, mu) in in_window()) {
        let tab = compute_exponents(&ProblemParams::new(d, p.clone(), mu.clone()).unwrap());
        prop_assume!(tab.admissible);
        let (rl, rn) = tab.scaling_residuals();
        prop_assert!(rl.is_zero() && rn.is_zero());
        prop_assert!(tab.q_beats_p_and_mu());
        prop_assert!(tab.beta_in_window());
        prop_assert!(tab.alpha > Rational::zero() && tab.alpha < Rational::one());
        prop_assert_eq!(tab.inv_q_from_gradient(), Some(tab.inv_q.clone()));
        prop_assert_eq!(tab.inv_q_from_drift(), Some(tab.inv_q.clone()));
    }

    #[test]
    fn transfer_exponents_balance((d, p, _) in in_window(), k in 1i64..32) {
        let lo = std::cmp::max(p.clone(), p.clone() / (p.clone() - Rational::one()));
        let qbar = &p * Rational::from_integer((4 * d as i64 + 2).into()) / (Rational::from_integer((d as i64).into()) * (&p + Rational::from_integer(2.into())));
        prop_assume!(lo < qbar);
        let q = frac(&lo, &qbar, k, 32);
        let tt = compute_transfer(d, &p, &q);
        prop_assert!(tt.valid, "{:?}", tt.reasons);
        prop_assert_eq!(&tt.alpha_s, &tt.alpha_s_direct);
        let (rl, rn) = tt.scaling_residuals();
        prop_assert!(rl.is_zero() && rn.is_zero());
        prop_assert!(tt.s > Rational::zero());
        // Each kernel exponent makes its difference-norm scale like |h|^s.
        let (b, qd) = (tt.beta.clone().unwrap(), tt.qdim.clone().unwrap());
        let two = Rational::from_integer(2.into());
        let one = Rational::one();
        let slope = |shift: Rational, th: &Rational| (shift - &qd + &qd / th) / &b;
        prop_assert_eq!(slope(&two - &b, tt.theta0_s.as_ref().unwrap()), tt.s.clone());
        prop_assert_eq!(slope(one.clone(), tt.theta1_s.as_ref().unwrap()), tt.s.clone());
        prop_assert_eq!(slope(&b - &one, tt.thetav_s.as_ref().unwrap()), tt.s.clone());
    }
}
