use num_complex::Complex;
use proptest::prelude::*;
use pseudoellipsoid::analysis::multinomial_bound_check;
use pseudoellipsoid::geometry::{
    eval_rho, hessian_q, hessian_q_closed, inner_wz, project_to_boundary, BlockedVector,
    SourceSignature,
};
use pseudoellipsoid::harmonic::{poisson_pair, ConjugatePairConfig};
use pseudoellipsoid::Tolerances;

fn signatures() -> impl Strategy<Value = SourceSignature> {
    prop_oneof![
        Just(SourceSignature::new(vec![1, 1], vec![2]).unwrap()),
        Just(SourceSignature::new(vec![2, 1], vec![3]).unwrap()),
        Just(SourceSignature::new(vec![1, 2, 1], vec![2, 3]).unwrap()),
    ]
}

fn vector(sig: &SourceSignature, raw: &[(f64, f64)]) -> BlockedVector<f64> {
    let data = raw.iter().take(sig.dim()).map(|&(a, b)| Complex::new(a, b)).collect();
    sig.point(data).unwrap()
}

fn raw() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 4)
}

fn complex_vec(n: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| Complex::new(a, b)).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_lands_on_boundary_along_the_ray(sig in signatures(), d in raw()) {
        let dir = vector(&sig, &d);
        prop_assume!(dir.norm() > 1e-3);
        let tol = Tolerances::default();
        let w = project_to_boundary(&sig, &dir, &tol).unwrap();
        prop_assert!(eval_rho(&sig, &w).unwrap().abs() < 1e-12);
        let c = w.norm() / dir.norm();
        prop_assert!(w.sub(&dir.scale(c)).norm() < 1e-10);
    }

    #[test]
    fn boundary_inner_product_is_affine(
        sig in signatures(), d in raw(), z1 in raw(), z2 in raw(), s in -2.0..2.0f64
    ) {
        let dir = vector(&sig, &d);
        prop_assume!(dir.norm() > 1e-3);
        let tol = Tolerances::default();
        let w = project_to_boundary(&sig, &dir, &tol).unwrap();
        let (a, b) = (vector(&sig, &z1), vector(&sig, &z2));
        let mixed = inner_wz(&sig, &w, &a.scale(s).add(&b.scale(1.0 - s)), &tol).unwrap();
        let split = inner_wz(&sig, &w, &a, &tol).unwrap() * s
            + inner_wz(&sig, &w, &b, &tol).unwrap() * (1.0 - s);
        prop_assert!((mixed - split).norm() < 1e-12);
        // Z = W gives zero.
        prop_assert!(inner_wz(&sig, &w, &w, &tol).unwrap().norm() < 1e-12);
    }

    #[test]
    fn hessian_forms_agree(sig in signatures(), z in raw(), v in raw()) {
        let (z, v) = (vector(&sig, &z), vector(&sig, &v));
        let general = hessian_q(&sig, &z, &v).unwrap();
        let closed = hessian_q_closed(&sig, &z, &v).unwrap();
        prop_assert!((general - closed).abs() < 1e-10 * (1.0 + general.abs()));
        // Second difference of ρ along v is twice Q.
        let h = 1e-4;
        let rho = |t: f64| eval_rho(&sig, &z.add(&v.scale(t))).unwrap();
        let fd = (rho(h) - 2.0 * rho(0.0) + rho(-h)) / (h * h);
        prop_assert!((2.0 * general - fd).abs() < 1e-4 * (1.0 + fd.abs()));
    }

    #[test]
    fn multinomial_bound_holds(
        f in complex_vec(3), g in complex_vec(3), h in complex_vec(3),
        scale in 0.0..1.0f64, gs in 0.0..2.0f64, alpha in 1u32..=3
    ) {
        let nf = f.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assume!(nf > 1e-9);
        let f: Vec<_> = f.iter().map(|c| c * (scale / nf)).collect();
        let g: Vec<_> = g.iter().map(|c| c * gs).collect();
        let check = multinomial_bound_check(&f, &g, &h, alpha).unwrap();
        prop_assert!(check.pass, "{check:?}");
    }

    #[test]
    fn conjugate_pair_satisfies_cauchy_riemann(r in 0.0..0.9f64, theta in -3.1..3.1f64) {
        // Each value is certified to `tol`; the central difference divides that
        // by the step, so the series tolerance must sit well below `1e-5 · e`.
        let cfg = ConjugatePairConfig { tol: 1e-13, ..Default::default() };
        let z = Complex::from_polar(r, theta);
        let e = 1e-5;
        let at = |dz: Complex<f64>| poisson_pair(z + dz, &cfg).unwrap();
        let (xp, xm) = (at(Complex::new(e, 0.0)), at(Complex::new(-e, 0.0)));
        let (yp, ym) = (at(Complex::new(0.0, e)), at(Complex::new(0.0, -e)));
        let ux = (xp.u - xm.u) / (2.0 * e);
        let uy = (yp.u - ym.u) / (2.0 * e);
        let vx = (xp.v - xm.v) / (2.0 * e);
        let vy = (yp.v - ym.v) / (2.0 * e);
        prop_assert!((ux - vy).abs() < 1e-5, "{ux} {vy}");
        prop_assert!((uy + vx).abs() < 1e-5, "{uy} {vx}");
    }

    #[test]
    fn conjugate_pair_has_mean_value_property(r0 in 0.0..0.5f64, theta in -3.1..3.1f64, rho in 0.05..0.4f64) {
        let cfg = ConjugatePairConfig::default();
        let z0 = Complex::from_polar(r0, theta);
        let center = poisson_pair(z0, &cfg).unwrap();
        let n = 256;
        let (mut mu, mut mv) = (0.0, 0.0);
        for j in 0..n {
            let p = poisson_pair(z0 + Complex::from_polar(rho, std::f64::consts::TAU * j as f64 / n as f64), &cfg).unwrap();
            mu += p.u / n as f64;
            mv += p.v / n as f64;
        }
        prop_assert!((mu - center.u).abs() < 1e-8);
        prop_assert!((mv - center.v).abs() < 1e-8);
    }
}

#[test]
fn conjugate_pair_vanishes_at_origin() {
    let v = poisson_pair(Complex::new(0.0f64, 0.0), &ConjugatePairConfig::default()).unwrap();
    assert_eq!(v.u, 0.0);
    assert_eq!(v.v, 0.0);
}

#[test]
fn cauchy_riemann_on_the_positive_axis() {
    let cfg = ConjugatePairConfig { tol: 1e-13, ..Default::default() };
    let z = Complex::new(0.6672122793373145f64, 0.0);
    let e = 1e-5;
    let at = |dz: Complex<f64>| poisson_pair(z + dz, &cfg).unwrap();
    let uy = (at(Complex::new(0.0, e)).u - at(Complex::new(0.0, -e)).u) / (2.0 * e);
    let vx = (at(Complex::new(e, 0.0)).v - at(Complex::new(-e, 0.0)).v) / (2.0 * e);
    assert!((uy + vx).abs() < 1e-5, "{uy} {vx}");
}
