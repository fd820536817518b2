use horolab::group::{unipotent_u, Mat2};
use horolab::lattice::{ChartCoord, Lattice, QuotientPoint};
use horolab::numeric::composite_gauss_legendre;
use horolab::observables::{
    fundamental_domain_integral, haar_integral_k1, haar_total_mass, sobolev_norm, BumpFunction, Observable,
    SmoothingKernel,
};
use rayon::prelude::*;
use std::f64::consts::PI;

fn point(x: f64, y: f64, th: f64) -> QuotientPoint {
    QuotientPoint::from_chart(Lattice::modular(), &[ChartCoord::new(x, y, th)]).unwrap()
}

fn test_bump() -> BumpFunction {
    BumpFunction::new(&point(0.1, 1.6, 0.3), vec![[0.2, 0.3, 0.4]], 2.0).unwrap()
}

#[test]
fn bump_peak_support_and_invariance() {
    let b = test_bump();
    assert!((b.evaluate(&point(0.1, 1.6, 0.3)) - 2.0).abs() < 1e-12);
    assert_eq!(b.evaluate(&point(0.45, 1.6, 0.3)), 0.0);
    assert_eq!(b.evaluate(&point(0.1, 2.5, 0.3)), 0.0);
    let p = point(0.05, 1.5, 0.2);
    for g in [Mat2::new(1.0, -4.0, 0.0, 1.0), Mat2::new(0.0, -1.0, 1.0, 0.0), Mat2::new(3.0, 2.0, 1.0, 1.0)] {
        let q = p.with_rep_times(&[g]);
        assert!((b.evaluate(&p) - b.evaluate(&q)).abs() < 1e-9);
    }
}

#[test]
fn sobolev_values() {
    assert_eq!(sobolev_norm(&Observable::constant(0.0), 2).unwrap().value, 0.0);
    let f = Observable::bump(test_bump());
    assert!((sobolev_norm(&f, 0).unwrap().value - 2.0).abs() < 1e-9);
    let n1 = sobolev_norm(&f, 1).unwrap().value;
    let half = sobolev_norm(&Observable::bump(test_bump().dilate(0.5)), 1).unwrap().value;
    assert!(half >= 1.8 * n1, "{half} vs {n1}");
}

#[test]
fn kernel_properties() {
    let k = SmoothingKernel::new(0.01, 2, 0.5).unwrap();
    assert!((k.integral() - 0.25).abs() < 1e-6);
    assert_eq!(k.value(&[-0.011, 0.2]), 0.0);
    assert_eq!(k.value(&[0.2, 0.511]), 0.0);
    assert!(k.l1_distance_to_box() <= k.l1_bound());
}

#[test]
fn haar_integral_properties() {
    assert_eq!(haar_integral_k1(&Observable::constant(1.0)).unwrap(), 1.0);
    let one = fundamental_domain_integral(&|_| 1.0, 1e-9).unwrap();
    assert!((one - 1.0).abs() < 1e-4);
    let f = Observable::bump(test_bump());
    let m = haar_integral_k1(&f).unwrap();
    assert!(m > 0.0);
    // fixed product grid over the fundamental domain in (x, v = 1/y, theta);
    // f(u(0.3) .) vanishes for y > 4
    let u = unipotent_u(1, 0.3);
    let (xs, xw) = composite_gauss_legendre(-0.5, 0.5, 40, 4);
    let (ts, tw) = composite_gauss_legendre(-0.5 * PI, 0.5 * PI, 40, 4);
    let shifted: f64 = xs
        .par_iter()
        .zip(&xw)
        .map(|(&x, &wx)| {
            let (vs, vw) = composite_gauss_legendre(0.25, 1.0 / (1.0 - x * x).sqrt(), 40, 4);
            let mut acc = 0.0;
            for (&v, &wv) in vs.iter().zip(&vw) {
                for (&t, &wt) in ts.iter().zip(&tw) {
                    let p = QuotientPoint::from_chart(Lattice::modular(), &[ChartCoord::new(x, 1.0 / v, t)]).unwrap();
                    acc += wv * wt * f.evaluate(&p.translate(&u).unwrap());
                }
            }
            wx * acc
        })
        .sum::<f64>()
        / haar_total_mass();
    assert!((shifted - m).abs() < 2e-4, "{shifted} vs {m}");
}
