use horolab::group::Mat2;
use horolab::lattice::{ChartCoord, Lattice, QuotientPoint};
use horolab::observables::{haar_integral_k1, BumpFunction, Observable};
use horolab::sampler::{
    block_average_compare, correlation, horocycle_average, renormalization_identity_check, sparse_average, Flow,
    TimeSet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bump(x: f64, y: f64, th: f64, w: [f64; 3]) -> BumpFunction {
    let c = QuotientPoint::from_chart(Lattice::modular(), &[ChartCoord::new(x, y, th)]).unwrap();
    BumpFunction::new(&c, vec![w], 1.0).unwrap()
}

fn generic() -> QuotientPoint {
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    QuotientPoint::from_inverse_rep(Lattice::modular(), vec![Mat2::new(phi, -1.0, 1.0, 0.0)]).unwrap()
}

fn test_f() -> Observable {
    Observable::bump(bump(0.1, 1.3, 0.2, [0.3, 0.3, 0.5]))
}

#[test]
fn horocycle_deviation_shrinks() {
    let f = test_f();
    let d2 = horocycle_average(&f, &generic(), 1e2).unwrap().deviation.unwrap();
    let d4 = horocycle_average(&f, &generic(), 1e4).unwrap().deviation.unwrap();
    assert!(d4 < d2, "{d4} vs {d2}");
}

#[test]
fn progression_deviation_shrinks() {
    let f = test_f();
    let p = generic();
    let d4 = sparse_average(&f, &p, &TimeSet::Progression { k: 1.0, t: 1e4 }).unwrap().deviation.unwrap();
    let d6 = sparse_average(&f, &p, &TimeSet::Progression { k: 1.0, t: 1e6 }).unwrap().deviation.unwrap();
    assert!(d6 < d4, "{d6} vs {d4}");
}

#[test]
fn renormalization_identity_random_triples() {
    let p = generic();
    assert!(renormalization_identity_check(&test_f(), &p, 1e3).unwrap() <= 1e-6);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..20 {
        let f = Observable::bump(bump(
            rng.gen_range(-0.4..0.4),
            rng.gen_range(1.1..2.0),
            rng.gen_range(-1.2..1.2),
            [0.3, 0.3, 0.5],
        ));
        let q = QuotientPoint::from_chart(
            Lattice::modular(),
            &[ChartCoord::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.9..2.0), rng.gen_range(-1.5..1.5))],
        )
        .unwrap();
        let t = 10f64.powf(rng.gen_range(0.0..2.5));
        assert!(renormalization_identity_check(&f, &q, t).unwrap() <= 1e-6, "{t}");
    }
}

#[test]
fn block_gap_decays_and_obeys_lipschitz_bound() {
    // broad bump: the short blocks must meet its support
    let f = Observable::bump(bump(0.0, 1.6, 0.0, [0.49, 0.9, 1.5]));
    let p = generic();
    let a = block_average_compare(&f, &p, 100_000, 0.1).unwrap();
    let b = block_average_compare(&f, &p, 400_000, 0.1).unwrap();
    assert!(b.gap < a.gap, "{} vs {}", b.gap, a.gap);
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let m = rng.gen_range(10_000..2_000_000);
        let g = rng.gen_range(0.05..0.4);
        let r = block_average_compare(&f, &p, m, g).unwrap();
        assert!(r.gap <= r.lipschitz_bound, "{r:?}");
    }
    let small = block_average_compare(&f, &p, 1_000_000, 1e-3).unwrap();
    let tiny = block_average_compare(&f, &p, 1_000_000, 1e-6).unwrap();
    assert!(tiny.gap < small.gap && tiny.gap < 1e-5);
}

#[test]
fn correlation_examples() {
    let b1 = bump(0.1, 1.7, 0.4, [0.25, 0.35, 0.6]);
    let b2 = bump(-0.15, 1.9, -0.3, [0.25, 0.35, 0.6]);
    let f0 = Observable::bump(b1.clone());
    assert!(correlation(&f0, &f0, 0.0, Flow::Geodesic).unwrap() > 0.0);
    let m1 = haar_integral_k1(&f0).unwrap();
    let m2 = haar_integral_k1(&Observable::bump(b2.clone())).unwrap();
    let c = Observable::constant(0.7);
    for t in [0.5, 4.0] {
        let v = correlation(&c, &Observable::bump(b2.clone()), t, Flow::Horocycle).unwrap();
        assert!((v - 0.7 * m2).abs() < 1e-12);
    }
    let f = f0.shifted(-m1);
    let g = Observable::bump(b2).shifted(-m2);
    let c1 = correlation(&f, &g, 1.0, Flow::Geodesic).unwrap();
    let c8 = correlation(&f, &g, 8.0, Flow::Geodesic).unwrap();
    assert!(c8.abs() < c1.abs(), "{c8} vs {c1}");
}
