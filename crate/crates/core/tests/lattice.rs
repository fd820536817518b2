use horolab::group::{diagonal_a, Mat2};
use horolab::lattice::{
    cusp_height, detect_divergence, injectivity_radius, quotient_distance, reduce, torus_orbit_check, ChartCoord,
    DivergencePath, Lattice, QuotientPoint,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn at(x: f64, y: f64) -> QuotientPoint {
    QuotientPoint::from_chart(Lattice::modular(), &[ChartCoord::new(x, y, 0.3)]).unwrap()
}

/// Translate/invert loop on the upper half plane.
fn gauss_oracle(mut x: f64, mut y: f64) -> (f64, f64) {
    loop {
        x -= x.round();
        let r2 = x * x + y * y;
        if r2 >= 1.0 {
            return (x, y);
        }
        x = -x / r2;
        y /= r2;
    }
}

#[test]
fn reduction_matches_gauss_oracle() {
    let (x, y) = reduce(&at(7.0, 1.0)).half_plane()[0];
    assert!(x.abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
    let (x, y) = reduce(&at(0.25, 3.0)).half_plane()[0];
    assert!((x - 0.25).abs() < 1e-12 && (y - 3.0).abs() < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (x0, y0) = (rng.gen_range(-5.0..5.0), rng.gen_range(0.01..2.0));
        let (wx, wy) = gauss_oracle(x0, y0);
        let (x, y) = reduce(&at(x0, y0)).half_plane()[0];
        assert!((y - wy).abs() < 1e-9 * wy.max(1.0), "{x0} {y0}");
        // boundary points may land on either side
        assert!((x - wx).abs() < 1e-9 || (x.abs() - 0.5).abs() < 1e-9);
    }
}

#[test]
fn distance_is_invariant_and_symmetric() {
    let p = at(0.13, 1.4);
    assert!(quotient_distance(&p, &p).unwrap() < 1e-12);
    for g in [Mat2::new(1.0, 3.0, 0.0, 1.0), Mat2::new(0.0, -1.0, 1.0, 0.0), Mat2::new(2.0, 1.0, 1.0, 1.0)] {
        let q = reduce(&p.with_rep_times(&[g]));
        assert!(quotient_distance(&p, &q).unwrap() < 1e-9);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let a = at(rng.gen_range(-0.5..0.5), rng.gen_range(0.9..3.0));
        let b = at(rng.gen_range(-0.5..0.5), rng.gen_range(0.9..3.0));
        let d1 = quotient_distance(&a, &b).unwrap();
        let d2 = quotient_distance(&b, &a).unwrap();
        assert!((d1 - d2).abs() < 1e-9);
    }
}

#[test]
fn cusp_heights() {
    assert!((cusp_height(&at(0.0, 1.0)) - 1.0).abs() < 1e-12);
    assert!((cusp_height(&at(0.1, 5.0)) - 5.0).abs() < 1e-12);
    let id = QuotientPoint::identity(Lattice::modular());
    for t in [0.0, 1.0, 3.0, 6.0] {
        let q = id.translate(&diagonal_a(1, -t).unwrap()).unwrap();
        assert!((cusp_height(&q) / t.exp() - 1.0).abs() < 1e-9, "{t}");
    }
}

#[test]
fn injectivity_radius_shrinks_up_the_cusp() {
    let mut last = f64::INFINITY;
    for y in [2.0, 5.0, 10.0, 20.0, 50.0] {
        let r = injectivity_radius(&at(0.2, y));
        assert!(r <= last + 1e-12, "{y}");
        last = r;
    }
    assert!(last < 0.05);
}

#[test]
fn divergence_verdicts() {
    let id = QuotientPoint::identity(Lattice::modular());
    assert!(detect_divergence(&id, DivergencePath::GeodesicMinus, 20.0, 100.0).unwrap().diverges);
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let generic = QuotientPoint::from_inverse_rep(Lattice::modular(), vec![Mat2::new(phi, -1.0, 1.0, 0.0)]).unwrap();
    let r = detect_divergence(&generic, DivergencePath::GeodesicMinus, 30.0, 100.0).unwrap();
    assert!(!r.diverges);
    let hil = QuotientPoint::identity(Lattice::hilbert(2).unwrap());
    assert!(detect_divergence(&hil, DivergencePath::PhiMap { gamma_exp: 0.1 }, 1e6, 100.0).unwrap().diverges);
}

#[test]
fn torus_orbits() {
    let id = torus_orbit_check(&QuotientPoint::identity(Lattice::modular()), 50);
    assert!(id.found && id.orbit_bounded);
    assert_eq!(id.torus_dim, 1);
    let hil = torus_orbit_check(&QuotientPoint::identity(Lattice::hilbert(2).unwrap()), 50);
    assert!(hil.found && hil.orbit_bounded);
    assert_eq!(hil.torus_dim, 2);
    let l = 1.0 / 5f64.sqrt();
    let phi = 0.5 * (1.0 + 5f64.sqrt());
    let compact = QuotientPoint::from_inverse_rep(Lattice::modular(), vec![Mat2::new(phi, -l / phi, 1.0, l)]).unwrap();
    assert!(!torus_orbit_check(&compact, 50).found);
}
