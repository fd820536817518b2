//! Search for compact orbits of the full unipotent group `F = U_1 x ... x U_k`.
//!
//! `b . g Gamma = g Gamma` iff `b = h^{-1} gamma h` with `h = g^{-1}` and
//! `gamma` in Gamma. For `b` to lie in `F`, `gamma` must be parabolic and
//! fix the cusp `h . infinity` in every factor, so the search enumerates
//! cusps `x / y` of the field matching `h . infinity` and uses the parabolic
//! elements `[[1 - nu x y, nu x^2], [-nu y^2, 1 + nu x y]]`.

use serde::{Deserialize, Serialize};

use crate::group::{GroupElement, Mat2};

use super::point::{cusp_height, quotient_distance, QuotientPoint};
use super::{Lattice, OInt};

/// Tolerance on matching the cusp and on unipotency of the conjugates.
const CUSP_TOL: f64 = 1e-9;
/// Stabilizer elements must move `p` by at most this much.
const STAB_TOL: f64 = 1e-6;
/// A sampled height above this marks the torus orbit as unbounded.
const HEIGHT_BOUND: f64 = 1e3;
const GRID: usize = 24;
const SPARSE_SAMPLES: i64 = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusReport {
    pub found: bool,
    pub stabilizer_generators: Vec<GroupElement>,
    pub orbit_bounded: bool,
    pub torus_dim: usize,
    /// Cusp `x / y` (coefficients in the integral basis) fixed by the
    /// generators, when one was matched.
    pub cusp: Option<(OInt, OInt)>,
    pub max_orbit_height: f64,
    /// Maximum height over `u(n) p`, `0 <= n < 200`.
    pub sparse_orbit_max_height: f64,
}

/// Cusp of the field whose embeddings equal `h_i . infinity`, searched with
/// `|y|` (k = 1) or both embeddings of `y` (k = 2) bounded by `budget`.
fn match_cusp(lat: &Lattice, h: &[Mat2], budget: usize) -> Option<(OInt, OInt)> {
    let at_infinity: Vec<bool> = h.iter().map(|m| m.m21.abs() <= CUSP_TOL * m.m11.abs()).collect();
    if at_infinity.iter().all(|&b| b) {
        return Some((OInt::ONE, OInt::ZERO));
    }
    if at_infinity.iter().any(|&b| b) {
        return None;
    }
    let kappa: Vec<f64> = h.iter().map(|m| m.m11 / m.m21).collect();
    match lat.field() {
        None => {
            for y in 1..=budget as i64 {
                let x = (kappa[0] * y as f64).round();
                if (x - kappa[0] * y as f64).abs() <= CUSP_TOL * y as f64 {
                    return Some((OInt::new(x as i64, 0), OInt::new(y, 0)));
                }
            }
            None
        }
        Some(f) => {
            let mut ys = f.elements_in_box(budget as f64);
            ys.retain(|y| !y.is_zero());
            ys.sort_by(|a, b| {
                let (a1, a2) = f.embed(*a);
                let (b1, b2) = f.embed(*b);
                (a1.abs().max(a2.abs())).total_cmp(&b1.abs().max(b2.abs()))
            });
            for y in ys {
                let (y1, y2) = f.embed(y);
                let x = f.nearest_element(kappa[0] * y1, kappa[1] * y2);
                let (x1, x2) = f.embed(x);
                if (x1 - kappa[0] * y1).abs() <= CUSP_TOL * y1.abs().max(1.0)
                    && (x2 - kappa[1] * y2).abs() <= CUSP_TOL * y2.abs().max(1.0)
                {
                    return Some((x, y));
                }
            }
            None
        }
    }
}

/// The parabolic element fixing `x / y` with translation parameter `nu`.
fn parabolic(lat: &Lattice, x: OInt, y: OInt, nu: OInt) -> Vec<Mat2> {
    match lat.field() {
        None => {
            let (x, y, n) = (x.a, y.a, nu.a);
            vec![Mat2::new(
                (1 - n * x * y) as f64,
                (n * x * x) as f64,
                (-n * y * y) as f64,
                (1 + n * x * y) as f64,
            )]
        }
        Some(f) => {
            let xy = f.mul(x, y);
            let nxy = f.mul(nu, xy);
            let a = OInt::ONE.sub(nxy);
            let b = f.mul(nu, f.mul(x, x));
            let c = f.mul(nu, f.mul(y, y)).neg();
            let d = OInt::ONE.add(nxy);
            lat.embed_matrix(a, b, c, d)
        }
    }
}

fn is_upper_unipotent(m: &Mat2) -> bool {
    let scale = 1.0 + m.max_abs_entry();
    (m.trace() - 2.0).abs() <= CUSP_TOL * scale
        && m.m21.abs() <= CUSP_TOL * scale
        && (m.m11 - 1.0).abs() <= CUSP_TOL * scale
}

fn commute(a: &GroupElement, b: &GroupElement) -> bool {
    a.factors.iter().zip(&b.factors).all(|(x, y)| {
        let scale = 1.0 + x.max_abs_entry() * y.max_abs_entry();
        x.mul(y).max_abs_diff(&y.mul(x)) <= CUSP_TOL * scale
    })
}

/// Rank of the translation vectors `(s_1.m12, ..., s_k.m12)`.
fn translation_rank(gens: &[GroupElement]) -> usize {
    match gens.len() {
        0 => 0,
        1 => usize::from(gens[0].factors.iter().any(|m| m.m12.abs() > CUSP_TOL)),
        _ => {
            let k = gens[0].k();
            if k == 1 {
                return usize::from(gens.iter().any(|g| g.factors[0].m12.abs() > CUSP_TOL));
            }
            let (a, b) = (&gens[0].factors, &gens[1].factors);
            let det = a[0].m12 * b[1].m12 - a[1].m12 * b[0].m12;
            let scale = (a[0].m12.abs() + a[1].m12.abs()) * (b[0].m12.abs() + b[1].m12.abs());
            if det.abs() > CUSP_TOL * scale.max(1.0) {
                2
            } else {
                1
            }
        }
    }
}

fn f_element(k: usize, t: &[f64]) -> GroupElement {
    GroupElement {
        factors: (0..k).map(|i| Mat2::unipotent(t[i])).collect(),
    }
}

/// Looks for `k` independent commuting unipotent elements of `Stab(p)`
/// inside `F` and, if found, samples the torus `F p` over a fundamental
/// parallelogram of the stabilizer.
pub fn torus_orbit_check(p: &QuotientPoint, search_budget: usize) -> TorusReport {
    let lat = &p.lattice;
    let k = p.k();
    let h = p.inverse_rep();
    let h_inv: Vec<Mat2> = h.iter().map(Mat2::adjugate).collect();
    let mut report = TorusReport {
        found: false,
        stabilizer_generators: Vec::new(),
        orbit_bounded: false,
        torus_dim: 0,
        cusp: None,
        max_orbit_height: 0.0,
        sparse_orbit_max_height: 0.0,
    };
    let Some((x, y)) = match_cusp(lat, &h, search_budget) else {
        return report;
    };
    report.cusp = Some((x, y));
    let nus: Vec<OInt> = if k == 1 {
        vec![OInt::ONE]
    } else {
        vec![OInt::ONE, OInt::OMEGA]
    };
    let mut gens: Vec<GroupElement> = Vec::new();
    for nu in nus {
        let gamma = parabolic(lat, x, y, nu);
        let s = GroupElement {
            factors: h_inv.iter().zip(&gamma).zip(&h).map(|((a, g), b)| a.mul(g).mul(b)).collect(),
        };
        if !s.factors.iter().all(is_upper_unipotent) {
            continue;
        }
        let moved = match p.translate(&s) {
            Ok(q) => q,
            Err(_) => continue,
        };
        if quotient_distance(&moved, p).map_or(true, |d| d > STAB_TOL) {
            continue;
        }
        if gens.iter().all(|g| commute(g, &s)) {
            let mut trial = gens.clone();
            trial.push(s.clone());
            if translation_rank(&trial) == trial.len() {
                gens = trial;
            }
        }
    }
    report.torus_dim = translation_rank(&gens);
    report.found = report.torus_dim == k;
    report.stabilizer_generators = gens;

    // sample F p over the parallelogram spanned by the generators
    let mut max_h: f64 = 0.0;
    if report.found {
        let steps = if k == 1 { GRID * GRID } else { GRID };
        let idx: Vec<Vec<usize>> = if k == 1 {
            (0..steps).map(|i| vec![i]).collect()
        } else {
            (0..steps).flat_map(|i| (0..steps).map(move |j| vec![i, j])).collect()
        };
        for ij in idx {
            let mut t = vec![0.0; k];
            for (g, &i) in report.stabilizer_generators.iter().zip(&ij) {
                let c = i as f64 / steps as f64;
                for (tf, m) in t.iter_mut().zip(&g.factors) {
                    *tf += c * m.m12;
                }
            }
            if let Ok(q) = p.translate(&f_element(k, &t)) {
                max_h = max_h.max(cusp_height(&q));
            }
        }
        report.max_orbit_height = max_h;
        report.orbit_bounded = max_h.is_finite() && max_h <= HEIGHT_BOUND;
    }
    let mut sparse_max: f64 = 0.0;
    for n in 0..SPARSE_SAMPLES {
        if let Ok(q) = p.translate(&crate::group::unipotent_u(k, n as f64)) {
            sparse_max = sparse_max.max(cusp_height(&q));
        }
    }
    report.sparse_orbit_max_height = sparse_max;
    report
}
