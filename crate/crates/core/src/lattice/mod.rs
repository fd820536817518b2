//! Lattices Gamma in G, points of G/Gamma, and their reduction.
//!
//! A point `g Gamma` is stored by a representative `g`. The group acts by
//! left multiplication; Gamma acts on the right. Geometry is read off the
//! inverse `h = g^{-1}`, on which Gamma acts on the left: each factor of `h`
//! has an Iwasawa chart `h = n(x) a(y) k(theta)` with `h.i = x + iy` in the
//! upper half plane.

mod divergence;
mod field;
mod point;
mod reduce;
mod torus;

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Mat2;

pub use divergence::{detect_divergence, path_element, DivergencePath, DivergenceReport};
pub use field::{OInt, QuadraticField};
pub use point::{cusp_height, injectivity_radius, quotient_distance, reduce, QuotientPoint};
pub use reduce::{reduce_in_place, ReduceOutcome};
pub use torus::{torus_orbit_check, TorusReport};

/// Serializable description of the lattice.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LatticeDescriptor {
    /// SL2(Z) in SL2(R), k = 1.
    Modular,
    /// SL2(O_K) embedded diagonally in SL2(R)^2, K = Q(sqrt d).
    Hilbert { d: i64 },
}

impl LatticeDescriptor {
    pub fn k(&self) -> usize {
        match self {
            LatticeDescriptor::Modular => 1,
            LatticeDescriptor::Hilbert { .. } => 2,
        }
    }
}

/// Search budgets for reduction, enumeration and stabilizer search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LatticeParams {
    /// Entry bound for SL2(Z) enumeration.
    pub h_enum: i64,
    /// Embedding bound for translations tried before inversion (k = 2).
    pub r_search: f64,
    /// Largest unit power tried per reduction step (k = 2).
    pub m_max: i32,
    /// Embedding bound on matrix entries enumerated for SL2(O) (k = 2).
    pub hilbert_enum_bound: f64,
    /// Embedding bound on `c` in the k = 2 cusp-height search.
    pub height_c_bound: f64,
    pub max_reduce_iters: usize,
}

impl Default for LatticeParams {
    fn default() -> Self {
        LatticeParams {
            h_enum: 200,
            r_search: 3.0,
            m_max: 3,
            hilbert_enum_bound: 3.0,
            height_c_bound: 3.0,
            max_reduce_iters: 10_000,
        }
    }
}

/// Runtime lattice: descriptor, budgets and lazily built enumerations.
#[derive(Debug)]
pub struct Lattice {
    pub descriptor: LatticeDescriptor,
    pub params: LatticeParams,
    field: Option<QuadraticField>,
    elements: OnceLock<Vec<Vec<Mat2>>>,
    translations: OnceLock<Vec<OInt>>,
}

impl Lattice {
    pub fn new(descriptor: LatticeDescriptor, params: LatticeParams) -> Result<Arc<Self>> {
        let field = match &descriptor {
            LatticeDescriptor::Modular => None,
            LatticeDescriptor::Hilbert { d } => Some(QuadraticField::new(*d)?),
        };
        if params.h_enum < 1 {
            return Err(Error::Config("h_enum must be >= 1".into()));
        }
        Ok(Arc::new(Lattice {
            descriptor,
            params,
            field,
            elements: OnceLock::new(),
            translations: OnceLock::new(),
        }))
    }

    pub fn modular() -> Arc<Self> {
        Lattice::new(LatticeDescriptor::Modular, LatticeParams::default()).expect("modular lattice")
    }

    pub fn hilbert(d: i64) -> Result<Arc<Self>> {
        Lattice::new(LatticeDescriptor::Hilbert { d }, LatticeParams::default())
    }

    pub fn k(&self) -> usize {
        self.descriptor.k()
    }

    pub fn field(&self) -> Option<&QuadraticField> {
        self.field.as_ref()
    }

    /// Embeds `[[a, b], [c, d]]` with entries in the ring of integers.
    pub fn embed_matrix(&self, a: OInt, b: OInt, c: OInt, d: OInt) -> Vec<Mat2> {
        match &self.field {
            None => vec![Mat2::new(a.a as f64, b.a as f64, c.a as f64, d.a as f64)],
            Some(f) => (0..2)
                .map(|i| Mat2::new(f.embed_i(a, i), f.embed_i(b, i), f.embed_i(c, i), f.embed_i(d, i)))
                .collect(),
        }
    }

    /// Enumerated lattice elements (per-factor matrices), excluding `+-I`.
    ///
    /// k = 1: all of SL2(Z) with entries bounded by `h_enum`.
    /// k = 2: all of SL2(O) whose entries have both embeddings bounded by
    /// `hilbert_enum_bound`.
    pub fn enumerated_elements(&self) -> &[Vec<Mat2>] {
        self.elements.get_or_init(|| match &self.field {
            None => sl2z_elements(self.params.h_enum)
                .into_iter()
                .map(|m| vec![m])
                .collect(),
            Some(f) => sl2o_elements(f, self.params.hilbert_enum_bound)
                .into_iter()
                .map(|[a, b, c, d]| self.embed_matrix(a, b, c, d))
                .collect(),
        })
    }

    /// Translations tried before an inversion during k = 2 reduction.
    pub(crate) fn search_translations(&self) -> &[OInt] {
        self.translations.get_or_init(|| match &self.field {
            None => vec![OInt::ZERO],
            Some(f) => f.elements_in_box(self.params.r_search),
        })
    }
}

/// Iwasawa coordinates of one factor: `h = n(x) a(y) k(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChartCoord {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl ChartCoord {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        ChartCoord { x, y, theta }
    }

    #[inline]
    pub fn of(h: &Mat2) -> Self {
        let n2 = h.m21 * h.m21 + h.m22 * h.m22;
        ChartCoord {
            x: (h.m11 * h.m21 + h.m12 * h.m22) / n2,
            y: 1.0 / n2,
            theta: h.m21.atan2(h.m22),
        }
    }

    pub fn to_matrix(&self) -> Mat2 {
        let s = self.y.sqrt();
        Mat2::new(1.0, self.x, 0.0, 1.0)
            .mul(&Mat2::new(s, 0.0, 0.0, 1.0 / s))
            .mul(&Mat2::rotation(self.theta))
    }
}

fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        (a.signum() * a, a.signum(), 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// All of SL2(Z) with `max |entry| <= h`, excluding `+-I`.
pub fn sl2z_elements(h: i64) -> Vec<Mat2> {
    let mut out = Vec::new();
    for b in -h..=h {
        if b != 0 {
            out.push(Mat2::new(1.0, b as f64, 0.0, 1.0));
            out.push(Mat2::new(-1.0, b as f64, 0.0, -1.0));
        }
    }
    for a in -h..=h {
        out.push(Mat2::new(a as f64, -1.0, 1.0, 0.0));
        out.push(Mat2::new(a as f64, 1.0, -1.0, 0.0));
    }
    for c in -h..=h {
        for d in -h..=h {
            if c == 0 || d == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(c, d);
            if g != 1 {
                continue;
            }
            // x c + y d = 1, so (a, b) = (y, -x) solves a d - b c = 1;
            // the general solution is (a, b) + k (c, d).
            let (a0, b0) = (y, -x);
            let (l1, h1) = range_for(a0, c, h);
            let (l2, h2) = range_for(b0, d, h);
            for k in l1.max(l2)..=h1.min(h2) {
                out.push(Mat2::new((a0 + k * c) as f64, (b0 + k * d) as f64, c as f64, d as f64));
            }
        }
    }
    out
}

/// Range of k with `|v0 + k*step| <= h`, for `step != 0`.
fn range_for(v0: i64, step: i64, h: i64) -> (i64, i64) {
    let s = step.abs();
    let v = v0 * step.signum();
    // |v + k s| <= h  <=>  (-h - v)/s <= k <= (h - v)/s
    ((-h - v).div_euclid(s) + i64::from((-h - v).rem_euclid(s) != 0), (h - v).div_euclid(s))
}

/// SL2(O) elements whose entries have both embeddings bounded, minus `+-I`.
fn sl2o_elements(f: &QuadraticField, bound: f64) -> Vec<[OInt; 4]> {
    let elems = f.elements_in_box(bound);
    let mut out = Vec::new();
    let one = OInt::ONE;
    for &a in &elems {
        for &b in &elems {
            for &c in &elems {
                let num = one.add(f.mul(b, c));
                let d = if a.is_zero() {
                    if !num.is_zero() {
                        continue;
                    }
                    // a = 0 forces b c = -1; d is then free.
                    for &d in &elems {
                        out.push([a, b, c, d]);
                    }
                    continue;
                } else {
                    match f.exact_div(num, a) {
                        Some(d) => d,
                        None => continue,
                    }
                };
                let (d1, d2) = f.embed(d);
                if d1.abs() > bound || d2.abs() > bound {
                    continue;
                }
                if b.is_zero() && c.is_zero() && (a == one || a == one.neg()) && d == a {
                    continue;
                }
                out.push([a, b, c, d]);
            }
        }
    }
    out
}
