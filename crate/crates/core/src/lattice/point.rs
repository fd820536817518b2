use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::group::{self, factor_distance_to_identity, GroupElement, Mat2, LOG_BRANCH_RADIUS};

use super::reduce::{reduce_in_place, ReduceOutcome};
use super::{ChartCoord, Lattice};

/// Injectivity radius estimates are clamped here: beyond it the distance
/// surrogate leaves the logarithm branch and the enumeration says nothing.
pub const INJECTIVITY_CAP: f64 = 0.5 * LOG_BRANCH_RADIUS;

/// A point `g Gamma` of the quotient.
#[derive(Debug, Clone)]
pub struct QuotientPoint {
    pub rep: GroupElement,
    pub lattice: Arc<Lattice>,
    pub reduced: bool,
    pub best_effort: bool,
    cached_height: OnceLock<f64>,
    cached_inj_radius: OnceLock<f64>,
}

impl QuotientPoint {
    pub fn new(lattice: Arc<Lattice>, rep: GroupElement) -> Result<Self> {
        if rep.k() != lattice.k() {
            return Err(Error::DimensionMismatch(rep.k(), lattice.k()));
        }
        Ok(QuotientPoint {
            rep,
            lattice,
            reduced: false,
            best_effort: false,
            cached_height: OnceLock::new(),
            cached_inj_radius: OnceLock::new(),
        })
    }

    /// The identity coset `e Gamma`.
    pub fn identity(lattice: Arc<Lattice>) -> Self {
        let k = lattice.k();
        QuotientPoint::new(lattice, GroupElement::identity(k)).expect("matching k")
    }

    /// Point whose inverse representative has the given Iwasawa chart.
    pub fn from_chart(lattice: Arc<Lattice>, coords: &[ChartCoord]) -> Result<Self> {
        let h: Vec<Mat2> = coords.iter().map(ChartCoord::to_matrix).collect();
        QuotientPoint::from_inverse_rep(lattice, h)
    }

    /// Point `g Gamma` given `h = g^{-1}` factor by factor.
    pub fn from_inverse_rep(lattice: Arc<Lattice>, h: Vec<Mat2>) -> Result<Self> {
        let g = group::inverse(&GroupElement { factors: h });
        QuotientPoint::new(lattice, g)
    }

    pub fn k(&self) -> usize {
        self.rep.k()
    }

    /// `h = g^{-1}`.
    pub fn inverse_rep(&self) -> Vec<Mat2> {
        self.rep.factors.iter().map(Mat2::adjugate).collect()
    }

    /// Chart of the current (not necessarily reduced) representative.
    pub fn chart(&self) -> Vec<ChartCoord> {
        self.rep.factors.iter().map(|g| ChartCoord::of(&g.adjugate())).collect()
    }

    /// `b . p`, unreduced.
    pub fn translate(&self, b: &GroupElement) -> Result<QuotientPoint> {
        QuotientPoint::new(self.lattice.clone(), group::compose(b, &self.rep)?)
    }

    /// Right multiplication of the representative by a lattice element
    /// (given per factor); the coset is unchanged.
    pub fn with_rep_times(&self, gamma: &[Mat2]) -> QuotientPoint {
        let rep = GroupElement {
            factors: self.rep.factors.iter().zip(gamma).map(|(g, m)| g.mul(m)).collect(),
        };
        QuotientPoint::new(self.lattice.clone(), rep).expect("matching k")
    }

    pub fn reduce(&self) -> QuotientPoint {
        reduce(self)
    }

    /// Upper-half-plane coordinate of each factor of the representative.
    pub fn half_plane(&self) -> Vec<(f64, f64)> {
        self.chart().iter().map(|c| (c.x, c.y)).collect()
    }
}

/// Reduced representative of `h` (in place) and the outcome flags.
pub(crate) fn reduce_inverse_rep(lat: &Lattice, h: &mut [Mat2]) -> ReduceOutcome {
    reduce_in_place(lat, h)
}

/// Moves the representative into the (k = 1) fundamental domain or the
/// (k = 2) locally maximal-height position.
pub fn reduce(p: &QuotientPoint) -> QuotientPoint {
    if p.reduced {
        return p.clone();
    }
    let mut h = p.inverse_rep();
    let out = reduce_inverse_rep(&p.lattice, &mut h);
    let mut q = QuotientPoint::from_inverse_rep(p.lattice.clone(), h).expect("matching k");
    q.reduced = true;
    q.best_effort = out.best_effort;
    q
}

/// `min(d(m), d(-m))` summed over factors, where `m_i = a_i^{-1} gamma_i b_i`.
#[inline]
fn signed_distance(a_inv: &[Mat2], gamma: &[Mat2], b: &[Mat2]) -> f64 {
    let mut plus = 0.0;
    let mut minus = 0.0;
    for ((ai, gi), bi) in a_inv.iter().zip(gamma).zip(b) {
        let m = ai.mul(gi).mul(bi);
        plus += factor_distance_to_identity(&m);
        minus += factor_distance_to_identity(&m.neg());
    }
    plus.min(minus)
}

/// Upper bound on the quotient distance: the minimum over enumerated
/// lattice elements of the distance between representatives, measured with
/// the metric induced on G/Gamma (left-invariant on inverses).
pub fn quotient_distance(p: &QuotientPoint, q: &QuotientPoint) -> Result<f64> {
    if p.lattice.descriptor != q.lattice.descriptor {
        return Err(Error::Domain("points lie on different lattices".into()));
    }
    let hp = reduce(p).inverse_rep();
    let hq = reduce(q).inverse_rep();
    let hp_inv: Vec<Mat2> = hp.iter().map(Mat2::adjugate).collect();
    let identity = vec![Mat2::IDENTITY; p.k()];
    let mut best = signed_distance(&hp_inv, &identity, &hq);
    for gamma in p.lattice.enumerated_elements() {
        let d = signed_distance(&hp_inv, gamma, &hq);
        if d < best {
            best = d;
        }
    }
    Ok(best)
}

/// Half the smallest displacement `d(h, gamma h)` over enumerated
/// nontrivial lattice elements, clamped to [`INJECTIVITY_CAP`].
pub fn injectivity_radius(p: &QuotientPoint) -> f64 {
    *p.cached_inj_radius.get_or_init(|| {
        let h = reduce(p).inverse_rep();
        let h_inv: Vec<Mat2> = h.iter().map(Mat2::adjugate).collect();
        let mut best = f64::INFINITY;
        for gamma in p.lattice.enumerated_elements() {
            let d = signed_distance(&h_inv, gamma, &h);
            if d < best {
                best = d;
            }
        }
        (0.5 * best).min(INJECTIVITY_CAP)
    })
}

/// Height in the cusp: `Im z` of the reduced point for k = 1; for k = 2 the
/// maximum over nonzero `(c, d)` in a bounded box of
/// `y1 y2 / |N(c z + d)|^2`.
pub fn cusp_height(p: &QuotientPoint) -> f64 {
    *p.cached_height.get_or_init(|| {
        let r = reduce(p);
        let h = r.inverse_rep();
        match p.lattice.field() {
            None => ChartCoord::of(&h[0]).y,
            Some(f) => {
                let c1 = ChartCoord::of(&h[0]);
                let c2 = ChartCoord::of(&h[1]);
                let ny = c1.y * c2.y;
                let mut best = ny;
                let bound = p.lattice.params.height_c_bound;
                let radius = p.lattice.params.r_search;
                for c in f.elements_in_box(bound) {
                    if c.is_zero() {
                        continue;
                    }
                    let (s1, s2) = f.embed(c);
                    // imaginary parts alone bound the denominator from below
                    let floor = (s1 * c1.y).powi(2) * (s2 * c2.y).powi(2);
                    if ny / floor <= best {
                        continue;
                    }
                    let centre = f.nearest_element(-s1 * c1.x, -s2 * c2.x);
                    let (m1, m2) = f.embed(centre);
                    for off in f.elements_in_box(radius) {
                        let (o1, o2) = f.embed(off);
                        let d1 = m1 + o1;
                        let d2 = m2 + o2;
                        let den1 = (s1 * c1.x + d1).powi(2) + (s1 * c1.y).powi(2);
                        let den2 = (s2 * c2.x + d2).powi(2) + (s2 * c2.y).powi(2);
                        let v = ny / (den1 * den2);
                        if v > best {
                            best = v;
                        }
                    }
                }
                best
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{diagonal_a, unipotent_u};

    fn modular_point(x: f64, y: f64, theta: f64) -> QuotientPoint {
        QuotientPoint::from_chart(Lattice::modular(), &[ChartCoord::new(x, y, theta)]).unwrap()
    }

    #[test]
    fn heights_of_simple_points() {
        assert!((cusp_height(&modular_point(0.0, 1.0, 0.0)) - 1.0).abs() < 1e-12);
        assert!((cusp_height(&modular_point(0.0, 5.0, 0.2)) - 5.0).abs() < 1e-12);
        assert!((cusp_height(&modular_point(7.0, 5.0, 0.2)) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn geodesic_push_from_identity_climbs_the_cusp() {
        let lat = Lattice::modular();
        let e = QuotientPoint::identity(lat);
        for t in [0.0, 1.0, 3.5, 10.0] {
            let p = e.translate(&diagonal_a(1, -t).unwrap()).unwrap();
            assert!((cusp_height(&p) - t.exp()).abs() <= 1e-9 * t.exp());
        }
    }

    #[test]
    fn injectivity_radius_at_height() {
        for y in [2.0, 4.0, 10.0] {
            let eta = injectivity_radius(&modular_point(0.1, y, 0.0));
            assert!((eta - 0.5 / y).abs() < 1e-12, "y = {y}: {eta}");
        }
    }

    #[test]
    fn quotient_distance_zero_on_same_coset() {
        let p = modular_point(0.2, 1.3, 0.4);
        assert!(quotient_distance(&p, &p).unwrap() < 1e-12);
        let gamma = [Mat2::new(2.0, 1.0, 7.0, 4.0)];
        let q = p.with_rep_times(&gamma);
        assert!(quotient_distance(&p, &q).unwrap() < 1e-9);
    }

    #[test]
    fn hilbert_identity_height() {
        let lat = Lattice::hilbert(2).unwrap();
        let e = QuotientPoint::identity(lat.clone());
        assert!((cusp_height(&e) - 1.0).abs() < 1e-12);
        let p = e.translate(&unipotent_u(2, 17.0)).unwrap();
        assert!((cusp_height(&p) - 1.0).abs() < 1e-9);
    }
}
