//! Arithmetic in G = SL2(R)^k, its Lie algebra, and the flows u(t), a(t).
//!
//! Conventions: `u1(t) = [[1, t], [0, 1]]`, `a1(t) = diag(e^{t/2}, e^{-t/2})`,
//! so that `Ad(a(t))` scales the unipotent direction by `e^t` (alpha = 1).
//! Both flows act through the first factor only.
//!
//! The Lie algebra basis per factor is `X = [[0,1],[0,0]]`, `Y = [[0,0],[1,0]]`,
//! `Z = [[1,0],[0,-1]]`, with `[Z,X] = 2X`, `[Z,Y] = -2Y`, `[X,Y] = Z`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance on `|det - 1|` that every public operation maintains.
pub const DET_TOLERANCE: f64 = 1e-9;

/// Frobenius radius of `g - I` inside which `log_map` uses the principal branch.
pub const LOG_BRANCH_RADIUS: f64 = 0.5;

/// Largest |t| accepted by `diagonal_a` before `e^{t/2}` is considered unsafe.
pub const MAX_DIAGONAL_TIME: f64 = 1400.0;

/// A real 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2::new(1.0, 0.0, 0.0, 1.0);

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub fn unipotent(t: f64) -> Self {
        Mat2::new(1.0, t, 0.0, 1.0)
    }

    /// `diag(e^{t/2}, e^{-t/2})`.
    pub fn diagonal(t: f64) -> Self {
        let e = (0.5 * t).exp();
        Mat2::new(e, 0.0, 0.0, 1.0 / e)
    }

    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Mat2::new(c, -s, s, c)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    #[inline]
    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            m11: self.m11 * o.m11 + self.m12 * o.m21,
            m12: self.m11 * o.m12 + self.m12 * o.m22,
            m21: self.m21 * o.m11 + self.m22 * o.m21,
            m22: self.m21 * o.m12 + self.m22 * o.m22,
        }
    }

    /// Adjugate; the inverse when `det = 1`.
    #[inline]
    pub fn adjugate(&self) -> Mat2 {
        Mat2::new(self.m22, -self.m12, -self.m21, self.m11)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn neg(&self) -> Mat2 {
        self.scale(-1.0)
    }

    /// Frobenius norm of `self - I`.
    pub fn dist_to_identity_frobenius(&self) -> f64 {
        let a = self.m11 - 1.0;
        let d = self.m22 - 1.0;
        (a * a + self.m12 * self.m12 + self.m21 * self.m21 + d * d).sqrt()
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        (self.m11 - o.m11)
            .abs()
            .max((self.m12 - o.m12).abs())
            .max((self.m21 - o.m21).abs())
            .max((self.m22 - o.m22).abs())
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.m11
            .abs()
            .max(self.m12.abs())
            .max(self.m21.abs())
            .max(self.m22.abs())
    }

    /// Divides by `sqrt(det)`.
    pub fn renormalized(&self) -> Result<Mat2> {
        let det = self.det();
        if !(det > 0.0) {
            return Err(Error::Numeric(format!("singular factor, det = {det}")));
        }
        if (det - 1.0).abs() > 1e-3 {
            return Err(Error::Domain(format!(
                "determinant {det} too far from 1 to renormalize"
            )));
        }
        Ok(self.scale(1.0 / det.sqrt()))
    }

    /// Mobius action on the upper half plane, `z -> (m11 z + m12)/(m21 z + m22)`.
    #[inline]
    pub fn mobius(&self, x: f64, y: f64) -> (f64, f64) {
        let cr = self.m21 * x + self.m22;
        let ci = self.m21 * y;
        let nr = self.m11 * x + self.m12;
        let ni = self.m11 * y;
        let den = cr * cr + ci * ci;
        ((nr * cr + ni * ci) / den, (ni * cr - nr * ci) / den)
    }
}

/// A k-tuple of unit-determinant 2x2 matrices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupElement {
    pub factors: Vec<Mat2>,
}

impl GroupElement {
    pub fn identity(k: usize) -> Self {
        GroupElement {
            factors: vec![Mat2::IDENTITY; k],
        }
    }

    pub fn from_factors(factors: Vec<Mat2>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Domain("group element needs k >= 1".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if (f.det() - 1.0).abs() > DET_TOLERANCE {
                return Err(Error::Domain(format!(
                    "factor {i} has det {} (expected 1)",
                    f.det()
                )));
            }
        }
        Ok(GroupElement { factors })
    }

    /// Element that is `m` in the first factor and the identity elsewhere.
    pub fn first_factor(k: usize, m: Mat2) -> Self {
        let mut g = GroupElement::identity(k);
        g.factors[0] = m;
        g
    }

    pub fn k(&self) -> usize {
        self.factors.len()
    }

    pub fn max_abs_diff(&self, o: &GroupElement) -> f64 {
        self.factors
            .iter()
            .zip(&o.factors)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn max_det_drift(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| (f.det() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Factor-wise product `g h`.
pub fn compose(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    if g.k() != h.k() {
        return Err(Error::DimensionMismatch(g.k(), h.k()));
    }
    Ok(GroupElement {
        factors: g.factors.iter().zip(&h.factors).map(|(a, b)| a.mul(b)).collect(),
    })
}

pub fn inverse(g: &GroupElement) -> GroupElement {
    GroupElement {
        factors: g.factors.iter().map(Mat2::adjugate).collect(),
    }
}

/// `u(t) = (u1(t), e, ..., e)`.
pub fn unipotent_u(k: usize, t: f64) -> GroupElement {
    GroupElement::first_factor(k, Mat2::unipotent(t))
}

/// `a(t) = (a1(t), e, ..., e)`.
pub fn diagonal_a(k: usize, t: f64) -> Result<GroupElement> {
    if !t.is_finite() || t.abs() > MAX_DIAGONAL_TIME {
        return Err(Error::Range(format!(
            "diagonal flow time {t} exceeds +-{MAX_DIAGONAL_TIME}"
        )));
    }
    Ok(GroupElement::first_factor(k, Mat2::diagonal(t)))
}

/// Divides every factor by the square root of its determinant.
pub fn renormalize(g: &GroupElement) -> Result<GroupElement> {
    Ok(GroupElement {
        factors: g
            .factors
            .iter()
            .map(Mat2::renormalized)
            .collect::<Result<Vec<_>>>()?,
    })
}

/// Coordinates in the basis {X, Y, Z} of sl2, one triple per factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LieAlgebraElement {
    pub coords: Vec<[f64; 3]>,
}

impl LieAlgebraElement {
    pub fn zero(k: usize) -> Self {
        LieAlgebraElement {
            coords: vec![[0.0; 3]; k],
        }
    }

    /// `a X + b Y + c Z` in the first factor.
    pub fn first_factor(k: usize, a: f64, b: f64, c: f64) -> Self {
        let mut v = LieAlgebraElement::zero(k);
        v.coords[0] = [a, b, c];
        v
    }

    /// The basis element with index `idx` (factor `idx / 3`, direction X, Y, Z).
    pub fn basis(k: usize, idx: usize) -> Self {
        let mut v = LieAlgebraElement::zero(k);
        v.coords[idx / 3][idx % 3] = 1.0;
        v
    }

    pub fn k(&self) -> usize {
        self.coords.len()
    }

    /// Euclidean norm of each factor's coordinates, summed over factors.
    pub fn norm(&self) -> f64 {
        self.coords
            .iter()
            .map(|c| (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt())
            .sum()
    }

    pub fn scaled(&self, s: f64) -> Self {
        LieAlgebraElement {
            coords: self
                .coords
                .iter()
                .map(|c| [c[0] * s, c[1] * s, c[2] * s])
                .collect(),
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        LieAlgebraElement {
            coords: self
                .coords
                .iter()
                .zip(&o.coords)
                .map(|(a, b)| [a[0] + b[0], a[1] + b[1], a[2] + b[2]])
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, o: &Self) -> f64 {
        self.coords
            .iter()
            .zip(&o.coords)
            .flat_map(|(a, b)| (0..3).map(move |i| (a[i] - b[i]).abs()))
            .fold(0.0, f64::max)
    }
}

/// The traceless matrix `z*Z + x*X + y*Y`.
#[inline]
pub fn lie_matrix(c: &[f64; 3]) -> Mat2 {
    Mat2::new(c[2], c[0], c[1], -c[2])
}

#[inline]
fn lie_coords(m: &Mat2) -> [f64; 3] {
    [m.m12, m.m21, 0.5 * (m.m11 - m.m22)]
}

/// Lie bracket computed from the matrix representation.
pub fn bracket(a: &LieAlgebraElement, b: &LieAlgebraElement) -> LieAlgebraElement {
    LieAlgebraElement {
        coords: a
            .coords
            .iter()
            .zip(&b.coords)
            .map(|(p, q)| {
                let (mp, mq) = (lie_matrix(p), lie_matrix(q));
                let ab = mp.mul(&mq);
                let ba = mq.mul(&mp);
                lie_coords(&Mat2::new(
                    ab.m11 - ba.m11,
                    ab.m12 - ba.m12,
                    ab.m21 - ba.m21,
                    ab.m22 - ba.m22,
                ))
            })
            .collect(),
    }
}

/// `Ad(g) x = g x g^{-1}`, factor by factor.
pub fn adjoint(g: &GroupElement, x: &LieAlgebraElement) -> Result<LieAlgebraElement> {
    if g.k() != x.k() {
        return Err(Error::DimensionMismatch(g.k(), x.k()));
    }
    Ok(LieAlgebraElement {
        coords: g
            .factors
            .iter()
            .zip(&x.coords)
            .map(|(m, c)| lie_coords(&m.mul(&lie_matrix(c)).mul(&m.adjugate())))
            .collect(),
    })
}

/// Closed-form exponential of a traceless 2x2 matrix.
pub fn exp_mat(c: &[f64; 3]) -> Mat2 {
    let m = lie_matrix(c);
    // m^2 = delta * I
    let delta = c[2] * c[2] + c[0] * c[1];
    let (ch, sh) = if delta.abs() < 1e-8 {
        (1.0 + 0.5 * delta + delta * delta / 24.0, 1.0 + delta / 6.0 + delta * delta / 120.0)
    } else if delta > 0.0 {
        let r = delta.sqrt();
        (r.cosh(), r.sinh() / r)
    } else {
        let r = (-delta).sqrt();
        (r.cos(), r.sin() / r)
    };
    Mat2::new(ch + sh * m.m11, sh * m.m12, sh * m.m21, ch + sh * m.m22)
}

/// Principal logarithm of a unit-determinant matrix near the identity.
pub fn log_mat(g: &Mat2) -> Result<[f64; 3]> {
    if g.dist_to_identity_frobenius() > LOG_BRANCH_RADIUS {
        return Err(Error::Domain(format!(
            "log_map: factor at Frobenius distance {} from identity (branch radius {LOG_BRANCH_RADIUS})",
            g.dist_to_identity_frobenius()
        )));
    }
    let c = 0.5 * g.trace();
    let cm1 = c - 1.0;
    // g = cosh(r) I + (sinh(r)/r) x  (or the cos/sin analogue)
    let factor = if cm1.abs() < 1e-8 {
        1.0 - cm1 / 3.0
    } else if c > 1.0 {
        let r = c.acosh();
        r / r.sinh()
    } else {
        let r = c.acos();
        r / r.sin()
    };
    Ok([
        factor * g.m12,
        factor * g.m21,
        factor * 0.5 * (g.m11 - g.m22),
    ])
}

pub fn exp_map(x: &LieAlgebraElement) -> GroupElement {
    GroupElement {
        factors: x.coords.iter().map(exp_mat).collect(),
    }
}

pub fn log_map(g: &GroupElement) -> Result<LieAlgebraElement> {
    Ok(LieAlgebraElement {
        coords: g.factors.iter().map(log_mat).collect::<Result<Vec<_>>>()?,
    })
}

/// Distance of a single factor from the identity: the Lie-algebra norm of
/// its logarithm inside the branch, `2 asinh(|m - I|_F / 2)` outside.
#[inline]
pub fn factor_distance_to_identity(m: &Mat2) -> f64 {
    let fro = m.dist_to_identity_frobenius();
    if fro <= LOG_BRANCH_RADIUS {
        match log_mat(m) {
            Ok(c) => (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt(),
            Err(_) => 2.0 * (0.5 * fro).asinh(),
        }
    } else {
        2.0 * (0.5 * fro).asinh()
    }
}

/// Left-invariant distance surrogate `d(g, h)` built from `g^{-1} h`.
pub fn distance(g: &GroupElement, h: &GroupElement) -> Result<f64> {
    if g.k() != h.k() {
        return Err(Error::DimensionMismatch(g.k(), h.k()));
    }
    Ok(g.factors
        .iter()
        .zip(&h.factors)
        .map(|(a, b)| factor_distance_to_identity(&a.adjugate().mul(b)))
        .sum())
}

/// The flow data: expansion exponent and the factor the flows act on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowGenerators {
    pub k: usize,
    pub alpha: f64,
    pub active_factor: usize,
}

impl FlowGenerators {
    pub fn new(k: usize) -> Self {
        FlowGenerators {
            k,
            alpha: 1.0,
            active_factor: 0,
        }
    }

    pub fn u(&self, t: f64) -> GroupElement {
        unipotent_u(self.k, t)
    }

    pub fn a(&self, t: f64) -> Result<GroupElement> {
        diagonal_a(self.k, t)
    }

    /// Unit vector of the unipotent direction in the active factor.
    pub fn unipotent_direction(&self) -> LieAlgebraElement {
        LieAlgebraElement::basis(self.k, 3 * self.active_factor)
    }
}
