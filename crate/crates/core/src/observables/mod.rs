//! Smooth compactly supported observables on G/Gamma, their Sobolev
//! envelopes, the smoothing kernels `g_{delta,n,gamma}`, and Haar integrals.

mod haar;
mod kernel;
mod sobolev;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{reduce, ChartCoord, QuotientPoint};
use crate::numeric;

pub use haar::{fundamental_domain_integral, haar_integral_k1, haar_total_mass, FD_TOL};
pub use kernel::{profile_cdf, SmoothingKernel};
pub use sobolev::{sobolev_norm, SobolevRecord, DEFAULT_SOBOLEV_ORDER};

/// `exp(1 + 1/(r^2 - 1))` on `|r| < 1`, zero elsewhere: the standard
/// mollifier scaled to peak value 1.
#[inline]
pub fn profile(r: f64) -> f64 {
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 + 1.0 / (r2 - 1.0)).exp()
    }
}

/// `int_{-1}^{1} profile(r) dr`.
pub fn profile_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        numeric::integrate(profile, -1.0, 1.0, 1e-15, 40)
            .expect("profile quadrature")
            .0
    })
}

/// Wrap into `(-period/2, period/2]`.
#[inline]
pub(crate) fn wrap(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

/// Product bump in the Iwasawa coordinates `(x, y, theta)` of each factor
/// of the reduced inverse representative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpFunction {
    pub center: Vec<ChartCoord>,
    /// Half-widths `[w_x, w_y, w_theta]` per factor.
    pub widths: Vec<[f64; 3]>,
    pub amplitude: f64,
    /// Highest Lie-derivative order with a certified envelope.
    pub order_cap: usize,
    /// Whether `x` is read modulo 1 (k = 1, where `x -> x + 1` is in Gamma).
    pub periodic_x: bool,
}

pub const DEFAULT_ORDER_CAP: usize = 6;

impl BumpFunction {
    pub fn new(center: &QuotientPoint, widths: Vec<[f64; 3]>, amplitude: f64) -> Result<Self> {
        let k = center.k();
        if widths.len() != k {
            return Err(Error::DimensionMismatch(widths.len(), k));
        }
        if widths.iter().flatten().any(|w| !(*w > 0.0)) {
            return Err(Error::Config("bump widths must be positive".into()));
        }
        if widths.iter().any(|w| w[0] >= 0.5 || w[2] >= 0.5 * PI) {
            return Err(Error::Config(
                "bump half-widths must stay below 1/2 in x and pi/2 in theta".into(),
            ));
        }
        let c = reduce(center).chart();
        if widths.iter().zip(&c).any(|(w, c)| w[1] >= c.y) {
            return Err(Error::Config("bump y half-width must be below the centre height".into()));
        }
        Ok(BumpFunction {
            center: c,
            widths,
            amplitude,
            order_cap: DEFAULT_ORDER_CAP,
            periodic_x: k == 1,
        })
    }

    pub fn k(&self) -> usize {
        self.center.len()
    }

    /// Offsets of `chart` from the centre in each coordinate, with the
    /// identifications `x ~ x + 1` (k = 1) and `(theta_i) ~ (theta_i + pi)`.
    #[inline]
    pub fn offsets<'a>(&'a self, chart: &'a [ChartCoord]) -> impl Iterator<Item = [f64; 3]> + 'a {
        let shift = ((chart[0].theta - self.center[0].theta) / PI).round();
        let periodic = self.periodic_x;
        chart.iter().zip(&self.center).map(move |(p, c)| {
            let mut dx = p.x - c.x;
            if periodic {
                dx = wrap(dx, 1.0);
            }
            let dt = wrap(p.theta - c.theta - shift * PI, 2.0 * PI);
            [dx, p.y - c.y, dt]
        })
    }

    /// Value at a point given by the chart of its reduced representative.
    #[inline]
    pub fn eval_chart(&self, chart: &[ChartCoord]) -> f64 {
        let mut v = self.amplitude;
        for (d, w) in self.offsets(chart).zip(&self.widths) {
            for j in 0..3 {
                let r = d[j] / w[j];
                if r.abs() >= 1.0 {
                    return 0.0;
                }
                v *= profile(r);
            }
        }
        v
    }

    pub fn evaluate(&self, p: &QuotientPoint) -> f64 {
        self.eval_chart(&reduce(p).chart())
    }

    /// Same bump with all widths scaled by `s`.
    pub fn dilate(&self, s: f64) -> Self {
        let mut b = self.clone();
        for w in b.widths.iter_mut() {
            for x in w.iter_mut() {
                *x *= s;
            }
        }
        b
    }
}

/// `constant + sum_j coefficient_j * bump_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Observable {
    pub terms: Vec<(f64, BumpFunction)>,
    pub constant: f64,
}

impl Observable {
    pub fn constant(c: f64) -> Self {
        Observable {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn bump(b: BumpFunction) -> Self {
        Observable {
            terms: vec![(1.0, b)],
            constant: 0.0,
        }
    }

    pub fn plus(mut self, coeff: f64, b: BumpFunction) -> Self {
        self.terms.push((coeff, b));
        self
    }

    pub fn shifted(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    /// `c1 * self + c2 * other`.
    pub fn combine(&self, c1: f64, other: &Observable, c2: f64) -> Observable {
        let mut terms: Vec<(f64, BumpFunction)> =
            self.terms.iter().map(|(c, b)| (c1 * c, b.clone())).collect();
        terms.extend(other.terms.iter().map(|(c, b)| (c2 * c, b.clone())));
        Observable {
            terms,
            constant: c1 * self.constant + c2 * other.constant,
        }
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == 0.0)
    }

    pub fn k(&self) -> Option<usize> {
        self.terms.first().map(|(_, b)| b.k())
    }

    /// Smallest half-width over all bumps and coordinates.
    pub fn min_width(&self) -> f64 {
        self.terms
            .iter()
            .flat_map(|(_, b)| b.widths.iter().flatten().copied())
            .fold(f64::INFINITY, f64::min)
    }

    #[inline]
    pub fn eval_chart(&self, chart: &[ChartCoord]) -> f64 {
        let mut v = self.constant;
        for (c, b) in &self.terms {
            v += c * b.eval_chart(chart);
        }
        v
    }

    pub fn evaluate(&self, p: &QuotientPoint) -> f64 {
        if self.is_constant() {
            return self.constant;
        }
        self.eval_chart(&reduce(p).chart())
    }

    /// `sup |f|` bound: `|constant| + sum |c_j| * amplitude_j`.
    pub fn sup_bound(&self) -> f64 {
        self.constant.abs() + self.terms.iter().map(|(c, b)| (c * b.amplitude).abs()).sum::<f64>()
    }
}
