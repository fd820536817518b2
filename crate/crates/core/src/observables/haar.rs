//! Haar integrals over the standard fundamental domain of SL2(Z) in
//! `(x, y, theta)`, with density `dx dy dtheta / y^2`, `theta` mod pi.
//!
//! The `y` integral is taken in `v = 1/y`, which turns the cusp into the
//! bounded interval `(0, 1/sqrt(1 - x^2)]` with unit density.

use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::lattice::ChartCoord;
use crate::numeric::integrate;

use super::{profile, profile_mass, wrap, BumpFunction, Observable};

/// Absolute tolerance of the fundamental-domain quadratures (unnormalized).
pub const FD_TOL: f64 = 1e-8;
const MAX_DEPTH: u32 = 30;

/// Unnormalized mass of the fundamental domain, by quadrature.
pub fn haar_total_mass() -> f64 {
    static MASS: OnceLock<f64> = OnceLock::new();
    *MASS.get_or_init(|| {
        let (area, _) = integrate(|x: f64| 1.0 / (1.0 - x * x).sqrt(), -0.5, 0.5, 1e-15, 40)
            .expect("fundamental domain area");
        let (circle, _) = integrate(|_| 1.0, -0.5 * PI, 0.5 * PI, 1e-15, 4).expect("fiber length");
        area * circle
    })
}

fn arc_v(x: f64) -> f64 {
    1.0 / (1.0 - x * x).sqrt()
}

/// Sub-intervals of `[lo, hi]` (mod `period`) inside the window
/// `[-period/2, period/2]`.
fn periodic_pieces(c: f64, w: f64, period: f64) -> Vec<(f64, f64)> {
    let c = wrap(c, period);
    let (lo, hi) = (c - w, c + w);
    let half = 0.5 * period;
    let mut out = Vec::new();
    if lo < -half {
        out.push((lo + period, half));
        out.push((-half, hi));
    } else if hi > half {
        out.push((lo, half));
        out.push((-half, hi - period));
    } else {
        out.push((lo, hi));
    }
    out
}

/// Normalized integral over the fundamental domain of `g(x, y, theta)`,
/// restricted to the given `x`-pieces, `y`-range and `theta`-pieces (all
/// other points must give zero).
fn restricted_integral<G: Fn(&ChartCoord) -> f64>(
    g: &G,
    x_pieces: &[(f64, f64)],
    y_range: (f64, f64),
    th_pieces: &[(f64, f64)],
    tol: f64,
) -> Result<f64> {
    let mut total = 0.0;
    let nx = x_pieces.len() as f64;
    let nth = th_pieces.len() as f64;
    for &(xa, xb) in x_pieces {
        let outer = |x: f64| -> f64 {
            let v_hi = arc_v(x).min(if y_range.0 > 0.0 { 1.0 / y_range.0 } else { f64::INFINITY });
            let v_lo = if y_range.1.is_finite() { 1.0 / y_range.1 } else { 0.0 };
            if v_lo >= v_hi {
                return 0.0;
            }
            let mid = |v: f64| -> f64 {
                let y = 1.0 / v;
                let mut acc = 0.0;
                for &(ta, tb) in th_pieces {
                    acc += integrate(|t| g(&ChartCoord::new(x, y, t)), ta, tb, tol / 64.0, MAX_DEPTH)
                        .map(|r| r.0)
                        .unwrap_or(f64::NAN);
                }
                acc
            };
            integrate(mid, v_lo, v_hi, tol / (8.0 * nth), MAX_DEPTH)
                .map(|r| r.0)
                .unwrap_or(f64::NAN)
        };
        let (v, _) = integrate(outer, xa, xb, tol / nx, MAX_DEPTH)?;
        if !v.is_finite() {
            return Err(Error::Tolerance("inner fundamental-domain quadrature failed".into()));
        }
        total += v;
    }
    Ok(total / haar_total_mass())
}

/// `int_{G/Gamma} g dmu` for any function of the reduced chart (k = 1).
pub fn fundamental_domain_integral<G: Fn(&ChartCoord) -> f64 + Sync>(g: &G, tol: f64) -> Result<f64> {
    restricted_integral(g, &[(-0.5, 0.5)], (0.0, f64::INFINITY), &[(-0.5 * PI, 0.5 * PI)], tol)
}

fn bump_integral(b: &BumpFunction) -> Result<f64> {
    let c = b.center[0];
    let w = b.widths[0];
    let y_lo = c.y - w[1];
    if y_lo >= 1.0 {
        // support box lies above the arc: the integral separates
        let (iy, _) = integrate(
            |y: f64| profile((y - c.y) / w[1]) / (y * y),
            c.y - w[1],
            c.y + w[1],
            1e-14,
            MAX_DEPTH,
        )?;
        let m = profile_mass();
        return Ok(b.amplitude * (w[0] * m) * iy * (w[2] * m) / haar_total_mass());
    }
    let xs = periodic_pieces(c.x, w[0], 1.0);
    let ths = periodic_pieces(c.theta, w[2], PI);
    let v = restricted_integral(
        &|p: &ChartCoord| b.eval_chart(std::slice::from_ref(p)),
        &xs,
        (y_lo.max(0.0), c.y + w[1]),
        &ths,
        FD_TOL,
    )?;
    Ok(v)
}

/// `int f dmu` for the modular surface, normalized to total mass 1.
pub fn haar_integral_k1(f: &Observable) -> Result<f64> {
    if f.k().is_some_and(|k| k != 1) {
        return Err(Error::Capability("Haar quadrature is only available for k = 1".into()));
    }
    let mut total = f.constant;
    for (c, b) in &f.terms {
        total += c * bump_integral(b)?;
    }
    Ok(total)
}
