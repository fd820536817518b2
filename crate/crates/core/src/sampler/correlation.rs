//! Correlations `int f(phi x) g(x) dmu(x)` on the modular surface.
//!
//! Each bump of `g` is integrated in the local coordinates
//! `x = v(w) a(r) u(s) x_c` around its centre (`v` lower unipotent). The
//! Haar density there is `J0 e^r`, and left translation by `a(t)` stretches
//! only the `s` direction, so only that direction needs `e^t` times more
//! nodes (on top of a fixed resolution of the bump itself). A node is counted when its unreduced chart lies in the bump box
//! and, after the integer `x` shift, in the fundamental domain; every point
//! of the support is then counted exactly once.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{self, LieAlgebraElement, Mat2};
use crate::lattice::{reduce_in_place, ChartCoord, Lattice};
use crate::numeric::{gauss_legendre, NeumaierSum};
use crate::observables::{haar_integral_k1, haar_total_mass, BumpFunction, Observable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flow {
    Geodesic,
    Horocycle,
}

const ORDER: usize = 8;
/// Panels per direction resolving the bump of `g` itself.
const BASE_PANELS: f64 = 8.0;
/// Panels per unit of flow stretch resolving `f` after the flow.
const FLOW_PANELS: f64 = 2.0;
const FACE_SAMPLES: usize = 16;

fn lower(w: f64) -> Mat2 {
    Mat2::new(1.0, 0.0, w, 1.0)
}

/// Inverse representative of `v(w) a(r) u(s) x_c`.
#[inline]
fn node_h(hc: &Mat2, s: f64, r: f64, w: f64) -> Mat2 {
    hc.mul(&Mat2::unipotent(-s)).mul(&Mat2::diagonal(-r)).mul(&lower(-w))
}

fn wrap(d: f64, period: f64) -> f64 {
    d - period * (d / period).round()
}

/// Raw chart offsets from the centre (no `x` periodicity, `theta` mod pi),
/// scaled by the half-widths.
#[inline]
fn scaled_offsets(b: &BumpFunction, c: &ChartCoord) -> [f64; 3] {
    let ctr = b.center[0];
    let w = b.widths[0];
    [
        (c.x - ctr.x) / w[0],
        (c.y - ctr.y) / w[1],
        wrap(c.theta - ctr.theta, PI) / w[2],
    ]
}

#[inline]
fn in_raw_box(b: &BumpFunction, c: &ChartCoord) -> bool {
    scaled_offsets(b, c).iter().all(|d| d.abs() < 1.0)
}

/// Bump value at a node, zero unless the node is the fundamental-domain lift.
#[inline]
fn principal_value(b: &BumpFunction, h: &Mat2) -> f64 {
    let c = ChartCoord::of(h);
    if !in_raw_box(b, &c) {
        return 0.0;
    }
    let xw = wrap(c.x, 1.0);
    if xw * xw + c.y * c.y < 1.0 {
        return 0.0;
    }
    b.eval_chart(&[ChartCoord::new(xw, c.y, c.theta)])
}

fn chart_vec(h: &Mat2) -> [f64; 3] {
    let c = ChartCoord::of(h);
    [c.x, c.y, c.theta]
}

/// `|det d(x, y, theta)/d(s, r, w)| / y^2` at the centre.
fn jacobian(hc: &Mat2) -> [[f64; 3]; 3] {
    let e = 1e-6;
    let mut j = [[0.0; 3]; 3];
    for dir in 0..3 {
        let mut p = [0.0; 3];
        let mut m = [0.0; 3];
        p[dir] = e;
        m[dir] = -e;
        let cp = chart_vec(&node_h(hc, p[0], p[1], p[2]));
        let cm = chart_vec(&node_h(hc, m[0], m[1], m[2]));
        for row in 0..3 {
            let mut d = cp[row] - cm[row];
            if row == 2 {
                d = wrap(d, 2.0 * PI);
            }
            j[row][dir] = d / (2.0 * e);
        }
    }
    j
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn solve3(m: &[[f64; 3]; 3], b: [f64; 3]) -> [f64; 3] {
    let d = det3(m);
    let mut out = [0.0; 3];
    for i in 0..3 {
        let mut mi = *m;
        for row in 0..3 {
            mi[row][i] = b[row];
        }
        out[i] = det3(&mi) / d;
    }
    out
}

/// Local Haar density constant `J0` (unnormalized chart measure).
pub(crate) fn density_constant(hc: &Mat2) -> f64 {
    let y = ChartCoord::of(hc).y;
    det3(&jacobian(hc)).abs() / (y * y)
}

/// Half-sizes `[S, R, W]` of a coordinate box containing the bump support.
fn support_box(b: &BumpFunction, hc: &Mat2) -> Result<[f64; 3]> {
    let j = jacobian(hc);
    let w = b.widths[0];
    let mut half = [0.0f64; 3];
    for sx in [-1.0, 1.0] {
        for sy in [-1.0, 1.0] {
            for st in [-1.0, 1.0] {
                let v = solve3(&j, [sx * w[0], sy * w[1], st * w[2]]);
                for i in 0..3 {
                    half[i] = half[i].max(v[i].abs());
                }
            }
        }
    }
    for h in half.iter_mut() {
        *h *= 1.2;
    }
    let n = FACE_SAMPLES;
    let grid = |i: usize| -1.0 + 2.0 * i as f64 / (n - 1) as f64;
    for _ in 0..10 {
        let mut clear = true;
        'faces: for axis in 0..3 {
            for side in [-1.0, 1.0] {
                for i in 0..n {
                    for k in 0..n {
                        let mut u = [0.0; 3];
                        u[axis] = side;
                        u[(axis + 1) % 3] = grid(i);
                        u[(axis + 2) % 3] = grid(k);
                        let h = node_h(hc, u[0] * half[0], u[1] * half[1], u[2] * half[2]);
                        if in_raw_box(b, &ChartCoord::of(&h)) {
                            clear = false;
                            break 'faces;
                        }
                    }
                }
            }
        }
        if clear {
            return Ok(half);
        }
        for h in half.iter_mut() {
            *h *= 1.3;
        }
    }
    Err(Error::Tolerance("could not enclose the bump support in a coordinate box".into()))
}

fn panel_rule(half: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let (gx, gw) = gauss_legendre(ORDER);
    let h = 2.0 * half / panels as f64;
    let mut xs = Vec::with_capacity(panels * ORDER);
    let mut ws = Vec::with_capacity(panels * ORDER);
    for p in 0..panels {
        let lo = -half + h * p as f64;
        for (x, w) in gx.iter().zip(&gw) {
            xs.push(lo + 0.5 * h * (x + 1.0));
            ws.push(0.5 * h * w);
        }
    }
    (xs, ws)
}

/// `int F(phi x) b(x) dmu(x)` for one bump (normalized Haar measure).
/// `phi_inv` is applied on the right of inverse representatives;
/// `growth` holds the stretch factors of the `s`, `r`, `w` directions.
fn bump_box_integral(
    lat: &Lattice,
    f: &Observable,
    b: &BumpFunction,
    phi_inv: &Mat2,
    growth: [f64; 3],
) -> Result<f64> {
    let hc = b.center[0].to_matrix();
    let half = support_box(b, &hc)?;
    let j0 = density_constant(&hc);
    let panels = |i: usize| BASE_PANELS.max(FLOW_PANELS * growth[i]).ceil() as usize;
    let (ss, sw) = panel_rule(half[0], panels(0));
    let (rs, rw) = panel_rule(half[1], panels(1));
    let (ws, ww) = panel_rule(half[2], panels(2));
    let f_const = f.is_constant();
    let parts: Vec<f64> = ss
        .par_chunks(ORDER * 16)
        .zip(sw.par_chunks(ORDER * 16))
        .map(|(sc, swc)| {
            let mut acc = NeumaierSum::new();
            for (&s, &wts) in sc.iter().zip(swc) {
                let hs = hc.mul(&Mat2::unipotent(-s));
                let mut line = 0.0;
                for (&r, &wtr) in rs.iter().zip(&rw) {
                    let hr = hs.mul(&Mat2::diagonal(-r));
                    let dens = r.exp();
                    for (&w, &wtw) in ws.iter().zip(&ww) {
                        let h = hr.mul(&lower(-w));
                        let bv = principal_value(b, &h);
                        if bv == 0.0 {
                            continue;
                        }
                        let fv = if f_const {
                            f.constant
                        } else {
                            let mut hp = [h.mul(phi_inv)];
                            reduce_in_place(lat, &mut hp);
                            f.eval_chart(&[ChartCoord::of(&hp[0])])
                        };
                        line += wtr * wtw * dens * bv * fv;
                    }
                }
                acc.add(wts * line);
            }
            acc.value()
        })
        .collect();
    let mut total = NeumaierSum::new();
    for v in parts {
        total.add(v);
    }
    Ok(total.value() * j0 / haar_total_mass())
}

fn flow_data(flow: Flow, t: f64) -> Result<(Mat2, [f64; 3])> {
    let phi = match flow {
        Flow::Geodesic => group::diagonal_a(1, t)?,
        Flow::Horocycle => group::unipotent_u(1, t),
    };
    let mut growth = [1.0; 3];
    // s <-> X, r <-> Z, w <-> Y
    for (slot, idx) in [(0usize, 0usize), (1, 2), (2, 1)] {
        let v = LieAlgebraElement::basis(1, idx);
        growth[slot] = group::adjoint(&phi, &v)?.norm() / v.norm();
    }
    Ok((phi.factors[0].adjugate(), growth))
}

/// `int f(flow(t) x) g(x) dmu(x)` on the modular surface.
pub fn correlation(f: &Observable, g: &Observable, t: f64, flow: Flow) -> Result<f64> {
    for o in [f, g] {
        if o.k().is_some_and(|k| k != 1) {
            return Err(Error::Capability("correlations need the modular lattice (k = 1)".into()));
        }
    }
    // invariance of mu
    if f.is_constant() {
        return Ok(f.constant * haar_integral_k1(g)?);
    }
    let lat = Lattice::modular();
    let (phi_inv, growth) = flow_data(flow, t)?;
    let mut total = NeumaierSum::new();
    total.add(g.constant * haar_integral_k1(f)?);
    for (c, b) in &g.terms {
        if *c != 0.0 {
            total.add(c * bump_box_integral(&lat, f, b, &phi_inv, growth)?);
        }
    }
    Ok(total.value())
}
