//! Grid envelopes of Lie derivatives `D_{V_1} ... D_{V_m} f`, `m <= l`.
//!
//! `(D_V f)(x) = d/dt f(exp(tV) x)`; on the inverse representative this is
//! right multiplication by `exp(-tV)`. Derivatives are taken on the local
//! lift (no reduction) by nested central differences. A bump is a product
//! of one factor per SL2 component and derivatives in different components
//! commute, so the bound for a mixed word is the product of per-component
//! bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{exp_mat, Mat2};
use crate::lattice::ChartCoord;

use super::{profile, wrap, BumpFunction, Observable};

pub const DEFAULT_SOBOLEV_ORDER: usize = 4;
const SAFETY: f64 = 1.1;
const GRID_NODES: usize = 9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevRecord {
    pub l: usize,
    pub value: f64,
    /// Basis used for the Lie derivatives, per factor.
    pub basis: String,
}

/// One component of a bump, without the amplitude.
fn component(center: &ChartCoord, w: &[f64; 3], periodic: bool, h: &Mat2) -> f64 {
    let c = ChartCoord::of(h);
    let mut dx = c.x - center.x;
    if periodic {
        dx = wrap(dx, 1.0);
    }
    let dth = wrap(c.theta - center.theta, std::f64::consts::PI);
    let d = [dx, c.y - center.y, dth];
    let mut v = 1.0;
    for j in 0..3 {
        let r = d[j] / w[j];
        if r.abs() >= 1.0 {
            return 0.0;
        }
        v *= profile(r);
    }
    v
}

fn basis_step(dir: usize, t: f64) -> Mat2 {
    let mut c = [0.0; 3];
    c[dir] = -t;
    exp_mat(&c)
}

/// Mixed derivative along `word` at `h` by nested central differences.
fn word_derivative(word: &[usize], step: f64, h: &Mat2, f: &dyn Fn(&Mat2) -> f64) -> f64 {
    let m = word.len();
    let mut acc = 0.0;
    for mask in 0..(1u32 << m) {
        let mut g = *h;
        let mut sign = 1.0;
        for (j, &dir) in word.iter().enumerate() {
            let s = if mask & (1 << j) != 0 { -1.0 } else { 1.0 };
            sign *= s;
            g = g.mul(&basis_step(dir, s * step));
        }
        acc += sign * f(&g);
    }
    acc / (2.0 * step).powi(m as i32)
}

/// `table[j]` = max over words of length `j` of the grid sup of one component.
fn component_table(center: &ChartCoord, w: &[f64; 3], periodic: bool, l: usize) -> Vec<f64> {
    let step = 0.005 * w.iter().copied().fold(f64::INFINITY, f64::min) / center.y.max(1.0);
    let nodes: Vec<ChartCoord> = (0..GRID_NODES.pow(3))
        .map(|i| {
            let idx = [i % GRID_NODES, (i / GRID_NODES) % GRID_NODES, i / (GRID_NODES * GRID_NODES)];
            let off = |j: usize| w[j] * (2.0 * (idx[j] as f64 + 0.5) / GRID_NODES as f64 - 1.0);
            ChartCoord::new(center.x + off(0), center.y + off(1), center.theta + off(2))
        })
        .collect();
    let f = |h: &Mat2| component(center, w, periodic, h);
    let mut table = vec![1.0];
    let mut words: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 1..=l {
        words = words
            .iter()
            .flat_map(|w| (0..3).map(move |d| {
                let mut v = w.clone();
                v.push(d);
                v
            }))
            .collect();
        let best = nodes
            .par_iter()
            .map(|c| {
                let h = c.to_matrix();
                words
                    .iter()
                    .map(|word| word_derivative(word, step, &h, &f).abs())
                    .fold(0.0, f64::max)
            })
            .reduce(|| 0.0, f64::max);
        table.push(best);
    }
    table
}

fn bump_norm(b: &BumpFunction, l: usize) -> f64 {
    let tables: Vec<Vec<f64>> = b
        .center
        .iter()
        .zip(&b.widths)
        .map(|(c, w)| component_table(c, w, b.periodic_x, l))
        .collect();
    // max over order splits j_1 + ... + j_k <= l
    fn best(tables: &[Vec<f64>], budget: usize) -> (f64, f64) {
        // returns (max product with total order 0, max product with total order >= 1)
        match tables.split_first() {
            None => (1.0, 0.0),
            Some((t, rest)) => {
                let mut zero = 0.0f64;
                let mut pos = 0.0f64;
                for (j, &v) in t.iter().enumerate().take(budget + 1) {
                    let (z, p) = best(rest, budget - j);
                    if j == 0 {
                        zero = zero.max(v * z);
                        pos = pos.max(v * p);
                    } else {
                        pos = pos.max(v * z.max(p));
                    }
                }
                (zero, pos)
            }
        }
    }
    let (zero, pos) = best(&tables, l);
    b.amplitude.abs() * zero.max(SAFETY * pos)
}

/// Certified grid envelope of `||f||_{inf,l}`.
pub fn sobolev_norm(f: &Observable, l: usize) -> Result<SobolevRecord> {
    for (_, b) in &f.terms {
        if l > b.order_cap {
            return Err(Error::Capability(format!(
                "Sobolev order {l} exceeds the certified cap {}",
                b.order_cap
            )));
        }
    }
    let mut value = if l == 0 { f.sup_bound() } else { f.constant.abs() };
    if l > 0 {
        for (c, b) in &f.terms {
            value += c.abs() * bump_norm(b, l);
        }
    }
    Ok(SobolevRecord {
        l,
        value,
        basis: "X=[[0,1],[0,0]], Y=[[0,0],[1,0]], Z=diag(1,-1) per factor".into(),
    })
}
