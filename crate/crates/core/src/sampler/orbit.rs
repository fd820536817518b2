//! Deterministic chunked orbit walks `t -> u(t) p`.
//!
//! The time list is cut into fixed-size chunks independent of the thread
//! count. Each chunk is seeded by a direct evaluation of `h u(-t_first)`
//! followed by reduction, then stepped incrementally with a reduction after
//! every step. Chunk results are combined in chunk order, so results do not
//! depend on how rayon schedules the chunks.

use rayon::prelude::*;

use crate::group::Mat2;
use crate::lattice::{reduce_in_place, ChartCoord, Lattice, QuotientPoint};
use crate::numeric::NeumaierSum;
use crate::observables::Observable;

pub const CHUNK: usize = 4096;

/// Inverse representative of `u(t) p`, walked along increasing (or any) times.
#[derive(Debug, Clone)]
pub struct OrbitWalker<'a> {
    lattice: &'a Lattice,
    h: Vec<Mat2>,
    t: f64,
    chart: Vec<ChartCoord>,
}

#[inline]
fn right_unipotent(h: &Mat2, s: f64) -> Mat2 {
    // h * u(-s)
    Mat2::new(h.m11, h.m12 - h.m11 * s, h.m21, h.m22 - h.m21 * s)
}

impl<'a> OrbitWalker<'a> {
    pub fn new(lattice: &'a Lattice, base: &[Mat2], t: f64) -> Self {
        let mut h = base.to_vec();
        h[0] = right_unipotent(&h[0], t);
        reduce_in_place(lattice, &mut h);
        let chart = h.iter().map(ChartCoord::of).collect();
        OrbitWalker { lattice, h, t, chart }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn chart(&self) -> &[ChartCoord] {
        &self.chart
    }

    pub fn inverse_rep(&self) -> &[Mat2] {
        &self.h
    }

    /// Moves to time `t` by one composition and one reduction.
    pub fn step_to(&mut self, t: f64) {
        self.h[0] = right_unipotent(&self.h[0], t - self.t);
        self.t = t;
        reduce_in_place(self.lattice, &mut self.h);
        for (c, h) in self.chart.iter_mut().zip(&self.h) {
            *c = ChartCoord::of(h);
        }
    }
}

/// Weighted sums `sum_i w_i f_j(u(t_i) p)` for each observable `f_j`.
pub fn orbit_sums(p: &QuotientPoint, times: &[f64], weights: Option<&[f64]>, obs: &[&Observable]) -> Vec<f64> {
    let base = p.inverse_rep();
    let lat = &*p.lattice;
    let partials: Vec<Vec<NeumaierSum>> = times
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(ci, chunk)| {
            let mut sums = vec![NeumaierSum::new(); obs.len()];
            let mut w = OrbitWalker::new(lat, &base, chunk[0]);
            for (i, &t) in chunk.iter().enumerate() {
                if i > 0 {
                    w.step_to(t);
                }
                let wt = weights.map_or(1.0, |ws| ws[ci * CHUNK + i]);
                for (s, f) in sums.iter_mut().zip(obs) {
                    s.add(wt * f.eval_chart(w.chart()));
                }
            }
            sums
        })
        .collect();
    let mut total = vec![NeumaierSum::new(); obs.len()];
    for part in partials {
        for (t, s) in total.iter_mut().zip(part) {
            t.add(s.value());
        }
    }
    total.iter().map(NeumaierSum::value).collect()
}

/// `f_j(u(t_i) p)` for every time, one vector per observable.
pub fn orbit_values(p: &QuotientPoint, times: &[f64], obs: &[&Observable]) -> Vec<Vec<f64>> {
    let base = p.inverse_rep();
    let lat = &*p.lattice;
    let per_chunk: Vec<Vec<Vec<f64>>> = times
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut vals = vec![Vec::with_capacity(chunk.len()); obs.len()];
            let mut w = OrbitWalker::new(lat, &base, chunk[0]);
            for (i, &t) in chunk.iter().enumerate() {
                if i > 0 {
                    w.step_to(t);
                }
                for (v, f) in vals.iter_mut().zip(obs) {
                    v.push(f.eval_chart(w.chart()));
                }
            }
            vals
        })
        .collect();
    let mut out = vec![Vec::with_capacity(times.len()); obs.len()];
    for chunk in per_chunk {
        for (o, v) in out.iter_mut().zip(chunk) {
            o.extend(v);
        }
    }
    out
}

/// Chart of the reduced inverse representative of `u(t) p`, by direct
/// evaluation.
pub fn direct_chart(p: &QuotientPoint, t: f64) -> Vec<ChartCoord> {
    OrbitWalker::new(&p.lattice, &p.inverse_rep(), t).chart().to_vec()
}
