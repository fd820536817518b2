//! Reduction of `h = g^{-1}` under the left action of Gamma.

use crate::group::Mat2;

use super::{Lattice, OInt, QuadraticField};

/// Relative slack used when comparing against fundamental-domain walls.
const WALL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReduceOutcome {
    pub iterations: usize,
    /// Set when the iteration budget ran out while the height was still
    /// increasing (the point is deep in a cusp).
    pub best_effort: bool,
}

#[inline]
fn translate(h: &mut Mat2, n: f64) {
    // T^{-n} h
    h.m11 -= n * h.m21;
    h.m12 -= n * h.m22;
}

#[inline]
fn invert(h: &mut Mat2) {
    // S h with S = [[0, -1], [1, 0]]
    *h = Mat2::new(-h.m21, -h.m22, h.m11, h.m12);
}

/// Exact Gauss reduction into the standard fundamental domain of SL2(Z).
///
/// On exit `h.i` has `Re z` in `(-1/2, 1/2]`, `|z| >= 1`, with `Re z >= 0`
/// on the unit circle, and the sign of `h` fixed so that `theta` lies in
/// `(-pi/2, pi/2]`.
pub fn reduce_modular(h: &mut Mat2, max_iters: usize) -> ReduceOutcome {
    let mut out = ReduceOutcome::default();
    loop {
        out.iterations += 1;
        let n2 = h.m21 * h.m21 + h.m22 * h.m22;
        let x = (h.m11 * h.m21 + h.m12 * h.m22) / n2;
        let shift = (x - 0.5).ceil();
        if shift != 0.0 {
            translate(h, shift);
        }
        let num = h.m11 * h.m11 + h.m12 * h.m12;
        if num < n2 * (1.0 - WALL_TOL) {
            if out.iterations >= max_iters {
                out.best_effort = true;
                break;
            }
            invert(h);
            continue;
        }
        break;
    }
    let n2 = h.m21 * h.m21 + h.m22 * h.m22;
    let num = h.m11 * h.m11 + h.m12 * h.m12;
    let x = (h.m11 * h.m21 + h.m12 * h.m22) / n2;
    if (num - n2).abs() <= n2 * WALL_TOL && x < 0.0 {
        invert(h);
        let n2 = h.m21 * h.m21 + h.m22 * h.m22;
        let x = (h.m11 * h.m21 + h.m12 * h.m22) / n2;
        let shift = (x - 0.5).ceil();
        if shift != 0.0 {
            translate(h, shift);
        }
    }
    normalize_sign(std::slice::from_mut(h));
    out
}

/// Multiplies every factor by -1 (the central element of Gamma) if needed
/// so that the first factor has `theta` in `(-pi/2, pi/2]`.
pub(crate) fn normalize_sign(h: &mut [Mat2]) {
    let f = &h[0];
    if f.m22 < 0.0 || (f.m22 == 0.0 && f.m21 < 0.0) {
        for m in h.iter_mut() {
            *m = m.neg();
        }
    }
}

#[inline]
fn z_of(h: &Mat2) -> (f64, f64) {
    let n2 = h.m21 * h.m21 + h.m22 * h.m22;
    ((h.m11 * h.m21 + h.m12 * h.m22) / n2, 1.0 / n2)
}

/// Best-effort reduction for SL2(O) acting on a pair of half planes:
/// translate by the nearest ring element, balance the two heights with a
/// unit power, and invert (after a bounded translation search) while the
/// product of heights increases.
pub fn reduce_hilbert(lat: &Lattice, f: &QuadraticField, h: &mut [Mat2]) -> ReduceOutcome {
    let mut out = ReduceOutcome::default();
    let (e1, e2) = f.unit_embeddings;
    let log_ratio = (e1 / e2).abs().ln();
    let m_max = lat.params.m_max;
    loop {
        out.iterations += 1;
        // translation
        let (x1, _) = z_of(&h[0]);
        let (x2, _) = z_of(&h[1]);
        let nu = f.nearest_element(x1, x2);
        if !nu.is_zero() {
            let (n1, n2) = f.embed(nu);
            translate(&mut h[0], n1);
            translate(&mut h[1], n2);
        }
        // unit balancing: z_i -> eps_i^{2m} z_i
        let (_, y1) = z_of(&h[0]);
        let (_, y2) = z_of(&h[1]);
        let m = (-(y1 / y2).ln() / (2.0 * log_ratio)).round() as i64;
        let m = m.clamp(-(m_max as i64), m_max as i64) as i32;
        if m != 0 {
            let s1 = e1.powi(m);
            let s2 = e2.powi(m);
            for (hm, s) in h.iter_mut().zip([s1, s2]) {
                *hm = Mat2::new(hm.m11 * s, hm.m12 * s, hm.m21 / s, hm.m22 / s);
            }
            // re-translate after rescaling
            continue_if_budget(&mut out, lat);
            if out.best_effort {
                break;
            }
            continue;
        }
        // inversion after the best bounded translation
        let (x1, y1) = z_of(&h[0]);
        let (x2, y2) = z_of(&h[1]);
        let mut best: Option<(f64, OInt)> = None;
        for &nu in lat.search_translations() {
            let (n1, n2) = f.embed(nu);
            let r1 = (x1 - n1).powi(2) + y1 * y1;
            let r2 = (x2 - n2).powi(2) + y2 * y2;
            let prod = r1 * r2;
            if prod < 1.0 - WALL_TOL && best.map_or(true, |(b, _)| prod < b) {
                best = Some((prod, nu));
            }
        }
        match best {
            Some((_, nu)) => {
                if out.iterations >= lat.params.max_reduce_iters {
                    out.best_effort = true;
                    break;
                }
                let (n1, n2) = f.embed(nu);
                translate(&mut h[0], n1);
                translate(&mut h[1], n2);
                invert(&mut h[0]);
                invert(&mut h[1]);
            }
            None => break,
        }
    }
    normalize_sign(h);
    out
}

fn continue_if_budget(out: &mut ReduceOutcome, lat: &Lattice) {
    if out.iterations >= lat.params.max_reduce_iters {
        out.best_effort = true;
    }
}

/// Reduces `h` in place for the given lattice.
pub fn reduce_in_place(lat: &Lattice, h: &mut [Mat2]) -> ReduceOutcome {
    match lat.field() {
        None => reduce_modular(&mut h[0], lat.params.max_reduce_iters),
        Some(f) => reduce_hilbert(lat, f, h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::ChartCoord;

    fn z_after(x: f64, y: f64) -> (f64, f64) {
        let mut h = ChartCoord::new(x, y, 0.0).to_matrix();
        reduce_modular(&mut h, 1000);
        z_of(&h)
    }

    #[test]
    fn integer_translation() {
        let (x, y) = z_after(7.0, 1.0);
        assert!(x.abs() < 1e-12 && (y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fundamental_domain_point_unchanged() {
        let (x, y) = z_after(0.25, 3.0);
        assert!((x - 0.25).abs() < 1e-15 && (y - 3.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_tie_breaks() {
        let (x, _) = z_after(-0.5, 2.0);
        assert!((x - 0.5).abs() < 1e-12);
        let t = 0.3f64;
        let (x, y) = z_after(-t.sin(), t.cos());
        assert!((x - t.sin()).abs() < 1e-12 && (y - t.cos()).abs() < 1e-12);
    }

    #[test]
    fn hilbert_identity_is_fixed() {
        let lat = Lattice::hilbert(2).unwrap();
        let mut h = vec![Mat2::IDENTITY; 2];
        reduce_in_place(&lat, &mut h);
        assert!(h[0].max_abs_diff(&Mat2::IDENTITY) < 1e-12);
        assert!(h[1].max_abs_diff(&Mat2::IDENTITY) < 1e-12);
    }

    #[test]
    fn hilbert_reduction_raises_height_product() {
        let lat = Lattice::hilbert(2).unwrap();
        let mut h = vec![
            ChartCoord::new(0.37, 0.05, 0.1).to_matrix(),
            ChartCoord::new(-1.3, 0.2, 0.4).to_matrix(),
        ];
        let before = z_of(&h[0]).1 * z_of(&h[1]).1;
        let out = reduce_in_place(&lat, &mut h);
        assert!(!out.best_effort);
        let after = z_of(&h[0]).1 * z_of(&h[1]).1;
        assert!(after > before);
    }
}
