//! Blocks `P_M = {(M + k)^(1+gamma)}` and their linearization
//! `M^(1+gamma) + (1+gamma) M^gamma k`, `0 <= k <= k_max`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::QuotientPoint;
use crate::observables::{sobolev_norm, Observable};

use super::orbit::{orbit_sums, OrbitWalker};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPair {
    pub m: u64,
    pub gamma_exp: f64,
    pub k_max: u64,
    pub exact_times: Vec<f64>,
    pub linear_times: Vec<f64>,
    /// `exact_times[k] - M^(1+gamma)`, computed without cancellation.
    pub exact_offsets: Vec<f64>,
    /// `linear_times[k] - M^(1+gamma)`.
    pub linear_offsets: Vec<f64>,
}

fn validate(m: u64, gamma_exp: f64) -> Result<u64> {
    if m < 2 {
        return Err(Error::Config(format!("block needs M >= 2, got {m}")));
    }
    if !(gamma_exp > 0.0 && gamma_exp < 0.5) {
        return Err(Error::Config(format!("block needs 0 < gamma < 1/2, got {gamma_exp}")));
    }
    let mf = m as f64;
    let k_max = (mf.powf(0.5 - gamma_exp) / (1.0 + gamma_exp)).floor() as u64;
    if k_max < 1 {
        return Err(Error::Domain(format!("degenerate block: k_max = 0 for M = {m}, gamma = {gamma_exp}")));
    }
    Ok(k_max)
}

pub fn block_decompose(m: u64, gamma_exp: f64) -> Result<BlockPair> {
    let k_max = validate(m, gamma_exp)?;
    let mf = m as f64;
    let e = 1.0 + gamma_exp;
    let start = mf.powf(e);
    let gap = e * mf.powf(gamma_exp);
    let exact_offsets: Vec<f64> = (0..=k_max)
        .map(|k| start * (e * (k as f64 / mf).ln_1p()).exp_m1())
        .collect();
    let linear_offsets: Vec<f64> = (0..=k_max).map(|k| gap * k as f64).collect();
    Ok(BlockPair {
        m,
        gamma_exp,
        k_max,
        exact_times: (0..=k_max).map(|k| (mf + k as f64).powf(e)).collect(),
        linear_times: linear_offsets.iter().map(|o| start + o).collect(),
        exact_offsets,
        linear_offsets,
    })
}

/// `max_k |exact_times[k] - linear_times[k]|`.
pub fn block_error(m: u64, gamma_exp: f64) -> Result<f64> {
    let b = block_decompose(m, gamma_exp)?;
    Ok(b
        .exact_offsets
        .iter()
        .zip(&b.linear_offsets)
        .map(|(a, l)| (a - l).abs())
        .fold(0.0, f64::max))
}

/// Leading Taylor remainder `(1+gamma) gamma / 2 * M^(gamma-1) * k_max^2`.
pub fn block_taylor_bound(m: u64, gamma_exp: f64) -> Result<f64> {
    let k_max = validate(m, gamma_exp)? as f64;
    Ok((1.0 + gamma_exp) * gamma_exp / 2.0 * (m as f64).powf(gamma_exp - 1.0) * k_max * k_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockComparison {
    pub m: u64,
    pub gamma_exp: f64,
    pub k_max: u64,
    pub exact_avg: f64,
    pub linear_avg: f64,
    pub gap: f64,
    pub block_error: f64,
    /// `||f||_{inf,1} * block_error`.
    pub lipschitz_bound: f64,
}

/// Averages of `f` over `u(P_M) p` and `u(~P_M) p`. Both sums run from the
/// common base `q = u(M^(1+gamma)) p` through the offsets.
pub fn block_average_compare(f: &Observable, p: &QuotientPoint, m: u64, gamma_exp: f64) -> Result<BlockComparison> {
    let b = block_decompose(m, gamma_exp)?;
    let start = (m as f64).powf(1.0 + gamma_exp);
    let w = OrbitWalker::new(&p.lattice, &p.inverse_rep(), start);
    let q = QuotientPoint::from_inverse_rep(p.lattice.clone(), w.inverse_rep().to_vec())?;
    let n = (b.k_max + 1) as f64;
    let exact_avg = orbit_sums(&q, &b.exact_offsets, None, &[f])[0] / n;
    let linear_avg = orbit_sums(&q, &b.linear_offsets, None, &[f])[0] / n;
    let err = b
        .exact_offsets
        .iter()
        .zip(&b.linear_offsets)
        .map(|(a, l)| (a - l).abs())
        .fold(0.0, f64::max);
    let norm = sobolev_norm(f, 1)?.value;
    Ok(BlockComparison {
        m,
        gamma_exp,
        k_max: b.k_max,
        exact_avg,
        linear_avg,
        gap: (exact_avg - linear_avg).abs(),
        block_error: err,
        lipschitz_bound: norm * err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_shape() {
        let b = block_decompose(10_000, 0.2).unwrap();
        assert_eq!(b.exact_times.len(), b.k_max as usize + 1);
        assert_eq!(b.linear_times.len(), b.k_max as usize + 1);
        assert_eq!(b.exact_times[0], b.linear_times[0]);
        let gap = 1.2 * 10f64.powf(0.8);
        assert!((b.linear_times[1] - b.linear_times[0] - gap).abs() < 1e-9);
        assert!(matches!(block_decompose(3, 0.45), Err(Error::Domain(_))));
    }

    #[test]
    fn error_matches_taylor_term() {
        for (m, g) in [(1_000_000u64, 0.1), (100_000, 0.3), (10_000, 0.2)] {
            let e = block_error(m, g).unwrap();
            let t = block_taylor_bound(m, g).unwrap();
            assert!(e <= 2.0 * t && t <= 2.0 * e, "{m} {g}: {e} vs {t}");
        }
        let e = block_error(1_000_000, 0.1).unwrap();
        assert!(e <= 1e6f64.powf(-0.1));
        let e = block_error(10_000, 0.4).unwrap();
        assert!(e <= 10f64.powf(-1.6) / 1.4);
    }

    #[test]
    fn error_scaling_in_m() {
        let r = block_error(200_000, 0.1).unwrap() / block_error(100_000, 0.1).unwrap();
        let want = 2f64.powf(-0.1);
        assert!((r / want - 1.0).abs() < 0.2, "{r}");
    }

    #[test]
    fn error_vanishes_as_gamma_shrinks() {
        let a = block_error(1_000_000, 0.01).unwrap();
        let b = block_error(1_000_000, 0.001).unwrap();
        assert!(b < a && b < 1e-3);
    }
}
