//! Sieve bounds for the weights `a(n) = f(u(n) p)`, `1 <= n <= N`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::QuotientPoint;
use crate::numeric::neumaier;
use crate::observables::Observable;
use crate::sampler::orbit_values;

use super::bounds::{sieve_bounds, Density, SieveBoundsReport, SieveProblem};
use super::mertens::MertensTable;
use super::{primes_below, FactorTable};

/// Limit of the Mertens scan determining `u~(3 eps)`.
pub const MERTENS_LIMIT: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSieveReport {
    pub index: usize,
    pub degenerate: bool,
    pub bounds: SieveBoundsReport,
    pub lower_positive: bool,
    /// `sum_{n in Omega(L)} a(n)`.
    pub almost_prime_sum: f64,
    /// `sum_{Omega(L)} >= S_exact >= S_lower`.
    pub chain_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub n: u64,
    pub alpha: f64,
    pub epsilon: f64,
    pub s_target: f64,
    pub z: f64,
    pub level: f64,
    pub l: u32,
    pub u_tilde: u64,
    pub excluded_primes: usize,
    /// Hypothesis of the sieve for primes outside Q, checked on all
    /// `2 <= u < z` at prime and integer break points.
    pub mertens_hypothesis: bool,
    pub bumps: Vec<BumpSieveReport>,
    /// Empirical largest alpha with `R / N^0.99 < 1` over the scanned grid.
    pub admissible_alpha: Option<f64>,
}

/// `u~(eps)` over `z <= MERTENS_LIMIT`, sharing one prime table.
pub fn u_tilde_cached(eps: f64) -> u64 {
    static TABLE: OnceLock<MertensTable> = OnceLock::new();
    TABLE.get_or_init(|| MertensTable::new(MERTENS_LIMIT)).u_tilde(eps)
}

fn mertens_hypothesis(table: &MertensTable, z: f64, u_tilde: u64, eps: f64) -> Result<bool> {
    if z <= 2.0 {
        return Ok(true);
    }
    let mut u = 2.0;
    while u < z {
        let start = u.max(u_tilde as f64);
        let lhs = if start < z { table.log_product(start, z)? } else { 0.0 };
        let rhs = eps.ln_1p() + z.ln().ln() - u.ln().ln();
        if !(lhs < rhs) {
            return Ok(false);
        }
        u += 1.0;
    }
    Ok(true)
}

/// Largest `alpha` on `grid` whose remainder sum satisfies `R < N^0.99`
/// (weights indexed from 1; level `z^s_target`).
pub fn admissible_alpha(weights: &[f64], grid: &[f64], s_target: f64, excluded: &[u64], eps: f64) -> Option<f64> {
    let n = weights.len().saturating_sub(1) as f64;
    grid.iter()
        .copied()
        .filter(|&a| {
            let z = n.powf(a);
            if z < 2.0 {
                return false;
            }
            let prob = SieveProblem {
                weights: weights.to_vec(),
                excluded: excluded.to_vec(),
                density: Density::Reciprocal,
                z,
                level: z.powf(s_target),
                epsilon: eps,
            };
            sieve_bounds(&prob).is_ok_and(|r| r.remainder_sum < n.powf(0.99))
        })
        .fold(None, |acc: Option<f64>, a| Some(acc.map_or(a, |b| b.max(a))))
}

/// Runs the sieve on `a(n) = f_j(u(n) p)` for every observable `f_j`
/// (all weights come from one orbit pass).
pub fn dynamical_sieve_pipeline(
    fs: &[Observable],
    p: &QuotientPoint,
    n: u64,
    alpha: f64,
    epsilon: f64,
    s_target: f64,
    u_tilde: Option<u64>,
) -> Result<PipelineReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n < 2 {
        return Err(Error::Config("pipeline needs N >= 2".into()));
    }
    let nf = n as f64;
    let z = nf.powf(alpha).max(2.0);
    let level = z.powf(s_target);
    let l = (1.0 / alpha + 1e-9).floor() as u32 + 1;
    let table = MertensTable::new((z.ceil() as u64 + 2).max(16));
    let ut = match u_tilde {
        Some(u) => u,
        None => u_tilde_cached(3.0 * epsilon),
    };
    let excluded = primes_below(ut);
    let hyp = mertens_hypothesis(&table, z, ut, epsilon)?;
    let times: Vec<f64> = (1..=n).map(|m| m as f64).collect();
    let refs: Vec<&Observable> = fs.iter().collect();
    let values = orbit_values(p, &times, &refs);
    let ft = FactorTable::build(n)?;
    let omega = ft.omega_all();
    let mut bumps = Vec::with_capacity(fs.len());
    let mut first_weights = None;
    for (index, vals) in values.into_iter().enumerate() {
        if vals.iter().any(|&v| v < 0.0) {
            return Err(Error::Domain("sieve weights must be nonnegative".into()));
        }
        let mut weights = Vec::with_capacity(n as usize + 1);
        weights.push(0.0);
        weights.extend(vals);
        let degenerate = weights.iter().all(|&v| v == 0.0);
        let prob = SieveProblem {
            weights,
            excluded: excluded.clone(),
            density: Density::Reciprocal,
            z,
            level,
            epsilon,
        };
        let bounds = sieve_bounds(&prob)?;
        let almost_prime_sum = neumaier(
            (1..=n as usize)
                .filter(|&m| (omega[m] as u32) <= l)
                .map(|m| prob.weights[m]),
        );
        let tol = 1e-9 * (1.0 + bounds.a_total);
        let lower_ok = bounds.lower.map_or(true, |lo| lo <= bounds.exact + tol);
        let chain_holds = almost_prime_sum + tol >= bounds.exact && lower_ok;
        bumps.push(BumpSieveReport {
            index,
            degenerate,
            lower_positive: bounds.lower.is_some_and(|lo| lo > 0.0),
            bounds,
            almost_prime_sum,
            chain_holds,
        });
        if first_weights.is_none() {
            first_weights = Some(prob.weights);
        }
    }
    let grid = [1.0 / 12.0, 1.0 / 10.0, 1.0 / 9.0, 1.0 / 8.0, 1.0 / 7.0, 1.0 / 6.0, 1.0 / 5.0];
    let admissible = first_weights.and_then(|w| admissible_alpha(&w, &grid, s_target, &excluded, epsilon));
    Ok(PipelineReport {
        n,
        alpha,
        epsilon,
        s_target,
        z,
        level,
        l,
        u_tilde: ut,
        excluded_primes: excluded.len(),
        mertens_hypothesis: hyp,
        bumps,
        admissible_alpha: admissible,
    })
}
