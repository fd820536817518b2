//! Factor tables, almost primes and the Jurkat–Richert linear sieve,
//! including the dynamical pipeline with weights `a(n) = f(u(n) p)`.

mod bounds;
mod functions;
mod mertens;
mod pipeline;
mod weights_io;

use rayon::prelude::*;

use crate::error::{Error, Result};

pub use bounds::{
    brute_force_s, buchstab_rhs, remainder, sieve_bounds, sifted_sum, Density, SieveBoundsReport, SieveProblem,
    MAX_DIVISORS,
};
pub use functions::{LinearSieveFunctions, S_MAX};
pub use mertens::{mertens_check, u_tilde, MertensTable};
pub use pipeline::{
    admissible_alpha, dynamical_sieve_pipeline, u_tilde_cached, BumpSieveReport, PipelineReport, MERTENS_LIMIT,
};
pub use weights_io::{read_weights, write_weights, WeightFile};

/// Memory budget for a factor table (4 bytes per entry).
pub const MAX_TABLE_BYTES: u64 = 2 << 30;

/// Smallest-prime-factor table for `2..=n`, built by the linear sieve.
#[derive(Debug, Clone)]
pub struct FactorTable {
    n: u64,
    spf: Vec<u32>,
    primes: Vec<u32>,
}

impl FactorTable {
    pub fn build(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Range(format!("factor table needs N >= 2, got {n}")));
        }
        if (n + 1) * 4 > MAX_TABLE_BYTES || n > u32::MAX as u64 {
            return Err(Error::Capability(format!(
                "factor table for N = {n} exceeds the {} byte budget",
                MAX_TABLE_BYTES
            )));
        }
        let len = n as usize + 1;
        let mut spf = vec![0u32; len];
        let mut primes: Vec<u32> = Vec::new();
        for i in 2..len {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                let m = i * p as usize;
                if p > si || m >= len {
                    break;
                }
                spf[m] = p;
            }
        }
        Ok(FactorTable { n, spf, primes })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn spf(&self, m: u64) -> Result<u64> {
        self.check(m)?;
        if m < 2 {
            return Err(Error::Range("spf is defined for n >= 2".into()));
        }
        Ok(self.spf[m as usize] as u64)
    }

    pub fn is_prime(&self, m: u64) -> bool {
        m >= 2 && m <= self.n && self.spf[m as usize] as u64 == m
    }

    pub fn primes(&self) -> &[u32] {
        &self.primes
    }

    fn check(&self, m: u64) -> Result<()> {
        if m == 0 || m > self.n {
            return Err(Error::Range(format!("{m} outside 1..={}", self.n)));
        }
        Ok(())
    }

    /// Big Omega, with `Omega(1) = 0`.
    pub fn omega_count(&self, m: u64) -> Result<u32> {
        self.check(m)?;
        let mut m = m as usize;
        let mut c = 0;
        while m > 1 {
            m /= self.spf[m] as usize;
            c += 1;
        }
        Ok(c)
    }

    /// `Omega(n)` for every `0 <= n <= N` (entry 0 unused).
    pub fn omega_all(&self) -> Vec<u8> {
        let mut om = vec![0u8; self.spf.len()];
        for i in 2..self.spf.len() {
            om[i] = om[i / self.spf[i] as usize] + 1;
        }
        om
    }

    /// Prime factors with multiplicity, ascending.
    pub fn factorize(&self, m: u64) -> Result<Vec<u64>> {
        self.check(m)?;
        let mut m = m as usize;
        let mut out = Vec::new();
        while m > 1 {
            let p = self.spf[m] as usize;
            out.push(p as u64);
            m /= p;
        }
        Ok(out)
    }
}

/// `Omega(n)` by the table.
pub fn omega_count(table: &FactorTable, n: u64) -> Result<u32> {
    table.omega_count(n)
}

/// `{ n <= N : Omega(n) <= L }`, ascending; `1` is included.
pub fn almost_primes(l: u32, n: u64) -> Result<Vec<u64>> {
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![1]);
    }
    let t = FactorTable::build(n)?;
    let om = t.omega_all();
    Ok((1..=n).filter(|&m| (om[m as usize] as u32) <= l).collect())
}

/// Odd-only Eratosthenes bitset of primes below `limit`.
pub fn primes_below(limit: u64) -> Vec<u64> {
    if limit <= 2 {
        return Vec::new();
    }
    let half = (limit / 2) as usize; // index i <-> 2i + 1
    let mut composite = vec![0u64; half.div_ceil(64)];
    let mut i = 1usize;
    while (2 * i + 1) * (2 * i + 1) < limit as usize {
        if composite[i / 64] >> (i % 64) & 1 == 0 {
            let p = 2 * i + 1;
            let mut j = (p * p) / 2;
            while j < half {
                composite[j / 64] |= 1 << (j % 64);
                j += p;
            }
        }
        i += 1;
    }
    let mut out = vec![2u64];
    for i in 1..half {
        if composite[i / 64] >> (i % 64) & 1 == 0 && ((2 * i + 1) as u64) < limit {
            out.push((2 * i + 1) as u64);
        }
    }
    out
}

/// `V(z) = prod_{p in P, p < z} (1 - g(p))`.
pub fn v_of_z(z: f64, density: &Density, in_prime_set: &dyn Fn(u64) -> bool) -> f64 {
    primes_below(z.ceil() as u64)
        .into_iter()
        .filter(|&p| (p as f64) < z && in_prime_set(p))
        .map(|p| 1.0 - density.g_prime(p))
        .product()
}

/// Counts primes below `limit` with a segmented sieve (independent of the
/// linear sieve), splitting segments across threads.
pub fn segmented_prime_count(limit: u64) -> u64 {
    if limit <= 2 {
        return 0;
    }
    let root = (limit as f64).sqrt() as u64 + 1;
    let small = primes_below(root + 1);
    const SEG: u64 = 1 << 18;
    let segs = limit.div_ceil(SEG);
    (0..segs)
        .into_par_iter()
        .map(|s| {
            let lo = s * SEG;
            let hi = (lo + SEG).min(limit);
            let mut mark = vec![true; (hi - lo) as usize];
            for &p in &small {
                if p * p >= hi {
                    break;
                }
                let start = (lo.div_ceil(p) * p).max(p * p);
                let mut m = start;
                while m < hi {
                    mark[(m - lo) as usize] = false;
                    m += p;
                }
            }
            (lo..hi).zip(&mark).filter(|(n, &ok)| ok && *n >= 2).count() as u64
        })
        .sum()
}
