//! The Mertens-type inequality
//! `prod_{u <= p < z} (1 - 1/p)^(-1) < (1 + eps/3) ln z / ln u`
//! and the least `u~(eps)` from which it holds for every `z <= Z`.

use crate::error::{Error, Result};
use crate::numeric::NeumaierSum;

use super::primes_below;

/// Primes below `limit` with prefix sums of `-ln(1 - 1/p)`.
#[derive(Debug, Clone)]
pub struct MertensTable {
    pub limit: u64,
    primes: Vec<u64>,
    /// `prefix[i] = sum_{j < i} -ln(1 - 1/p_j)`.
    prefix: Vec<f64>,
}

impl MertensTable {
    pub fn new(limit: u64) -> Self {
        let primes = primes_below(limit);
        let mut prefix = Vec::with_capacity(primes.len() + 1);
        let mut acc = NeumaierSum::new();
        prefix.push(0.0);
        for &p in &primes {
            acc.add(-(-1.0 / p as f64).ln_1p());
            prefix.push(acc.value());
        }
        MertensTable { limit, primes, prefix }
    }

    /// Index of the first prime `>= x`.
    fn index_at_least(&self, x: f64) -> usize {
        self.primes.partition_point(|&p| (p as f64) < x)
    }

    /// `ln prod_{u <= p < z} (1 - 1/p)^(-1)`.
    pub fn log_product(&self, u: f64, z: f64) -> Result<f64> {
        if z > self.limit as f64 {
            return Err(Error::Range(format!("z = {z} beyond the table limit {}", self.limit)));
        }
        let (a, b) = (self.index_at_least(u), self.index_at_least(z));
        Ok(if b > a { self.prefix[b] - self.prefix[a] } else { 0.0 })
    }

    pub fn check(&self, u: f64, z: f64, eps: f64) -> Result<bool> {
        if !(u > 1.0 && z > u) {
            return Err(Error::Domain(format!("need 1 < u < z, got u = {u}, z = {z}")));
        }
        let lhs = self.log_product(u, z)?;
        let rhs = (eps / 3.0).ln_1p() + z.ln().ln() - u.ln().ln();
        Ok(lhs < rhs)
    }

    /// Least integer `u~ >= 2` such that the inequality holds for every real
    /// `u >= u~` and every `z` with `u < z <= limit`.
    ///
    /// For `u` in `(p_k, p_{k+1}]` the product does not depend on `u` while
    /// the right side decreases, so the binding case is `u = p_{k+1}`; for a
    /// given `u` the left side minus `ln ln z` is largest just above a prime.
    /// A suffix maximum over primes therefore decides every `u` at once.
    pub fn u_tilde(&self, eps: f64) -> u64 {
        let n = self.primes.len();
        if n == 0 {
            return 2;
        }
        let c = (eps / 3.0).ln_1p();
        // g[i] = S_incl(p_i) - ln ln p_i, sup of (S(z) - ln ln z) over z in (p_i, p_{i+1}]
        let mut suffix = vec![f64::NEG_INFINITY; n + 1];
        for i in (0..n).rev() {
            let p = self.primes[i] as f64;
            let g = self.prefix[i + 1] - p.ln().ln();
            suffix[i] = suffix[i + 1].max(g);
        }
        let mut last_fail: Option<usize> = None;
        for i in 0..n {
            let p = self.primes[i] as f64;
            let h = self.prefix[i] - p.ln().ln() + c;
            if !(suffix[i] < h) {
                last_fail = Some(i);
            }
        }
        match last_fail {
            None => 2,
            Some(i) => self.primes[i] + 1,
        }
    }
}

/// Direct check of the inequality (builds a prime table up to `z`).
pub fn mertens_check(u: f64, z: f64, eps: f64) -> Result<bool> {
    MertensTable::new(z.ceil() as u64 + 1).check(u, z, eps)
}

/// `u~(eps)` over `z <= limit`.
pub fn u_tilde(eps: f64, limit: u64) -> u64 {
    MertensTable::new(limit).u_tilde(eps)
}
