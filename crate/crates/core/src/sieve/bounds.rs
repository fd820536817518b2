use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::neumaier;

use super::functions::LinearSieveFunctions;
use super::primes_below;

/// Upper limit on the number of divisors enumerated for `R`.
pub const MAX_DIVISORS: usize = 1 << 24;

/// Sieve density `g` on squarefree `d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// `g(d) = 1/d`.
    #[default]
    Reciprocal,
}

impl Density {
    pub fn g_prime(&self, p: u64) -> f64 {
        match self {
            Density::Reciprocal => 1.0 / p as f64,
        }
    }

    pub fn g(&self, d: u64) -> f64 {
        match self {
            Density::Reciprocal => 1.0 / d as f64,
        }
    }
}

/// Finite sequence `A = (a(n))_{1 <= n <= N}` with sieve data. `weights[0]`
/// is ignored. The sieve runs over all primes below `z`; `excluded` is the
/// finite set `Q` exempt from the Mertens hypothesis, which enlarges the
/// level to `D * prod Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SieveProblem {
    pub weights: Vec<f64>,
    pub excluded: Vec<u64>,
    pub density: Density,
    pub z: f64,
    pub level: f64,
    pub epsilon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SieveBoundsReport {
    pub z: f64,
    pub level: f64,
    pub s: f64,
    pub a_total: f64,
    pub v_z: f64,
    pub x_main: f64,
    pub remainder_sum: f64,
    pub divisor_count: usize,
    pub big_f: f64,
    pub small_f: f64,
    pub upper: f64,
    /// Only available when `D >= z^2`.
    pub lower: Option<f64>,
    pub exact: f64,
    pub holds: bool,
}

impl SieveProblem {
    pub fn n(&self) -> usize {
        self.weights.len().saturating_sub(1)
    }

    pub fn a_total(&self) -> f64 {
        neumaier(self.weights.iter().skip(1).copied())
    }

    fn sieving_primes(&self) -> Vec<u64> {
        primes_below(self.z.ceil() as u64 + 1)
            .into_iter()
            .filter(|&p| (p as f64) < self.z)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.weights.len() < 2 {
            return Err(Error::Config("sieve problem needs N >= 1".into()));
        }
        if !(self.z >= 2.0) || !(self.level >= self.z) {
            return Err(Error::Config(format!(
                "need z >= 2 and D >= z (z = {}, D = {})",
                self.z, self.level
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0 / 200.0) {
            return Err(Error::Config(format!("epsilon must lie in (0, 1/200), got {}", self.epsilon)));
        }
        Ok(())
    }
}

/// `sum_{d | n <= N, (n, P(w)) = 1} a(n)` with `P(w)` the product of all
/// primes below `w`.
pub fn sifted_sum(weights: &[f64], d: u64, w: f64) -> f64 {
    let n = weights.len().saturating_sub(1);
    let mut coprime = vec![true; n + 1];
    for p in primes_below(w.ceil() as u64 + 1) {
        if (p as f64) >= w {
            break;
        }
        let p = p as usize;
        let mut m = p;
        while m <= n {
            coprime[m] = false;
            m += p;
        }
    }
    let d = d as usize;
    neumaier((1..=n / d).map(|j| j * d).filter(|&m| coprime[m]).map(|m| weights[m]))
}

/// `S(A, P, z)` by direct scan.
pub fn brute_force_s(problem: &SieveProblem) -> f64 {
    sifted_sum(&problem.weights, 1, problem.z)
}

/// Right side of Buchstab's identity:
/// `S(A, z') - sum_{z' <= p < z} S(A_p, p)` for `2 <= z' <= z`.
pub fn buchstab_rhs(weights: &[f64], z: f64, z_prime: f64) -> f64 {
    let mut total = sifted_sum(weights, 1, z_prime);
    for p in primes_below(z.ceil() as u64 + 1) {
        let pf = p as f64;
        if pf >= z_prime && pf < z {
            total -= sifted_sum(weights, p, pf);
        }
    }
    total
}

/// `r(d) = |A_d| - g(d) |A|`.
pub fn remainder(problem: &SieveProblem, d: u64) -> f64 {
    let n = problem.n();
    let d_us = d as usize;
    let ad = if d_us == 0 || d_us > n {
        0.0
    } else {
        neumaier((1..=n / d_us).map(|j| problem.weights[j * d_us]))
    };
    ad - problem.density.g(d) * problem.a_total()
}

/// Squarefree divisors of `prod primes` below `bound` (given by its
/// logarithm; compared exactly while the bound is below 2^53).
fn divisors_below(primes: &[u64], log_bound: f64) -> Result<Vec<u64>> {
    let exact = (log_bound < 53.0 * std::f64::consts::LN_2).then(|| log_bound.exp());
    let mut out = vec![1u64];
    let mut stack: Vec<(u64, f64, usize)> = vec![(1, 0.0, 0)];
    while let Some((d, ld, start)) = stack.pop() {
        for (i, &p) in primes.iter().enumerate().skip(start) {
            let l = ld + (p as f64).ln();
            let nd = d.saturating_mul(p);
            let below = match exact {
                Some(b) => (nd as f64) < b,
                None => l < log_bound,
            };
            if !below {
                break;
            }
            out.push(nd);
            if out.len() > MAX_DIVISORS {
                return Err(Error::Budget(format!(
                    "more than {MAX_DIVISORS} divisors below the level"
                )));
            }
            stack.push((nd, l, i + 1));
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Jurkat–Richert bounds
/// `(f(s) - eps e^{14-s}) X - R <= S(A, P, z) <= (F(s) + eps e^{14-s}) X + R`
/// with `X = V(z)|A|`, `s = ln D / ln z`, `R = sum_{d | P(z), d < DQ} |r(d)|`.
pub fn sieve_bounds(problem: &SieveProblem) -> Result<SieveBoundsReport> {
    problem.validate()?;
    let primes = problem.sieving_primes();
    let s = problem.level.ln() / problem.z.ln();
    let a_total = problem.a_total();
    let v_z: f64 = primes.iter().map(|&p| 1.0 - problem.density.g_prime(p)).product();
    let x_main = v_z * a_total;
    let log_q: f64 = problem.excluded.iter().map(|&p| (p as f64).ln()).sum();
    let divisors = divisors_below(&primes, problem.level.ln() + log_q)?;
    let rs: Vec<f64> = divisors.par_iter().map(|&d| remainder(problem, d).abs()).collect();
    let remainder_sum = neumaier(rs);
    let fns = LinearSieveFunctions::global();
    let big_f = fns.big_f(s);
    let small_f = fns.small_f(s);
    let slack = problem.epsilon * (14.0 - s).exp();
    let upper = (big_f + slack) * x_main + remainder_sum;
    let lower = (s >= 2.0).then(|| (small_f - slack) * x_main - remainder_sum);
    let exact = brute_force_s(problem);
    let tol = 1e-9 * (1.0 + a_total.abs());
    let holds = exact <= upper + tol && lower.map_or(true, |lo| lo <= exact + tol);
    Ok(SieveBoundsReport {
        z: problem.z,
        level: problem.level,
        s,
        a_total,
        v_z,
        x_main,
        remainder_sum,
        divisor_count: divisors.len(),
        big_f,
        small_f,
        upper,
        lower,
        exact,
        holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ones(n: usize) -> Vec<f64> {
        let mut w = vec![1.0; n + 1];
        w[0] = 0.0;
        w
    }

    #[test]
    fn sifted_counts() {
        // integers <= 30 free of 2, 3, 5: 1 7 11 13 17 19 23 29
        assert_eq!(sifted_sum(&ones(30), 1, 6.0), 8.0);
        assert_eq!(sifted_sum(&ones(30), 7, 6.0), 1.0);
    }

    #[test]
    fn remainder_of_unit_weights() {
        let p = SieveProblem {
            weights: ones(100),
            excluded: vec![],
            density: Density::Reciprocal,
            z: 5.0,
            level: 25.0,
            epsilon: 0.004,
        };
        assert!((remainder(&p, 3) - (33.0 - 100.0 / 3.0)).abs() < 1e-12);
        assert_eq!(remainder(&p, 1), 0.0);
    }

    #[test]
    fn buchstab_identity_exact() {
        let w = ones(5000);
        for (z, zp) in [(30.0, 5.0), (50.0, 2.0), (17.0, 17.0)] {
            assert_eq!(buchstab_rhs(&w, z, zp), sifted_sum(&w, 1, z));
        }
    }

    #[test]
    fn divisor_enumeration() {
        let d = divisors_below(&[2, 3, 5], (31.0f64).ln()).unwrap();
        assert_eq!(d, vec![1, 2, 3, 5, 6, 10, 15, 30]);
        let d = divisors_below(&[2, 3, 5], (29.5f64).ln()).unwrap();
        assert_eq!(d, vec![1, 2, 3, 5, 6, 10, 15]);
    }

    #[test]
    fn bounds_bracket_unit_weights() {
        let p = SieveProblem {
            weights: ones(100_000),
            excluded: vec![],
            density: Density::Reciprocal,
            z: 20.0,
            level: 20f64.powi(4),
            epsilon: 0.004,
        };
        let r = sieve_bounds(&p).unwrap();
        assert!(r.holds, "{r:?}");
        assert!(r.lower.is_some());
    }

    #[test]
    fn epsilon_out_of_range() {
        let p = SieveProblem {
            weights: ones(10),
            excluded: vec![],
            density: Density::Reciprocal,
            z: 3.0,
            level: 9.0,
            epsilon: 0.01,
        };
        assert!(matches!(sieve_bounds(&p), Err(Error::Config(_))));
    }
}
