//! The linear sieve functions `F` and `f`:
//! `F(s) = 2e^gamma/s` on `(0, 3]`, `f(s) = 0` on `(0, 2]`,
//! `(sF(s))' = f(s-1)` for `s > 3`, `(sf(s))' = F(s-1)` for `s > 2`.
//!
//! With `P = F - 1` and `Q = 1 - f` the system splits into
//! `(sS)' = -S(s-1)` for `S = P + Q` and `(sD)' = D(s-1)` for `D = P - Q`.
//! The second channel admits constants as exact solutions, so discretization
//! error collects in a constant offset; it is measured at `S_MAX`, where the
//! true `D` is below double precision, and removed.

use std::sync::OnceLock;

use crate::error::{Error, Result};

pub const S_MAX: f64 = 40.0;
const STEPS_PER_UNIT: usize = 1000;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const MONOTONE_TOL: f64 = 1e-14;
const NOISE_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone)]
pub struct LinearSieveFunctions {
    /// `P` and `Q` on the grid `s_i = 2 + i/STEPS_PER_UNIT`.
    p: Vec<f64>,
    q: Vec<f64>,
    /// Constant removed from the `D` channel.
    pub parasitic_offset: f64,
}

fn two_e_gamma() -> f64 {
    2.0 * EULER_GAMMA.exp()
}

impl LinearSieveFunctions {
    pub fn compute() -> Result<Self> {
        let h = 1.0 / STEPS_PER_UNIT as f64;
        let n_total = ((S_MAX - 2.0) * STEPS_PER_UNIT as f64).round() as usize;
        let s_at = |i: usize| 2.0 + i as f64 * h;
        let c = two_e_gamma();
        let mut p = vec![0.0; n_total + 1];
        let mut q = vec![0.0; n_total + 1];
        for i in 0..=STEPS_PER_UNIT {
            let s = s_at(i);
            p[i] = c / s - 1.0;
            q[i] = 1.0 - c * (s - 1.0).ln() / s;
        }
        let mut sum: Vec<f64> = (0..=STEPS_PER_UNIT).map(|i| p[i] + q[i]).collect();
        let mut diff: Vec<f64> = (0..=STEPS_PER_UNIT).map(|i| p[i] - q[i]).collect();
        sum.resize(n_total + 1, 0.0);
        diff.resize(n_total + 1, 0.0);
        // cell integral over [t_j, t_{j+1}] of a grid function, fourth order
        let cell = |v: &[f64], j: usize| -> f64 {
            if j == 0 {
                // one-sided: Q has a kink at s = 2
                h * (9.0 * v[0] + 19.0 * v[1] - 5.0 * v[2] + v[3]) / 24.0
            } else {
                h * (-v[j - 1] + 13.0 * v[j] + 13.0 * v[j + 1] - v[j + 2]) / 24.0
            }
        };
        for n in STEPS_PER_UNIT..n_total {
            let j = n - STEPS_PER_UNIT;
            let (s0, s1) = (s_at(n), s_at(n + 1));
            let is = cell(&sum, j);
            let id = cell(&diff, j);
            sum[n + 1] = (s0 * sum[n] - is) / s1;
            diff[n + 1] = (s0 * diff[n] + id) / s1;
        }
        let parasitic_offset = diff[n_total];
        let mut settled = false;
        for i in STEPS_PER_UNIT + 1..=n_total {
            let d = diff[i] - parasitic_offset;
            p[i] = 0.5 * (sum[i] + d);
            q[i] = 0.5 * (sum[i] - d);
            // below the rounding floor the nearest double to F and f is 1
            settled |= p[i].abs().max(q[i].abs()) < NOISE_FLOOR;
            if settled {
                p[i] = 0.0;
                q[i] = 0.0;
            }
        }
        let out = LinearSieveFunctions { p, q, parasitic_offset };
        out.certify_monotone()?;
        Ok(out)
    }

    /// Shared instance.
    pub fn global() -> &'static Self {
        static FNS: OnceLock<LinearSieveFunctions> = OnceLock::new();
        FNS.get_or_init(|| Self::compute().expect("linear sieve functions"))
    }

    fn certify_monotone(&self) -> Result<()> {
        for w in self.p.windows(2) {
            if w[1] > w[0] + MONOTONE_TOL {
                return Err(Error::Resolution("F is not nonincreasing on the grid".into()));
            }
        }
        for w in self.q.windows(2) {
            if w[1] > w[0] + MONOTONE_TOL {
                return Err(Error::Resolution("f is not nondecreasing on the grid".into()));
            }
        }
        Ok(())
    }

    fn interp(v: &[f64], s: f64) -> f64 {
        let pos = (s - 2.0) * STEPS_PER_UNIT as f64;
        let last = v.len() - 1;
        let i = (pos.floor() as usize).clamp(1, last - 2);
        let t = pos - i as f64;
        // cubic Lagrange through i-1, i, i+1, i+2
        let (a, b, c, d) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
        let l0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let l1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let l2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let l3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        a * l0 + b * l1 + c * l2 + d * l3
    }

    /// Upper sieve function `F(s)`, `s > 0`.
    pub fn big_f(&self, s: f64) -> f64 {
        if s <= 3.0 {
            two_e_gamma() / s
        } else if s >= S_MAX {
            1.0
        } else {
            1.0 + Self::interp(&self.p, s)
        }
    }

    /// Lower sieve function `f(s)`.
    pub fn small_f(&self, s: f64) -> f64 {
        if s <= 2.0 {
            0.0
        } else if s <= 4.0 {
            two_e_gamma() * (s - 1.0).ln() / s
        } else if s >= S_MAX {
            1.0
        } else {
            1.0 - Self::interp(&self.q, s)
        }
    }

    /// Grid value of `f` from the integration (used to cross-check the
    /// closed form on `[2, 4]`).
    pub fn small_f_grid(&self, s: f64) -> f64 {
        1.0 - Self::interp(&self.q, s)
    }
}
