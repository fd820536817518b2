//! The smoothed box indicators `g_{delta,n,gamma} = rho_delta^{*n} * chi_{[0,gamma]^n}`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{self, gauss_legendre};

use super::{profile, profile_mass};

const CDF_CELLS: usize = 4096;

struct CdfTable {
    values: Vec<f64>,
}

fn cdf_table() -> &'static CdfTable {
    static TABLE: OnceLock<CdfTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mass = profile_mass();
        let h = 2.0 / CDF_CELLS as f64;
        let mut values = Vec::with_capacity(CDF_CELLS + 1);
        let mut acc = numeric::NeumaierSum::new();
        values.push(0.0);
        for i in 0..CDF_CELLS {
            let a = -1.0 + h * i as f64;
            let (v, _) = numeric::integrate(profile, a, a + h, 1e-18, 20).expect("cdf cell");
            acc.add(v / mass);
            values.push(acc.value());
        }
        CdfTable { values }
    })
}

/// Distribution function of the unit-mass mollifier `rho = profile / mass`,
/// via cubic Hermite interpolation of a fine table (derivative data exact).
pub fn profile_cdf(t: f64) -> f64 {
    if t <= -1.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let tab = cdf_table();
    let h = 2.0 / CDF_CELLS as f64;
    let pos = (t + 1.0) / h;
    let i = (pos.floor() as usize).min(CDF_CELLS - 1);
    let s = pos - i as f64;
    let x0 = -1.0 + h * i as f64;
    let mass = profile_mass();
    let (y0, y1) = (tab.values[i], tab.values[i + 1]);
    let (d0, d1) = (profile(x0) / mass * h, profile(x0 + h) / mass * h);
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
}

/// `g_{delta,n,gamma}`; the profile is supported in `[-1, 1]`, so the
/// kernel vanishes outside `[-delta, gamma + delta]^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothingKernel {
    pub delta: f64,
    pub n: usize,
    pub gamma: f64,
}

impl SmoothingKernel {
    pub fn new(delta: f64, n: usize, gamma: f64) -> Result<Self> {
        if !(delta > 0.0) || !(gamma > 0.0) || n == 0 {
            return Err(Error::Config(format!(
                "kernel needs delta > 0, gamma > 0, n >= 1 (got {delta}, {gamma}, {n})"
            )));
        }
        Ok(SmoothingKernel { delta, n, gamma })
    }

    /// Support radius of the profile in units of delta.
    pub const SUPPORT: f64 = 1.0;

    /// One-dimensional factor `(1/delta) int_0^gamma rho((u - v)/delta) dv`.
    #[inline]
    pub fn factor(&self, u: f64) -> f64 {
        (profile_cdf(u / self.delta) - profile_cdf((u - self.gamma) / self.delta)).max(0.0)
    }

    pub fn value(&self, u: &[f64]) -> f64 {
        u.iter().map(|&x| self.factor(x)).product()
    }

    /// Breakpoints of the 1-D factor and of the indicator.
    fn breakpoints(&self) -> Vec<f64> {
        let (d, g) = (self.delta, self.gamma);
        let mut b = vec![-d, 0.0, d, g - d, g, g + d];
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// 1-D composite Gauss rule on `[-delta, gamma + delta]` aligned with
    /// every kink of the factor and of the indicator.
    fn rule(&self, panels_per_piece: usize) -> (Vec<f64>, Vec<f64>) {
        let (gx, gw) = gauss_legendre(10);
        let b = self.breakpoints();
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for seg in b.windows(2) {
            let h = (seg[1] - seg[0]) / panels_per_piece as f64;
            for p in 0..panels_per_piece {
                let lo = seg[0] + h * p as f64;
                for (x, w) in gx.iter().zip(&gw) {
                    xs.push(lo + 0.5 * h * (x + 1.0));
                    ws.push(0.5 * h * w);
                }
            }
        }
        (xs, ws)
    }

    /// Tensor-product quadrature of `F(g(u), chi(u))` over the support box.
    fn tensor_integral<F: Fn(f64, f64) -> f64>(&self, panels: usize, f: F) -> f64 {
        let (xs, ws) = self.rule(panels);
        let gv: Vec<f64> = xs.iter().map(|&x| self.factor(x)).collect();
        let chi: Vec<f64> = xs
            .iter()
            .map(|&x| if (0.0..=self.gamma).contains(&x) { 1.0 } else { 0.0 })
            .collect();
        let m = xs.len();
        let mut acc = numeric::NeumaierSum::new();
        let mut idx = vec![0usize; self.n];
        loop {
            let mut w = 1.0;
            let mut g = 1.0;
            let mut c = 1.0;
            for &i in &idx {
                w *= ws[i];
                g *= gv[i];
                c *= chi[i];
            }
            acc.add(w * f(g, c));
            let mut d = 0;
            loop {
                if d == self.n {
                    return acc.value();
                }
                idx[d] += 1;
                if idx[d] < m {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }

    /// `int g_{delta,n,gamma}` by n-dimensional quadrature.
    pub fn integral(&self) -> f64 {
        self.tensor_integral(self.panels(), |g, _| g)
    }

    /// `int |g_{delta,n,gamma} - chi_{[0,gamma]^n}|` by n-dimensional quadrature.
    pub fn l1_distance_to_box(&self) -> f64 {
        self.tensor_integral(self.panels(), |g, c| (g - c).abs())
    }

    fn panels(&self) -> usize {
        match self.n {
            1 => 16,
            2 => 6,
            _ => 2,
        }
    }

    /// `C delta (gamma + delta)^(n-1)` with the profile constant
    /// `C = n 2^(n-1) c_1`, `c_1 = int |g_{1,1,gamma} - chi|` for gamma >= 2.
    pub fn l1_bound(&self) -> f64 {
        let c1 = profile_edge_constant();
        self.n as f64 * 2f64.powi(self.n as i32 - 1) * c1 * self.delta * (self.gamma + self.delta).powi(self.n as i32 - 1)
    }
}

/// `2 int_{-1}^{1} |Phi(t) - H(t)| dt`, the L1 defect of one smoothed edge pair.
pub fn profile_edge_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let left = numeric::integrate(profile_cdf, -1.0, 0.0, 1e-14, 40).expect("edge").0;
        let right = numeric::integrate(|t| 1.0 - profile_cdf(t), 0.0, 1.0, 1e-14, 40).expect("edge").0;
        2.0 * (left + right)
    })
}
