//! Birkhoff averages of observables along `u(t) p` for continuous intervals,
//! arithmetic progressions, almost primes and polynomial times, plus the
//! block machinery comparing `(M + k)^(1+gamma)` with its linearization.

mod blocks;
mod correlation;
mod orbit;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{self, GroupElement, Mat2};
use crate::lattice::{injectivity_radius, path_element, reduce, reduce_in_place, ChartCoord, DivergencePath, QuotientPoint};
use crate::numeric::{gauss_legendre, linear_fit, NeumaierSum};
use crate::observables::{haar_integral_k1, Observable, DEFAULT_SOBOLEV_ORDER};
use crate::sieve;

pub use blocks::{block_average_compare, block_decompose, block_error, block_taylor_bound, BlockComparison, BlockPair};
pub use correlation::{correlation, Flow};
pub use orbit::{direct_chart, orbit_sums, orbit_values, OrbitWalker, CHUNK};

/// Largest admissible orbit time.
pub const MAX_TIME: f64 = 1e12;
/// Largest materialized time set.
pub const MAX_SAMPLES: usize = 500_000_000;
/// Gauss–Legendre order per panel of the continuous averages.
pub const PANEL_ORDER: usize = 4;
const PANEL_CHUNK: usize = 1024;
/// Floor applied to zero deviations in [`decay_fit`].
pub const DEVIATION_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TimeSet {
    Interval { t: f64, quadrature_step: f64 },
    Progression { k: f64, t: f64 },
    AlmostPrimes { l: u32, n: u64 },
    PolynomialTimes { gamma_exp: f64, n: u64 },
    Block { m: u64, gamma_exp: f64 },
}

impl TimeSet {
    /// Horizon used for the injectivity-radius metadata.
    pub fn horizon(&self) -> f64 {
        match *self {
            TimeSet::Interval { t, .. } | TimeSet::Progression { t, .. } => t,
            TimeSet::AlmostPrimes { n, .. } => n as f64,
            TimeSet::PolynomialTimes { gamma_exp, n } => (n as f64).powf(1.0 + gamma_exp),
            TimeSet::Block { m, gamma_exp } => (m as f64).powf(1.0 + gamma_exp),
        }
    }
}

/// The times of a discrete time set, strictly increasing. For `Interval`
/// these are the quadrature nodes.
pub fn generate(ts: &TimeSet) -> Result<Vec<f64>> {
    let check_count = |n: f64| -> Result<()> {
        if n > MAX_SAMPLES as f64 {
            Err(Error::Budget(format!("time set with {n} elements exceeds {MAX_SAMPLES}")))
        } else {
            Ok(())
        }
    };
    match *ts {
        TimeSet::Interval { t, quadrature_step } => {
            if !(t > 0.0 && quadrature_step > 0.0) {
                return Err(Error::Config("interval needs T > 0 and a positive step".into()));
            }
            let panels = (t / quadrature_step).ceil();
            check_count(panels * PANEL_ORDER as f64)?;
            let (gx, _) = gauss_legendre(PANEL_ORDER);
            let n = panels as usize;
            let h = t / n as f64;
            Ok((0..n)
                .flat_map(|i| gx.iter().map(move |x| h * i as f64 + 0.5 * h * (x + 1.0)))
                .collect())
        }
        TimeSet::Progression { k, t } => {
            if !(k > 0.0 && t > 0.0) {
                return Err(Error::Config("progression needs K > 0 and T > 0".into()));
            }
            if t > MAX_TIME {
                return Err(Error::Range(format!("T = {t} exceeds {MAX_TIME}")));
            }
            check_count(t / k)?;
            Ok((0u64..).map(|j| k * j as f64).take_while(|&x| x < t).collect())
        }
        TimeSet::AlmostPrimes { l, n } => {
            if l < 1 {
                return Err(Error::Config("almost primes need L >= 1".into()));
            }
            Ok(sieve::almost_primes(l, n)?.into_iter().map(|m| m as f64).collect())
        }
        TimeSet::PolynomialTimes { gamma_exp, n } => {
            if !(0.0..0.5).contains(&gamma_exp) {
                return Err(Error::Config(format!("gamma must lie in [0, 1/2), got {gamma_exp}")));
            }
            check_count(n as f64)?;
            if (n as f64).powf(1.0 + gamma_exp) > MAX_TIME {
                return Err(Error::Range(format!("N^(1+gamma) exceeds {MAX_TIME}")));
            }
            Ok((1..=n).map(|m| (m as f64).powf(1.0 + gamma_exp)).collect())
        }
        TimeSet::Block { m, gamma_exp } => Ok(block_decompose(m, gamma_exp)?.exact_times),
    }
}

/// `phi(x) = a(-ln x / 2) u(x^(1+gamma))`.
pub fn phi_map(k: usize, x: f64, gamma_exp: f64) -> Result<GroupElement> {
    path_element(k, &DivergencePath::PhiMap { gamma_exp }, x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceKind {
    /// Fundamental-domain quadrature (k = 1).
    Haar,
    /// Long horocycle average from a reference point (k = 2).
    HorocycleProxy,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AverageResult {
    pub value: f64,
    pub sample_count: usize,
    pub reference: Option<f64>,
    pub deviation: Option<f64>,
    pub reference_kind: ReferenceKind,
    pub timeset: TimeSet,
    pub point_id: String,
    pub sobolev_l: usize,
    /// Injectivity radius at `a(-ln T) p`.
    pub injectivity_estimate: f64,
    #[serde(default)]
    pub runtime_s: f64,
}

impl AverageResult {
    pub fn with_reference(mut self, reference: f64, kind: ReferenceKind) -> Self {
        self.reference = Some(reference);
        self.deviation = Some((self.value - reference).abs());
        self.reference_kind = kind;
        self
    }
}

/// Stable identifier of a point: its reduced chart.
pub fn point_id(p: &QuotientPoint) -> String {
    let c = reduce(p).chart();
    let parts: Vec<String> = c
        .iter()
        .map(|c| format!("({:.10},{:.10},{:.10})", c.x, c.y, c.theta))
        .collect();
    format!("k{}:{}", p.k(), parts.join(""))
}

fn eta_at_horizon(p: &QuotientPoint, t: f64) -> Result<f64> {
    let back = group::diagonal_a(p.k(), -t.max(1.0).ln())?;
    Ok(injectivity_radius(&p.translate(&back)?))
}

fn finish(
    f: &Observable,
    p: &QuotientPoint,
    ts: TimeSet,
    value: f64,
    sample_count: usize,
    started: Instant,
) -> Result<AverageResult> {
    let res = AverageResult {
        value,
        sample_count,
        reference: None,
        deviation: None,
        reference_kind: ReferenceKind::None,
        timeset: ts,
        point_id: point_id(p),
        sobolev_l: DEFAULT_SOBOLEV_ORDER,
        injectivity_estimate: eta_at_horizon(p, ts.horizon())?,
        runtime_s: 0.0,
    };
    let mut res = if p.k() == 1 {
        res.with_reference(haar_integral_k1(f)?, ReferenceKind::Haar)
    } else {
        res
    };
    res.runtime_s = started.elapsed().as_secs_f64();
    Ok(res)
}

/// Largest quadrature step resolving every bump of `f`: the chart moves at
/// speed up to `max(1, y)` along the orbit.
pub fn max_quadrature_step(f: &Observable) -> f64 {
    let top = f
        .terms
        .iter()
        .flat_map(|(_, b)| b.center.iter().zip(&b.widths).map(|(c, w)| c.y + w[1]))
        .fold(1.0f64, f64::max);
    f.min_width() / (8.0 * top)
}

/// `(1/T) int_0^T f(u(s) p) ds` by composite Gauss–Legendre with `panels`
/// panels; chunks of panels are seeded independently.
fn interval_mean(f: &Observable, p: &QuotientPoint, t: f64, panels: usize) -> f64 {
    let (gx, gw) = gauss_legendre(PANEL_ORDER);
    let h = t / panels as f64;
    let base = p.inverse_rep();
    let lat = &*p.lattice;
    let n_chunks = panels.div_ceil(PANEL_CHUNK);
    let parts: Vec<f64> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * PANEL_CHUNK;
            let hi = (lo + PANEL_CHUNK).min(panels);
            let mut acc = NeumaierSum::new();
            let mut w = OrbitWalker::new(lat, &base, h * lo as f64);
            for i in lo..hi {
                let a = h * i as f64;
                let mut panel = 0.0;
                for (x, wt) in gx.iter().zip(&gw) {
                    w.step_to(a + 0.5 * h * (x + 1.0));
                    panel += wt * f.eval_chart(w.chart());
                }
                acc.add(0.5 * h * panel);
            }
            acc.value()
        })
        .collect();
    let mut total = NeumaierSum::new();
    for v in parts {
        total.add(v);
    }
    total.value() / t
}

/// Continuous horocycle average over `[0, T]` with the automatic step.
pub fn horocycle_average(f: &Observable, p: &QuotientPoint, t: f64) -> Result<AverageResult> {
    let step = max_quadrature_step(f);
    sparse_average(f, p, &TimeSet::Interval { t, quadrature_step: step.min(t) })
}

/// Average of `f` over `u(S) p`; `Interval` time sets give the normalized
/// integral.
pub fn sparse_average(f: &Observable, p: &QuotientPoint, ts: &TimeSet) -> Result<AverageResult> {
    let started = Instant::now();
    if let Some(k) = f.k() {
        if k != p.k() {
            return Err(Error::DimensionMismatch(k, p.k()));
        }
    }
    if let TimeSet::Interval { t, quadrature_step } = *ts {
        if !(t > 0.0) {
            return Err(Error::Config(format!("T must be positive, got {t}")));
        }
        if t > MAX_TIME {
            return Err(Error::Range(format!("T = {t} exceeds {MAX_TIME}")));
        }
        if quadrature_step > max_quadrature_step(f) * (1.0 + 1e-12) && !f.is_constant() {
            return Err(Error::Resolution(format!(
                "step {quadrature_step} is coarser than {} required by the observable",
                max_quadrature_step(f)
            )));
        }
        let panels = (t / quadrature_step).ceil() as usize;
        if panels.saturating_mul(PANEL_ORDER) > MAX_SAMPLES {
            return Err(Error::Budget(format!("{panels} panels exceed the sample budget")));
        }
        let value = if f.is_constant() { f.constant } else { interval_mean(f, p, t, panels) };
        return finish(f, p, *ts, value, panels * PANEL_ORDER, started);
    }
    let times = generate(ts)?;
    if times.is_empty() {
        return Err(Error::Domain("empty time set".into()));
    }
    if times.last().is_some_and(|&t| t > MAX_TIME) {
        return Err(Error::Range(format!("orbit time exceeds {MAX_TIME}")));
    }
    let value = if f.is_constant() {
        f.constant
    } else {
        orbit_sums(p, &times, None, &[f])[0] / times.len() as f64
    };
    finish(f, p, *ts, value, times.len(), started)
}

/// Proxy for `int f dmu` when no quadrature is available: the horocycle
/// average from `p` over `[0, t_ref]`.
pub fn haar_reference(f: &Observable, p: &QuotientPoint, t_ref: f64) -> Result<f64> {
    let step = max_quadrature_step(f).min(t_ref);
    let panels = (t_ref / step).ceil() as usize;
    Ok(if f.is_constant() { f.constant } else { interval_mean(f, p, t_ref, panels) })
}

/// `|(1/T) int_0^T f(u(s)x) ds - int_0^1 f(a(ln T) u(s) a(-ln T) x) ds|`,
/// both sides by the same number of Gauss–Legendre panels; every node is
/// evaluated directly (no incremental stepping).
pub fn renormalization_identity_check(f: &Observable, p: &QuotientPoint, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Config(format!("T must be positive, got {t}")));
    }
    let lt = t.ln();
    let a_plus = Mat2::diagonal(lt);
    let a_minus = Mat2::diagonal(-lt);
    let panels = ((t / max_quadrature_step(f)).ceil() as usize).max(1);
    let (gx, gw) = gauss_legendre(PANEL_ORDER);
    let base = p.inverse_rep();
    let lat = &*p.lattice;
    let eval_h = |mut h: Vec<Mat2>| -> f64 {
        reduce_in_place(lat, &mut h);
        let c: Vec<ChartCoord> = h.iter().map(ChartCoord::of).collect();
        f.eval_chart(&c)
    };
    let side = |rhs: bool| -> f64 {
        let len = if rhs { 1.0 } else { t };
        let h = len / panels as f64;
        let parts: Vec<f64> = (0..panels.div_ceil(PANEL_CHUNK))
            .into_par_iter()
            .map(|c| {
                let mut acc = NeumaierSum::new();
                for i in c * PANEL_CHUNK..((c + 1) * PANEL_CHUNK).min(panels) {
                    let mut panel = 0.0;
                    for (x, wt) in gx.iter().zip(&gw) {
                        let s = h * i as f64 + 0.5 * h * (x + 1.0);
                        let mut hv = base.clone();
                        hv[0] = if rhs {
                            // (a(ln T) u(s) a(-ln T))^{-1} = a(ln T) u(-s) a(-ln T)
                            let e_inv = a_plus.mul(&Mat2::unipotent(-s)).mul(&a_minus);
                            hv[0].mul(&e_inv)
                        } else {
                            hv[0].mul(&Mat2::unipotent(-s))
                        };
                        panel += wt * eval_h(hv);
                    }
                    acc.add(0.5 * h * panel);
                }
                acc.value()
            })
            .collect();
        let mut total = NeumaierSum::new();
        for v in parts {
            total.add(v);
        }
        total.value() / len
    };
    Ok((side(false) - side(true)).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual: f64,
    /// Some deviation was zero and replaced by the floor.
    pub floored: bool,
}

/// Least-squares fit of `ln deviation` against `ln scale`.
pub fn decay_fit(series: &[(f64, f64)]) -> Result<DecayFit> {
    if series.len() < 4 {
        return Err(Error::Domain(format!("decay fit needs >= 4 points, got {}", series.len())));
    }
    if series.iter().any(|&(s, d)| !(s > 0.0) || d < 0.0 || !d.is_finite()) {
        return Err(Error::Domain("scales must be positive and deviations nonnegative".into()));
    }
    let floored = series.iter().any(|&(_, d)| d < DEVIATION_FLOOR);
    let xs: Vec<f64> = series.iter().map(|&(s, _)| s.ln()).collect();
    let ys: Vec<f64> = series.iter().map(|&(_, d)| d.max(DEVIATION_FLOOR).ln()).collect();
    let (slope, intercept, residual) = linear_fit(&xs, &ys);
    Ok(DecayFit {
        slope,
        intercept,
        residual,
        floored,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::observables::BumpFunction;

    fn bump_at(x: f64, y: f64, th: f64, w: f64) -> Observable {
        let c = QuotientPoint::from_chart(Lattice::modular(), &[ChartCoord::new(x, y, th)]).unwrap();
        Observable::bump(BumpFunction::new(&c, vec![[w, w, w]], 1.0).unwrap())
    }

    fn generic() -> QuotientPoint {
        let phi = 0.5 * (1.0 + 5f64.sqrt());
        QuotientPoint::from_inverse_rep(Lattice::modular(), vec![Mat2::new(phi, -1.0, 1.0, 0.0)]).unwrap()
    }

    #[test]
    fn time_set_examples() {
        assert_eq!(generate(&TimeSet::Progression { k: 3.0, t: 10.0 }).unwrap(), vec![0.0, 3.0, 6.0, 9.0]);
        assert_eq!(
            generate(&TimeSet::AlmostPrimes { l: 2, n: 10 }).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 9.0, 10.0]
        );
        assert_eq!(
            generate(&TimeSet::PolynomialTimes { gamma_exp: 0.0, n: 4 }).unwrap(),
            vec![1.0, 2.0, 3.0, 4.0]
        );
        assert!(generate(&TimeSet::Progression { k: 20.0, t: 10.0 }).unwrap() == vec![0.0]);
        let iv = generate(&TimeSet::Interval { t: 2.0, quadrature_step: 0.5 }).unwrap();
        assert_eq!(iv.len(), 4 * PANEL_ORDER);
        assert!(iv.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn time_set_serde_rejects_unknown_fields() {
        let ts: TimeSet = serde_json::from_str(r#"{"kind":"progression","k":2.0,"t":5.0}"#).unwrap();
        assert_eq!(ts, TimeSet::Progression { k: 2.0, t: 5.0 });
        assert!(serde_json::from_str::<TimeSet>(r#"{"kind":"progression","k":2.0,"t":5.0,"x":1}"#).is_err());
    }

    #[test]
    fn phi_map_at_one_is_u1() {
        let g = phi_map(1, 1.0, 0.3).unwrap();
        assert!(g.factors[0].max_abs_diff(&Mat2::unipotent(1.0)) < 1e-15);
        assert!(matches!(phi_map(1, 0.0, 0.3), Err(Error::Domain(_))));
    }

    #[test]
    fn constant_observable_averages_exactly() {
        let one = Observable::constant(1.0);
        let p = generic();
        let r = horocycle_average(&one, &p, 50.0).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.deviation, Some(0.0));
        let r = sparse_average(&one, &p, &TimeSet::Progression { k: 1.0, t: 100.0 }).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.sample_count, 100);
    }

    #[test]
    fn identity_coset_integer_times_are_fixed() {
        let f = bump_at(0.1, 1.3, 0.2, 0.3);
        let p = QuotientPoint::identity(Lattice::modular());
        let fp = f.evaluate(&p);
        let r = sparse_average(&f, &p, &TimeSet::Progression { k: 1.0, t: 500.0 }).unwrap();
        assert!((r.value - fp).abs() < 1e-12);
    }

    #[test]
    fn periodic_horocycle_average() {
        // the orbit of the identity coset closes at s = 1
        let f = bump_at(0.3, 1.3, 0.0, 0.25);
        let p = QuotientPoint::identity(Lattice::modular());
        let one_period = crate::numeric::integrate(
            |s| f.eval_chart(&direct_chart(&p, s)),
            0.0,
            1.0,
            1e-12,
            40,
        )
        .unwrap()
        .0;
        let r = horocycle_average(&f, &p, 20.0).unwrap();
        assert!((r.value - one_period).abs() < 1e-8, "{} {one_period}", r.value);
    }

    #[test]
    fn linearity_of_averages() {
        let f1 = bump_at(0.1, 1.3, 0.2, 0.3);
        let f2 = bump_at(-0.2, 1.5, -0.5, 0.2);
        let g = f1.combine(2.0, &f2, -0.7);
        let p = generic();
        let ts = TimeSet::Progression { k: 1.0, t: 20_000.0 };
        let a1 = sparse_average(&f1, &p, &ts).unwrap().value;
        let a2 = sparse_average(&f2, &p, &ts).unwrap().value;
        let ag = sparse_average(&g, &p, &ts).unwrap().value;
        assert!((ag - (2.0 * a1 - 0.7 * a2)).abs() < 1e-12);
    }

    #[test]
    fn coarse_step_rejected() {
        let f = bump_at(0.1, 1.3, 0.2, 0.3);
        let r = sparse_average(&f, &generic(), &TimeSet::Interval { t: 10.0, quadrature_step: 0.5 });
        assert!(matches!(r, Err(Error::Resolution(_))));
        let r = sparse_average(&f, &generic(), &TimeSet::Progression { k: 1e6, t: 1e13 });
        assert!(matches!(r, Err(Error::Range(_))));
    }

    #[test]
    fn renormalization_identity_small_t() {
        let f = bump_at(0.1, 1.3, 0.2, 0.3);
        assert!(renormalization_identity_check(&f, &generic(), 1.0).unwrap() <= 1e-12);
        assert!(renormalization_identity_check(&f, &generic(), 100.0).unwrap() <= 1e-8);
    }

    #[test]
    fn decay_fits() {
        let s: Vec<(f64, f64)> = [1.0, 10.0, 100.0, 1000.0].iter().map(|&x: &f64| (x, x.powf(-0.5))).collect();
        assert!((decay_fit(&s).unwrap().slope + 0.5).abs() < 1e-9);
        let c: Vec<(f64, f64)> = [1.0, 2.0, 3.0, 4.0].iter().map(|&x| (x, 0.3)).collect();
        assert!(decay_fit(&c).unwrap().slope.abs() < 1e-12);
        let z = [(1.0, 0.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)];
        assert!(decay_fit(&z).unwrap().floored);
        assert!(decay_fit(&z[..3]).is_err());
    }

    #[test]
    fn parallel_chunking_is_deterministic() {
        let f = bump_at(0.1, 1.3, 0.2, 0.3);
        let p = generic();
        let ts = TimeSet::Progression { k: 0.7, t: 30_000.0 };
        let run = |n| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .unwrap()
                .install(|| sparse_average(&f, &p, &ts).unwrap().value)
        };
        let a = run(1);
        assert_eq!(a, run(4));
        assert_eq!(a, run(16));
    }
}
