//! Finite-horizon divergence detection along `a(-t) p` and `phi(x) p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{self, diagonal_a, unipotent_u, MAX_DIAGONAL_TIME};

use super::point::{cusp_height, QuotientPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DivergencePath {
    /// `t -> a(-t) p`, sampled on a uniform grid of `[0, t_max]`.
    GeodesicMinus,
    /// `x -> phi(x) p = a(-ln x / 2) u(x^(1+gamma)) p`, sampled on a
    /// geometric grid of `[1, t_max]`.
    PhiMap { gamma_exp: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub diverges: bool,
    pub height_series: Vec<(f64, f64)>,
    pub first_escape_time: Option<f64>,
    pub threshold: f64,
    /// The verdict only covers `[0, horizon]` (or `[1, horizon]`).
    pub horizon: f64,
}

const GEODESIC_STEP: f64 = 0.05;
const MIN_SAMPLES: usize = 200;
const MAX_SAMPLES: usize = 20_000;
const PHI_SAMPLES: usize = 400;

fn sample_times(path: &DivergencePath, t_max: f64) -> Vec<f64> {
    match path {
        DivergencePath::GeodesicMinus => {
            let n = ((t_max / GEODESIC_STEP).ceil() as usize).clamp(MIN_SAMPLES, MAX_SAMPLES);
            (0..=n).map(|i| t_max * i as f64 / n as f64).collect()
        }
        DivergencePath::PhiMap { .. } => {
            let lmax = t_max.max(1.0).ln();
            (0..=PHI_SAMPLES)
                .map(|i| (lmax * i as f64 / PHI_SAMPLES as f64).exp())
                .collect()
        }
    }
}

/// Element moving `p` along the path at parameter `t`.
pub fn path_element(k: usize, path: &DivergencePath, t: f64) -> Result<group::GroupElement> {
    match path {
        DivergencePath::GeodesicMinus => diagonal_a(k, -t),
        DivergencePath::PhiMap { gamma_exp } => {
            if t <= 0.0 {
                return Err(Error::Domain(format!("phi map needs x > 0, got {t}")));
            }
            group::compose(&diagonal_a(k, -t.ln() / 2.0)?, &unipotent_u(k, t.powf(1.0 + gamma_exp)))
        }
    }
}

/// Samples the cusp height along the path. The orbit is declared divergent
/// iff the height exceeds `threshold` at some sample and never falls back
/// below `threshold / 2` afterwards.
pub fn detect_divergence(
    p: &QuotientPoint,
    path: DivergencePath,
    t_max: f64,
    threshold: f64,
) -> Result<DivergenceReport> {
    if !(t_max > 0.0) {
        return Err(Error::Range(format!("t_max must be positive, got {t_max}")));
    }
    if matches!(path, DivergencePath::GeodesicMinus) && t_max > MAX_DIAGONAL_TIME {
        return Err(Error::Range(format!("t_max {t_max} exceeds {MAX_DIAGONAL_TIME}")));
    }
    let k = p.k();
    let mut series = Vec::new();
    let mut escape: Option<f64> = None;
    for t in sample_times(&path, t_max) {
        let q = p.translate(&path_element(k, &path, t)?)?;
        let h = cusp_height(&q);
        series.push((t, h));
        if h < 0.5 * threshold {
            escape = None;
        } else if escape.is_none() && h > threshold {
            escape = Some(t);
        }
    }
    Ok(DivergenceReport {
        diverges: escape.is_some(),
        height_series: series,
        first_escape_time: escape,
        threshold,
        horizon: t_max,
    })
}
