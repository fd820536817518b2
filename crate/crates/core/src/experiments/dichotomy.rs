//! Which branch of the orbit-closure dichotomy a base point exhibits.
//!
//! A divergent path `a(-t) p` (or `phi(x) p`) is the signature of a point
//! carried by a compact torus orbit; the stabilizer search then confirms
//! it. Otherwise the density surrogate runs. A `DenseEvidence` verdict is
//! finite numerical evidence, never a proof of density.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lattice::{detect_divergence, torus_orbit_check, DivergenceReport, QuotientPoint, TorusReport};
use crate::observables::Observable;
use crate::sampler::{block_average_compare, BlockComparison};
use crate::sieve::{dynamical_sieve_pipeline, PipelineReport};

use super::config::{DichotomyMode, ExperimentKind};

pub const DENSITY_CAVEAT: &str =
    "dense-evidence is finite numerical evidence for density, not a proof: every bump of a finite cover was visited";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    DenseEvidence,
    TorusConfirmed,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyParams {
    pub mode: DichotomyMode,
    pub t_max: f64,
    pub threshold: f64,
    pub n: u64,
    pub alpha: f64,
    pub epsilon: f64,
    pub s_target: f64,
    pub gamma_exp: f64,
    pub m_values: Vec<u64>,
    pub search_budget: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyReport {
    pub verdict: Verdict,
    pub mode: DichotomyMode,
    pub divergence: DivergenceReport,
    pub torus: Option<TorusReport>,
    pub pipeline: Option<PipelineReport>,
    /// `blocks[j][i]`: bump `j` at `m_values[i]`.
    pub blocks: Option<Vec<Vec<BlockComparison>>>,
    pub caveat: Option<String>,
}

pub fn dichotomy(p: &QuotientPoint, cover: &[Observable], prm: &DichotomyParams) -> Result<DichotomyReport> {
    let path = ExperimentKind::divergence_path(prm.mode, prm.gamma_exp);
    let horizon = ExperimentKind::divergence_horizon(prm.mode, prm.t_max, prm.gamma_exp);
    let divergence = detect_divergence(p, path, horizon, prm.threshold)?;
    let mut report = DichotomyReport {
        verdict: Verdict::Inconclusive,
        mode: prm.mode,
        divergence,
        torus: None,
        pipeline: None,
        blocks: None,
        caveat: None,
    };
    if report.divergence.diverges {
        let t = torus_orbit_check(p, prm.search_budget);
        if t.found && t.orbit_bounded {
            report.verdict = Verdict::TorusConfirmed;
        }
        report.torus = Some(t);
        return Ok(report);
    }
    let visited_all = match prm.mode {
        DichotomyMode::Integers => {
            let r = dynamical_sieve_pipeline(cover, p, prm.n, prm.alpha, prm.epsilon, prm.s_target, None)?;
            let ok = r.bumps.iter().all(|b| b.almost_prime_sum > 0.0);
            report.pipeline = Some(r);
            ok
        }
        DichotomyMode::Polynomial => {
            let mut all = Vec::with_capacity(cover.len());
            for f in cover {
                let row = prm
                    .m_values
                    .iter()
                    .map(|&m| block_average_compare(f, p, m, prm.gamma_exp))
                    .collect::<Result<Vec<_>>>()?;
                all.push(row);
            }
            let ok = all.iter().all(|row| row.iter().any(|b| b.exact_avg > 0.0));
            report.blocks = Some(all);
            ok
        }
    };
    if visited_all {
        report.verdict = Verdict::DenseEvidence;
        report.caveat = Some(DENSITY_CAVEAT.into());
    }
    Ok(report)
}
