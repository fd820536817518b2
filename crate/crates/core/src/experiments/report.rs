//! Aggregation of result records into summary tables.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::linear_fit;
use crate::sampler::{decay_fit, AverageResult};
use crate::sieve::PipelineReport;

use super::dichotomy::{DichotomyReport, Verdict};
use super::record::{ResultRecord, RunStatus, Table};
use super::run::{AveragePayload, BlocksPayload, MixingPayload, SievePayload};

/// Largest average slope counted as decay.
pub const AVERAGE_SLOPE_MAX: f64 = -0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Criterion {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub kind: String,
    pub records: usize,
    pub table: Table,
    /// Fitted slope over all rows, when the kind has one and enough rows exist.
    pub slope: Option<f64>,
    pub criteria: Vec<Criterion>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    /// Writes `report-<kind>.csv` / `.dat` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        self.table.write(dir, &format!("report-{}", self.kind))
    }
}

fn payload<T: serde::de::DeserializeOwned>(r: &ResultRecord) -> Result<T> {
    serde_json::from_value(r.payload.clone())
        .map_err(|e| Error::Config(format!("record {} ({}): {e}", &r.content_id[..12], r.kind)))
}

fn check_compatible(records: &[ResultRecord]) -> Result<()> {
    let first = records.first().ok_or_else(|| Error::Config("report needs at least one record".into()))?;
    for r in &records[1..] {
        let (a, b) = (&first.config, &r.config);
        let field = if r.kind != first.kind {
            Some("experiment kind")
        } else if a.lattice != b.lattice || a.lattice_params != b.lattice_params {
            Some("lattice")
        } else if a.point != b.point {
            Some("point")
        } else if a.observables != b.observables {
            Some("observables")
        } else {
            None
        };
        if let Some(field) = field {
            return Err(Error::Config(format!(
                "records {} and {} differ in {field}; report one configuration at a time",
                &first.content_id[..12],
                &r.content_id[..12]
            )));
        }
    }
    Ok(())
}

fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    (pts.len() >= 2).then(|| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
        linear_fit(&xs, &ys).0
    })
}

fn status_code(s: RunStatus) -> f64 {
    match s {
        RunStatus::Ok => 0.0,
        RunStatus::ToleranceFailure => 2.0,
        RunStatus::BudgetExhausted => 3.0,
    }
}

fn criterion(name: &str, passed: bool) -> Criterion {
    Criterion { name: name.into(), passed }
}

/// Summarizes records of a single configuration (up to size parameters).
pub fn report(records: &[ResultRecord]) -> Result<Report> {
    check_compatible(records)?;
    let kind = records[0].kind.clone();
    let mut criteria = vec![criterion(
        "all runs completed within tolerance",
        records.iter().all(|r| r.status == RunStatus::Ok),
    )];
    let mut slope = None;
    let table = match kind.as_str() {
        "average" => {
            let mut rows: Vec<AverageResult> = Vec::new();
            for r in records {
                rows.extend(payload::<AveragePayload>(r)?.results);
            }
            rows.sort_by(|a, b| a.timeset.horizon().total_cmp(&b.timeset.horizon()));
            let series: Vec<(f64, f64)> = rows
                .iter()
                .filter_map(|r| r.deviation.map(|d| (r.timeset.horizon(), d)))
                .collect();
            if series.len() >= 4 {
                slope = Some(decay_fit(&series)?.slope);
                criteria.push(criterion("deviation decay slope <= -0.1", slope.unwrap() <= AVERAGE_SLOPE_MAX));
            }
            let mut t = Table::new("average", &["scale", "value", "reference", "deviation", "samples", "slope"]);
            for r in &rows {
                t.push(vec![
                    r.timeset.horizon(),
                    r.value,
                    r.reference.unwrap_or(f64::NAN),
                    r.deviation.unwrap_or(f64::NAN),
                    r.sample_count as f64,
                    slope.unwrap_or(f64::NAN),
                ]);
            }
            t
        }
        "mixing" => {
            let mut pts = Vec::new();
            for r in records {
                let m: MixingPayload = payload(r)?;
                pts.extend(m.times.iter().copied().zip(m.correlations.iter().copied()));
            }
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let logs: Vec<(f64, f64)> = pts.iter().filter(|p| p.1 != 0.0).map(|&(s, c)| (s, c.abs().ln())).collect();
            slope = fit_slope(&logs);
            if let Some(s) = slope {
                criteria.push(criterion("exponential mixing slope < 0", s < 0.0));
            }
            let mut t = Table::new("mixing", &["t", "correlation", "slope"]);
            for (s, c) in pts {
                t.push(vec![s, c, slope.unwrap_or(f64::NAN)]);
            }
            t
        }
        "blocks" => {
            let mut rows = Vec::new();
            for r in records {
                rows.extend(payload::<BlocksPayload>(r)?.comparisons);
            }
            rows.sort_by_key(|c| c.m);
            let logs: Vec<(f64, f64)> =
                rows.iter().filter(|c| c.gap > 0.0).map(|c| ((c.m as f64).ln(), c.gap.ln())).collect();
            slope = fit_slope(&logs);
            criteria.push(criterion("block gap within Lipschitz bound", rows.iter().all(|c| c.gap <= c.lipschitz_bound)));
            let mut t = Table::new("blocks", &["m", "gap", "lipschitz_bound", "block_error", "slope"]);
            for c in &rows {
                t.push(vec![c.m as f64, c.gap, c.lipschitz_bound, c.block_error, slope.unwrap_or(f64::NAN)]);
            }
            t
        }
        "sieve" => {
            let mut t = Table::new("sieve", &["z", "level", "s", "lower", "exact", "upper", "holds"]);
            let mut all = true;
            for r in records {
                let b = payload::<SievePayload>(r)?.report;
                all &= b.holds;
                t.push(vec![b.z, b.level, b.s, b.lower.unwrap_or(f64::NAN), b.exact, b.upper, b.holds as u8 as f64]);
            }
            criteria.push(criterion("sieve brackets hold", all));
            t
        }
        "pipeline" => {
            let mut t = Table::new("pipeline", &["n", "bump", "lower", "exact", "almost_prime_sum"]);
            let mut all = true;
            for r in records {
                let p: PipelineReport = payload(r)?;
                for b in &p.bumps {
                    all &= b.almost_prime_sum > 0.0;
                    t.push(vec![p.n as f64, b.index as f64, b.bounds.lower.unwrap_or(f64::NAN), b.bounds.exact, b.almost_prime_sum]);
                }
            }
            criteria.push(criterion("every bump visited at almost-prime times", all));
            t
        }
        "dichotomy" => {
            let mut t = Table::new("dichotomy", &["record", "verdict", "diverges", "horizon"]);
            for (i, r) in records.iter().enumerate() {
                let d: DichotomyReport = payload(r)?;
                let v = match d.verdict {
                    Verdict::DenseEvidence => 1.0,
                    Verdict::TorusConfirmed => 2.0,
                    Verdict::Inconclusive => 0.0,
                };
                t.push(vec![i as f64, v, d.divergence.diverges as u8 as f64, d.divergence.horizon]);
            }
            t
        }
        _ => {
            let mut t = Table::new(&kind, &["record", "status", "runtime_s"]);
            for (i, r) in records.iter().enumerate() {
                t.push(vec![i as f64, status_code(r.status), r.runtime_s]);
            }
            t
        }
    };
    Ok(Report { kind, records: records.len(), table, slope, criteria })
}
