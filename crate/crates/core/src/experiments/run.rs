use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::lattice::{
    cusp_height, injectivity_radius, reduce, torus_orbit_check, ChartCoord, QuotientPoint, TorusReport,
};
use crate::numeric::linear_fit;
use crate::observables::{haar_integral_k1, BumpFunction, Observable};
use crate::sampler::{
    block_average_compare, correlation, decay_fit, generate, max_quadrature_step, point_id, sparse_average,
    AverageResult, BlockComparison, DecayFit, Flow, OrbitWalker, TimeSet,
};
use crate::sieve::{dynamical_sieve_pipeline, read_weights, sieve_bounds, Density, PipelineReport, SieveBoundsReport, SieveProblem};

use super::config::{ExperimentConfig, ExperimentKind, WeightSource};
use super::dichotomy::{dichotomy, DichotomyParams, DichotomyReport, Verdict};
use super::record::{
    append_record, config_hash, content_id, strip_timing, Environment, Exponents, ResultRecord, RunStatus, Table,
    SCHEMA_VERSION,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducePayload {
    pub input_chart: Vec<ChartCoord>,
    pub reduced_chart: Vec<ChartCoord>,
    pub point_id: String,
    pub cusp_height: f64,
    pub injectivity_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitPayload {
    pub samples: usize,
    pub stride: usize,
    pub max_height: f64,
    pub mean_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AveragePayload {
    pub results: Vec<AverageResult>,
    pub scales: Vec<f64>,
    pub fit: Option<DecayFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixingPayload {
    pub flow: Flow,
    pub times: Vec<f64>,
    pub correlations: Vec<f64>,
    /// Slope of `ln |c(t)|` against `t`.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlocksPayload {
    pub comparisons: Vec<BlockComparison>,
    /// Slope of `ln gap` against `ln M`.
    pub slope: Option<f64>,
    pub lipschitz_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SievePayload {
    pub weights: WeightSource,
    pub report: SieveBoundsReport,
}

/// Outcome of one experiment before it is wrapped in a record.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub payload: Value,
    pub status: RunStatus,
    pub exponents: Exponents,
    pub tables: Vec<Table>,
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

fn chart_row(c: &[ChartCoord]) -> Vec<f64> {
    c.iter().flat_map(|c| [c.x, c.y, c.theta]).collect()
}

fn chart_header(k: usize) -> Vec<String> {
    (1..=k).flat_map(|i| [format!("x{i}"), format!("y{i}"), format!("theta{i}")]).collect()
}

/// Replaces the size parameter of a time set by `scale`.
pub fn rescale(ts: &TimeSet, scale: f64) -> TimeSet {
    match *ts {
        TimeSet::Interval { quadrature_step, .. } => TimeSet::Interval { t: scale, quadrature_step },
        TimeSet::Progression { k, .. } => TimeSet::Progression { k, t: scale },
        TimeSet::AlmostPrimes { l, .. } => TimeSet::AlmostPrimes { l, n: scale as u64 },
        TimeSet::PolynomialTimes { gamma_exp, .. } => TimeSet::PolynomialTimes { gamma_exp, n: scale as u64 },
        TimeSet::Block { gamma_exp, .. } => TimeSet::Block { m: scale as u64, gamma_exp },
    }
}

fn with_step(ts: TimeSet, f: &Observable, step: Option<f64>) -> TimeSet {
    match ts {
        TimeSet::Interval { t, quadrature_step } => {
            let q = step.unwrap_or(quadrature_step);
            let q = if q > 0.0 { q } else { max_quadrature_step(f) };
            TimeSet::Interval { t, quadrature_step: q.min(t) }
        }
        other => other,
    }
}

fn default_mixing_pair(p: &QuotientPoint) -> Result<Vec<Observable>> {
    let lat = p.lattice.clone();
    let mk = |x: f64, y: f64, th: f64| -> Result<Observable> {
        let c = QuotientPoint::from_chart(lat.clone(), &[ChartCoord::new(x, y, th)])?;
        Ok(Observable::bump(BumpFunction::new(&c, vec![[0.25, 0.35, 0.6]], 1.0)?))
    };
    Ok(vec![mk(0.1, 1.7, 0.4)?, mk(0.15, 1.8, 0.6)?])
}

fn build_weights(src: &WeightSource, seed: u64) -> Result<Vec<f64>> {
    match src {
        WeightSource::Unit { n } => {
            let mut w = vec![1.0; *n as usize + 1];
            w[0] = 0.0;
            Ok(w)
        }
        WeightSource::Random { n } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..=*n).map(|i| if i == 0 { 0.0 } else { rng.gen::<f64>() }).collect())
        }
        WeightSource::File { path, index } => {
            let wf = read_weights(path)?;
            wf.vectors
                .get(*index)
                .cloned()
                .ok_or_else(|| Error::Config(format!("{} has no weight vector {index}", path.display())))
        }
    }
}

/// Runs the experiment on the current rayon pool.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    let lat = config.lattice()?;
    let p = config.point.resolve(lat.clone())?;
    let mut exponents = Exponents::default();
    let mut status = RunStatus::Ok;
    let mut tables = Vec::new();
    let payload = match &config.experiment {
        ExperimentKind::Reduce {} => {
            let r = reduce(&p);
            let out = ReducePayload {
                input_chart: p.chart(),
                reduced_chart: r.chart(),
                point_id: point_id(&p),
                cusp_height: cusp_height(&p),
                injectivity_radius: injectivity_radius(&p),
            };
            let mut t = Table::new("reduce", &[]);
            t.header = chart_header(p.k());
            t.header.extend(["cusp_height".into(), "injectivity_radius".into()]);
            let mut row = chart_row(&out.reduced_chart);
            row.extend([out.cusp_height, out.injectivity_radius]);
            t.push(row);
            tables.push(t);
            to_value(&out)?
        }
        ExperimentKind::Orbit { timeset, max_rows } => {
            let times = generate(timeset)?;
            let stride = times.len().div_ceil((*max_rows).max(1)).max(1);
            let mut t = Table::new("orbit", &["t", "height"]);
            t.header.extend(chart_header(p.k()));
            let base = p.inverse_rep();
            let mut w = OrbitWalker::new(&lat, &base, times.first().copied().unwrap_or(0.0));
            let (mut max_h, mut sum_h, mut count) = (0.0f64, 0.0, 0usize);
            for &s in times.iter().step_by(stride) {
                w.step_to(s);
                let q = QuotientPoint::from_inverse_rep(lat.clone(), w.inverse_rep().to_vec())?;
                let h = cusp_height(&q);
                max_h = max_h.max(h);
                sum_h += h;
                count += 1;
                let mut row = vec![s, h];
                row.extend(chart_row(w.chart()));
                t.push(row);
            }
            tables.push(t);
            to_value(&OrbitPayload {
                samples: count,
                stride,
                max_height: max_h,
                mean_height: if count > 0 { sum_h / count as f64 } else { 0.0 },
            })?
        }
        ExperimentKind::Average { timeset, scales } => {
            let f = config.observables_or_default(&lat)?.remove(0);
            let sets: Vec<TimeSet> = if scales.is_empty() {
                vec![*timeset]
            } else {
                scales.iter().map(|&s| rescale(timeset, s)).collect()
            };
            let mut results = Vec::with_capacity(sets.len());
            for ts in sets {
                results.push(sparse_average(&f, &p, &with_step(ts, &f, config.tolerances.quadrature_step))?);
            }
            let mut t = Table::new("average", &["scale", "value", "reference", "deviation", "samples"]);
            let mut series = Vec::new();
            for r in &results {
                let scale = r.timeset.horizon();
                let dev = r.deviation.unwrap_or(f64::NAN);
                t.push(vec![scale, r.value, r.reference.unwrap_or(f64::NAN), dev, r.sample_count as f64]);
                if r.deviation.is_some() {
                    series.push((scale, dev));
                }
            }
            tables.push(t);
            let fit = if series.len() >= 4 { Some(decay_fit(&series)?) } else { None };
            exponents.average_slope = fit.map(|f| f.slope);
            to_value(&AveragePayload { results, scales: scales.clone(), fit })?
        }
        ExperimentKind::Mixing { flow, times, centre } => {
            let mut obs = if config.observables.len() >= 2 {
                config.observables_or_default(&lat)?
            } else {
                default_mixing_pair(&p)?
            };
            if *centre {
                for o in obs.iter_mut() {
                    let m = haar_integral_k1(o)?;
                    *o = o.clone().shifted(-m);
                }
            }
            let mut cs = Vec::with_capacity(times.len());
            for &s in times {
                cs.push(correlation(&obs[0], &obs[1], s, *flow)?);
            }
            let mut t = Table::new("mixing", &["t", "correlation"]);
            for (&s, &c) in times.iter().zip(&cs) {
                t.push(vec![s, c]);
            }
            tables.push(t);
            let pts: Vec<(f64, f64)> = times.iter().zip(&cs).filter(|(_, c)| c.abs() > 0.0).map(|(&s, c)| (s, c.abs().ln())).collect();
            let slope = (pts.len() >= 2).then(|| {
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                linear_fit(&xs, &ys).0
            });
            exponents.mixing_slope = slope;
            to_value(&MixingPayload { flow: *flow, times: times.clone(), correlations: cs, slope })?
        }
        ExperimentKind::Blocks { m_values, gamma_exp } => {
            let f = config.observables_or_default(&lat)?.remove(0);
            let comparisons = m_values
                .iter()
                .map(|&m| block_average_compare(&f, &p, m, *gamma_exp))
                .collect::<Result<Vec<_>>>()?;
            let mut t = Table::new("blocks", &["m", "k_max", "exact_avg", "linear_avg", "gap", "block_error", "lipschitz_bound"]);
            for c in &comparisons {
                t.push(vec![c.m as f64, c.k_max as f64, c.exact_avg, c.linear_avg, c.gap, c.block_error, c.lipschitz_bound]);
            }
            tables.push(t);
            let pts: Vec<(f64, f64)> = comparisons.iter().filter(|c| c.gap > 0.0).map(|c| ((c.m as f64).ln(), c.gap.ln())).collect();
            let slope = (pts.len() >= 2).then(|| {
                let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
                linear_fit(&xs, &ys).0
            });
            exponents.block_slope = slope;
            let lipschitz_holds = comparisons.iter().all(|c| c.gap <= c.lipschitz_bound);
            if !lipschitz_holds {
                status = RunStatus::ToleranceFailure;
            }
            to_value(&BlocksPayload { comparisons, slope, lipschitz_holds })?
        }
        ExperimentKind::Sieve { weights, z_exp, s, epsilon, excluded } => {
            let w = build_weights(weights, config.seed)?;
            let n = (w.len() - 1) as f64;
            let z = n.powf(*z_exp);
            let prob = SieveProblem {
                weights: w,
                excluded: excluded.clone(),
                density: Density::Reciprocal,
                z,
                level: z.powf(*s),
                epsilon: *epsilon,
            };
            let report = sieve_bounds(&prob)?;
            if !report.holds {
                status = RunStatus::ToleranceFailure;
            }
            let mut t = Table::new("sieve", &["z", "level", "s", "exact", "lower", "upper", "remainder_sum", "divisors"]);
            t.push(vec![
                report.z,
                report.level,
                report.s,
                report.exact,
                report.lower.unwrap_or(f64::NAN),
                report.upper,
                report.remainder_sum,
                report.divisor_count as f64,
            ]);
            tables.push(t);
            to_value(&SievePayload { weights: weights.clone(), report })?
        }
        ExperimentKind::Torus { search_budget } => {
            let r: TorusReport = torus_orbit_check(&p, *search_budget);
            let mut t = Table::new("torus", &["found", "torus_dim", "orbit_bounded", "max_orbit_height", "sparse_orbit_max_height"]);
            t.push(vec![
                r.found as u8 as f64,
                r.torus_dim as f64,
                r.orbit_bounded as u8 as f64,
                r.max_orbit_height,
                r.sparse_orbit_max_height,
            ]);
            tables.push(t);
            to_value(&r)?
        }
        ExperimentKind::Pipeline { n, alpha, epsilon, s_target, u_tilde } => {
            let cover = config.observables_or_cover(&lat)?;
            let r: PipelineReport = dynamical_sieve_pipeline(&cover, &p, *n, *alpha, *epsilon, *s_target, *u_tilde)?;
            if r.bumps.iter().any(|b| !b.chain_holds || !b.bounds.holds) {
                status = RunStatus::ToleranceFailure;
            }
            let mut t = Table::new("pipeline", &["bump", "a_total", "exact", "lower", "upper", "almost_prime_sum"]);
            for b in &r.bumps {
                t.push(vec![
                    b.index as f64,
                    b.bounds.a_total,
                    b.bounds.exact,
                    b.bounds.lower.unwrap_or(f64::NAN),
                    b.bounds.upper,
                    b.almost_prime_sum,
                ]);
            }
            tables.push(t);
            to_value(&r)?
        }
        ExperimentKind::Dichotomy {
            mode,
            t_max,
            n,
            alpha,
            epsilon,
            s_target,
            gamma_exp,
            m_values,
            search_budget,
        } => {
            let cover = config.observables_or_cover(&lat)?;
            let prm = DichotomyParams {
                mode: *mode,
                t_max: *t_max,
                threshold: config.tolerances.divergence_threshold,
                n: *n,
                alpha: *alpha,
                epsilon: *epsilon,
                s_target: *s_target,
                gamma_exp: *gamma_exp,
                m_values: m_values.clone(),
                search_budget: *search_budget,
            };
            let r: DichotomyReport = dichotomy(&p, &cover, &prm)?;
            let mut t = Table::new("dichotomy", &["t", "height"]);
            for &(s, h) in &r.divergence.height_series {
                t.push(vec![s, h]);
            }
            tables.push(t);
            to_value(&r)?
        }
    };
    let mut payload = payload;
    strip_timing(&mut payload);
    Ok(RunOutput { payload, status, exponents, tables })
}

/// Files written by [`run`].
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub record: ResultRecord,
    pub records_path: PathBuf,
    pub tables: Vec<PathBuf>,
}

/// Executes on a pool of `config.workers` threads and returns the record.
pub fn run_record(config: &ExperimentConfig) -> Result<(ResultRecord, Vec<Table>)> {
    let workers = config
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(Error::Config("workers must be >= 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let out = pool.install(|| execute(config))?;
    let record = ResultRecord {
        schema_version: SCHEMA_VERSION,
        kind: config.experiment.name().to_string(),
        config_hash: config_hash(config)?,
        content_id: content_id(&out.payload),
        started: started.to_rfc3339(),
        finished: chrono::Utc::now().to_rfc3339(),
        runtime_s: clock.elapsed().as_secs_f64(),
        status: out.status,
        payload: out.payload,
        exponents: out.exponents,
        environment: Environment::capture(workers),
        config: config.clone(),
    };
    Ok((record, out.tables))
}

/// Runs the experiment, appends its record and writes its tables.
pub fn run(config: &ExperimentConfig) -> Result<RunArtifacts> {
    let (record, tables) = run_record(config)?;
    let dir = &config.output.dir;
    let records_path = dir.join(&config.output.records);
    append_record(&records_path, &record)?;
    let mut files = Vec::new();
    for t in &tables {
        let stem = format!("{}-{}", t.name, &record.content_id[..12]);
        files.extend(t.write(dir, &stem)?);
    }
    Ok(RunArtifacts { record, records_path, tables: files })
}

/// Verdict of a dichotomy record.
pub fn verdict_of(record: &ResultRecord) -> Option<Verdict> {
    serde_json::from_value::<DichotomyReport>(record.payload.clone()).ok().map(|r| r.verdict)
}
