use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::Mat2;
use crate::lattice::{ChartCoord, DivergencePath, Lattice, LatticeDescriptor, LatticeParams, QuotientPoint};
use crate::observables::{BumpFunction, Observable};
use crate::sampler::{Flow, TimeSet, MAX_TIME};

use super::presets::{preset_point, ten_bump_cover};

/// Base point: a named preset, chart coordinates of the inverse
/// representative, or the inverse representative itself (row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PointSpec {
    Preset { name: String },
    Chart { coords: Vec<[f64; 3]> },
    InverseRep { factors: Vec<[f64; 4]> },
}

impl Default for PointSpec {
    fn default() -> Self {
        PointSpec::Preset { name: "generic1".into() }
    }
}

impl PointSpec {
    /// `preset:NAME`, `chart:x,y,theta[;x,y,theta]` or `rep:a,b,c,d[;...]`.
    pub fn parse(s: &str) -> Result<Self> {
        let (tag, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("point `{s}`: expected preset:, chart: or rep:")))?;
        let nums = |part: &str| -> Result<Vec<f64>> {
            part.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Config(format!("point `{s}`: {e}"))))
                .collect()
        };
        match tag {
            "preset" => Ok(PointSpec::Preset { name: rest.to_string() }),
            "chart" => {
                let mut coords = Vec::new();
                for part in rest.split(';') {
                    let v = nums(part)?;
                    let [x, y, t] = v[..] else {
                        return Err(Error::Config(format!("point `{s}`: chart entries need 3 numbers")));
                    };
                    coords.push([x, y, t]);
                }
                Ok(PointSpec::Chart { coords })
            }
            "rep" => {
                let mut factors = Vec::new();
                for part in rest.split(';') {
                    let v = nums(part)?;
                    let [a, b, c, d] = v[..] else {
                        return Err(Error::Config(format!("point `{s}`: rep entries need 4 numbers")));
                    };
                    factors.push([a, b, c, d]);
                }
                Ok(PointSpec::InverseRep { factors })
            }
            _ => Err(Error::Config(format!("point `{s}`: unknown tag `{tag}`"))),
        }
    }

    pub fn resolve(&self, lat: Arc<Lattice>) -> Result<QuotientPoint> {
        match self {
            PointSpec::Preset { name } => preset_point(lat, name),
            PointSpec::Chart { coords } => {
                let c: Vec<ChartCoord> = coords.iter().map(|c| ChartCoord::new(c[0], c[1], c[2])).collect();
                QuotientPoint::from_chart(lat, &c)
            }
            PointSpec::InverseRep { factors } => {
                let h = factors.iter().map(|f| Mat2::new(f[0], f[1], f[2], f[3])).collect();
                QuotientPoint::from_inverse_rep(lat, h)
            }
        }
    }
}

/// `constant + sum coefficient_j * bump_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableSpec {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub bumps: Vec<BumpSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    /// Chart `[x, y, theta]` of the centre, one per factor.
    pub center: Vec<[f64; 3]>,
    pub widths: Vec<[f64; 3]>,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub coefficient: f64,
}

fn one() -> f64 {
    1.0
}

impl ObservableSpec {
    pub fn build(&self, lat: &Arc<Lattice>) -> Result<Observable> {
        let mut f = Observable::constant(self.constant);
        for b in &self.bumps {
            let c: Vec<ChartCoord> = b.center.iter().map(|c| ChartCoord::new(c[0], c[1], c[2])).collect();
            let p = QuotientPoint::from_chart(lat.clone(), &c)?;
            f = f.plus(b.coefficient, BumpFunction::new(&p, b.widths.clone(), b.amplitude)?);
        }
        Ok(f)
    }

    /// Bump at `(0.1, 1.3, 0.2)` with half-widths `[0.3, 0.3, 0.5]` in every
    /// factor: the default test function.
    pub fn default_bump(k: usize) -> Self {
        ObservableSpec {
            constant: 0.0,
            bumps: vec![BumpSpec {
                center: vec![[0.1, 1.3, 0.2]; k],
                widths: vec![[0.3, 0.3, 0.5]; k],
                amplitude: 1.0,
                coefficient: 1.0,
            }],
        }
    }
}

/// Source of sieve weights `a(1..=N)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSource {
    /// `a(n) = 1`.
    Unit { n: u64 },
    /// Independent uniform weights in `[0, 1)` drawn from the run seed.
    Random { n: u64 },
    /// Vector `index` of a binary weight file.
    File { path: PathBuf, index: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DichotomyMode {
    /// Sieve density surrogate along integer times.
    #[default]
    Integers,
    /// Block surrogate along `n^(1+gamma)`.
    Polynomial,
}

/// Experiment and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentKind {
    Reduce {},
    /// Heights and reduced charts along `u(t) p` for `t` in a time set.
    Orbit {
        timeset: TimeSet,
        #[serde(default = "default_max_rows")]
        max_rows: usize,
    },
    /// Sparse average; with `scales`, the time set's size parameter is swept
    /// and the deviations fitted.
    Average {
        timeset: TimeSet,
        #[serde(default)]
        scales: Vec<f64>,
    },
    /// Correlations of the first two observables (centred when `centre`).
    Mixing {
        flow: Flow,
        times: Vec<f64>,
        #[serde(default = "yes")]
        centre: bool,
    },
    Blocks { m_values: Vec<u64>, gamma_exp: f64 },
    Sieve {
        weights: WeightSource,
        /// `z = N^z_exp`.
        z_exp: f64,
        /// `D = z^s`.
        s: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default)]
        excluded: Vec<u64>,
    },
    Torus {
        #[serde(default = "default_search_budget")]
        search_budget: usize,
    },
    /// Sieve pipeline over the observables (the ten-bump cover when none).
    Pipeline {
        n: u64,
        alpha: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_s_target")]
        s_target: f64,
        #[serde(default)]
        u_tilde: Option<u64>,
    },
    Dichotomy {
        #[serde(default)]
        mode: DichotomyMode,
        /// Geodesic time of the divergence test (the polynomial path runs to
        /// the matching parameter).
        #[serde(default = "default_t_max")]
        t_max: f64,
        #[serde(default = "default_n")]
        n: u64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default = "default_s_target")]
        s_target: f64,
        #[serde(default = "default_gamma")]
        gamma_exp: f64,
        #[serde(default = "default_m_values")]
        m_values: Vec<u64>,
        #[serde(default = "default_search_budget")]
        search_budget: usize,
    },
}

fn yes() -> bool {
    true
}
fn default_max_rows() -> usize {
    10_000
}
fn default_epsilon() -> f64 {
    0.004
}
fn default_s_target() -> f64 {
    101.0
}
fn default_search_budget() -> usize {
    50
}
fn default_t_max() -> f64 {
    30.0
}
fn default_n() -> u64 {
    1_000_000
}
fn default_alpha() -> f64 {
    1.0 / 9.0
}
fn default_gamma() -> f64 {
    0.1
}
fn default_m_values() -> Vec<u64> {
    vec![100_000, 400_000, 1_600_000, 6_400_000]
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Reduce {} => "reduce",
            ExperimentKind::Orbit { .. } => "orbit",
            ExperimentKind::Average { .. } => "average",
            ExperimentKind::Mixing { .. } => "mixing",
            ExperimentKind::Blocks { .. } => "blocks",
            ExperimentKind::Sieve { .. } => "sieve",
            ExperimentKind::Torus { .. } => "torus",
            ExperimentKind::Pipeline { .. } => "pipeline",
            ExperimentKind::Dichotomy { .. } => "dichotomy",
        }
    }

    /// Default parameters of every kind, for `describe`.
    pub fn examples() -> Vec<ExperimentKind> {
        vec![
            ExperimentKind::Reduce {},
            ExperimentKind::Orbit { timeset: TimeSet::Progression { k: 1.0, t: 100.0 }, max_rows: default_max_rows() },
            ExperimentKind::Average { timeset: TimeSet::Progression { k: 1.0, t: 1e4 }, scales: vec![] },
            ExperimentKind::Mixing { flow: Flow::Geodesic, times: vec![0.5, 1.0, 2.0, 4.0, 8.0], centre: true },
            ExperimentKind::Blocks { m_values: default_m_values(), gamma_exp: default_gamma() },
            ExperimentKind::Sieve {
                weights: WeightSource::Unit { n: 1_000_000 },
                z_exp: 1.0 / 9.0,
                s: 9.0,
                epsilon: default_epsilon(),
                excluded: vec![],
            },
            ExperimentKind::Torus { search_budget: default_search_budget() },
            ExperimentKind::Pipeline {
                n: default_n(),
                alpha: default_alpha(),
                epsilon: default_epsilon(),
                s_target: default_s_target(),
                u_tilde: None,
            },
            ExperimentKind::Dichotomy {
                mode: DichotomyMode::Integers,
                t_max: default_t_max(),
                n: default_n(),
                alpha: default_alpha(),
                epsilon: default_epsilon(),
                s_target: default_s_target(),
                gamma_exp: default_gamma(),
                m_values: default_m_values(),
                search_budget: default_search_budget(),
            },
        ]
    }

    /// Divergence path used by the dichotomy.
    pub(crate) fn divergence_path(mode: DichotomyMode, gamma_exp: f64) -> DivergencePath {
        match mode {
            DichotomyMode::Integers => DivergencePath::GeodesicMinus,
            DichotomyMode::Polynomial => DivergencePath::PhiMap { gamma_exp },
        }
    }

    /// Path parameter matching geodesic time `t_max`: `phi(x)` moves by
    /// `a(-ln x / 2)`, so `x = e^(2 t_max)`, capped where `x^(1+gamma)`
    /// still resolves the horocycle (`MAX_TIME`).
    pub(crate) fn divergence_horizon(mode: DichotomyMode, t_max: f64, gamma_exp: f64) -> f64 {
        match mode {
            DichotomyMode::Integers => t_max,
            DichotomyMode::Polynomial => (2.0 * t_max).exp().min(MAX_TIME.powf(1.0 / (1.0 + gamma_exp))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Quadrature step of continuous averages (automatic when absent).
    pub quadrature_step: Option<f64>,
    /// Cusp height marking divergence.
    pub divergence_threshold: f64,
    /// Agreement required between reruns with different worker counts.
    pub determinism: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { quadrature_step: None, divergence_threshold: 100.0, determinism: 1e-12 }
    }
}

impl Tolerances {
    /// Applies `key=value`.
    pub fn set(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("tolerance override `{assignment}` is not key=value")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|e| Error::Config(format!("tolerance `{key}`: {e}")))?;
        match key.trim() {
            "quadrature_step" => self.quadrature_step = Some(v),
            "divergence_threshold" => self.divergence_threshold = v,
            "determinism" => self.determinism = v,
            other => return Err(Error::Config(format!("unknown tolerance `{other}`"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    /// Name of the JSON-lines file inside `dir`.
    pub records: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: PathBuf::from("results"), records: "records.jsonl".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default = "modular")]
    pub lattice: LatticeDescriptor,
    #[serde(default)]
    pub lattice_params: LatticeParams,
    #[serde(default)]
    pub point: PointSpec,
    /// Test functions; experiment-specific defaults apply when empty.
    #[serde(default)]
    pub observables: Vec<ObservableSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Worker threads (all available when absent).
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputSpec,
}

fn modular() -> LatticeDescriptor {
    LatticeDescriptor::Modular
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            lattice: LatticeDescriptor::Modular,
            lattice_params: LatticeParams::default(),
            point: PointSpec::default(),
            observables: Vec::new(),
            tolerances: Tolerances::default(),
            workers: None,
            seed: 0,
            output: OutputSpec::default(),
        }
    }

    /// Parses TOML, or JSON when the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| {
                Error::Config(format!("line {} column {}: {e}", e.line(), e.column()))
            })
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn lattice(&self) -> Result<Arc<Lattice>> {
        Lattice::new(self.lattice.clone(), self.lattice_params.clone())
    }

    /// Observables, or the default bump when none are configured.
    pub fn observables_or_default(&self, lat: &Arc<Lattice>) -> Result<Vec<Observable>> {
        if self.observables.is_empty() {
            Ok(vec![ObservableSpec::default_bump(lat.k()).build(lat)?])
        } else {
            self.observables.iter().map(|o| o.build(lat)).collect()
        }
    }

    /// Observables, or the ten-bump cover when none are configured.
    pub fn observables_or_cover(&self, lat: &Arc<Lattice>) -> Result<Vec<Observable>> {
        if self.observables.is_empty() {
            ten_bump_cover(lat)
        } else {
            self.observables.iter().map(|o| o.build(lat)).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_is_exact() {
        for kind in ExperimentKind::examples() {
            let mut c = ExperimentConfig::new(kind);
            c.observables = vec![ObservableSpec::default_bump(1)];
            c.tolerances.quadrature_step = Some(0.1 + 0.2);
            let text = c.to_toml().unwrap();
            let back = ExperimentConfig::parse(&text).unwrap();
            assert_eq!(back, c, "{text}");
            assert_eq!(back.to_toml().unwrap(), text);
        }
    }

    #[test]
    fn json_is_accepted() {
        let c = ExperimentConfig::parse(r#"{"experiment": {"kind": "reduce"}, "seed": 3}"#).unwrap();
        assert_eq!(c.experiment, ExperimentKind::Reduce {});
        assert_eq!(c.seed, 3);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let e = ExperimentConfig::parse("seed = 1\nbogus = 2\n[experiment]\nkind = \"reduce\"\n").unwrap_err();
        assert!(matches!(e, Error::Config(ref m) if m.contains("bogus")), "{e}");
        assert!(ExperimentConfig::parse("[experiment]\nkind = \"torus\"\nbudget = 3\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nkind = \"reduce\"\nextra = 3\n").is_err());
    }

    #[test]
    fn point_strings() {
        assert_eq!(PointSpec::parse("preset:cusp").unwrap(), PointSpec::Preset { name: "cusp".into() });
        assert_eq!(
            PointSpec::parse("chart:0.1,1.5,0").unwrap(),
            PointSpec::Chart { coords: vec![[0.1, 1.5, 0.0]] }
        );
        assert!(PointSpec::parse("rep:1,2,3").is_err());
        assert!(PointSpec::parse("cusp").is_err());
    }

    #[test]
    fn tolerance_overrides() {
        let mut t = Tolerances::default();
        t.set("divergence_threshold=50").unwrap();
        assert_eq!(t.divergence_threshold, 50.0);
        assert!(t.set("nope=1").is_err());
        assert!(t.set("determinism").is_err());
    }
}
