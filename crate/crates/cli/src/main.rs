use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use horolab::experiments::{
    read_records, report, run, ExperimentConfig, ExperimentKind, PointSpec, ResultRecord, RunStatus, DENSITY_CAVEAT,
    PRESETS,
};
use horolab::lattice::LatticeDescriptor;
use horolab::Error;
use serde_json::{Map, Value};

/// Experiments on sparse unipotent orbits in products of SL2(R) modulo lattices.
///
/// Experiment parameters follow the subcommand as `key=value` or `key value`
/// pairs (keys are case-insensitive, `-` and `_` are interchangeable), e.g.
/// `average --timeset progression K=1 T=1e4` or `sieve --toy-unit-weights N=1e6 z-exp 0.1111 s 9`.
/// Lists are comma separated. Exit codes: 0 success, 1 malformed config,
/// 2 numeric-tolerance failure, 3 budget exhaustion.
#[derive(Parser, Debug)]
#[command(name = "horolab", version, verbatim_doc_comment)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// TOML (or JSON) experiment configuration; command-line values override it.
    #[arg(long, global = true, env = "HOROLAB_CONFIG")]
    config: Option<PathBuf>,
    /// Output directory for records and tables.
    #[arg(long, global = true, env = "HOROLAB_OUT")]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "HOROLAB_WORKERS")]
    workers: Option<usize>,
    #[arg(long, global = true, env = "HOROLAB_SEED")]
    seed: Option<u64>,
    /// Tolerance override `name=value` (repeatable, or comma separated).
    #[arg(long = "tolerance", global = true, env = "HOROLAB_TOLERANCE", value_delimiter = ',')]
    tolerance: Vec<String>,
    /// Print the full record as JSON.
    #[arg(long, global = true)]
    json: bool,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// `modular`, `hilbert` (with `D=<d>`) or `hilbert:<d>`.
    #[arg(long, env = "HOROLAB_LATTICE")]
    lattice: Option<String>,
    /// `preset:<name>`, a bare preset name, `chart:x,y,theta[;...]` or `rep:a,b,c,d[;...]`.
    #[arg(long, env = "HOROLAB_POINT")]
    point: Option<String>,
    /// Experiment parameters.
    #[arg(allow_negative_numbers = true, value_name = "PARAM")]
    params: Vec<String>,
}

#[derive(Args, Debug)]
struct TimesetArgs {
    /// interval | progression | almost_primes | polynomial_times | block
    #[arg(long)]
    timeset: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct MixingArgs {
    /// geodesic | horocycle
    #[arg(long)]
    flow: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct SieveArgs {
    /// Weights a(n) = 1 (set N with `N=`).
    #[arg(long, conflicts_with_all = ["random_weights", "weights_file"])]
    toy_unit_weights: bool,
    /// Uniform random weights drawn from the seed.
    #[arg(long, conflicts_with = "weights_file")]
    random_weights: bool,
    /// Binary weight file (select the vector with `index=`).
    #[arg(long)]
    weights_file: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct DichotomyArgs {
    /// integers | polynomial
    #[arg(long)]
    mode: Option<String>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Record files (default: records.jsonl in the output directory).
    files: Vec<PathBuf>,
}

#[derive(Args, Debug)]
struct DescribeArgs {
    /// Experiment kind (all when absent).
    kind: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Reduce the point into the fundamental domain.
    Reduce(Common),
    /// Cusp heights along u(t) p for t in a time set.
    Orbit(TimesetArgs),
    /// Sparse Birkhoff average against its reference.
    Average(TimesetArgs),
    /// Correlation decay under a flow.
    Mixing(MixingArgs),
    /// Polynomial-time blocks against their linear surrogates.
    Blocks(Common),
    /// Linear sieve brackets for a weight sequence.
    Sieve(SieveArgs),
    /// Search for a compact torus orbit through the point.
    Torus(Common),
    /// Sieve pipeline over a bump cover.
    Pipeline(Common),
    /// Dense-evidence versus torus verdict.
    Dichotomy(DichotomyArgs),
    /// Summarize records of one configuration.
    Report(ReportArgs),
    /// Print default configurations, presets and tolerances.
    Describe(DescribeArgs),
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Tolerance(_) | Error::Resolution(_) | Error::Numeric(_) => 2,
        Error::Budget(_) => 3,
        _ => 1,
    }
}

fn status_code(s: RunStatus) -> u8 {
    match s {
        RunStatus::Ok => 0,
        RunStatus::ToleranceFailure => 2,
        RunStatus::BudgetExhausted => 3,
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().to_lowercase().replace('-', "_")
}

fn scalar(v: &str) -> Value {
    let v = v.trim();
    if let Ok(b) = v.parse::<bool>() {
        return Value::Bool(b);
    }
    if let Ok(x) = v.parse::<f64>() {
        if x.fract() == 0.0 && x.abs() < 9.0e15 {
            return if x < 0.0 { Value::from(x as i64) } else { Value::from(x as u64) };
        }
        return Value::from(x);
    }
    Value::String(v.to_string())
}

fn param_value(v: &str) -> Value {
    if v.contains(',') {
        Value::Array(v.split(',').filter(|s| !s.trim().is_empty()).map(scalar).collect())
    } else {
        scalar(v)
    }
}

/// `key=value` or `key value` pairs.
fn parse_params(tokens: &[String]) -> Result<Vec<(String, Value)>, Error> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        if let Some((k, v)) = tokens[i].split_once('=') {
            out.push((normalize_key(k), param_value(v)));
            i += 1;
        } else {
            let v = tokens
                .get(i + 1)
                .ok_or_else(|| Error::Config(format!("parameter `{}` has no value", tokens[i])))?;
            out.push((normalize_key(&tokens[i]), param_value(v)));
            i += 2;
        }
    }
    Ok(out)
}

fn parse_lattice(s: &str) -> Result<LatticeDescriptor, Error> {
    match s.split_once(':') {
        None if s == "modular" => Ok(LatticeDescriptor::Modular),
        None if s == "hilbert" => Ok(LatticeDescriptor::Hilbert { d: 2 }),
        Some(("hilbert", d)) => d
            .parse()
            .map(|d| LatticeDescriptor::Hilbert { d })
            .map_err(|e| Error::Config(format!("lattice `{s}`: {e}"))),
        _ => Err(Error::Config(format!("unknown lattice `{s}` (modular, hilbert, hilbert:<d>)"))),
    }
}

fn parse_point(s: &str) -> Result<PointSpec, Error> {
    if s.contains(':') {
        PointSpec::parse(s)
    } else {
        Ok(PointSpec::Preset { name: s.to_string() })
    }
}

/// Sets `key` on the experiment: top-level fields first, then the nested
/// time set or weight source.
fn set_param(kind: &mut Map<String, Value>, key: &str, value: Value) -> Result<(), Error> {
    if key != "kind" && kind.contains_key(key) {
        kind.insert(key.to_string(), value);
        return Ok(());
    }
    for nested in ["timeset", "weights"] {
        if let Some(Value::Object(inner)) = kind.get_mut(nested) {
            inner.insert(key.to_string(), value);
            return Ok(());
        }
    }
    let name = kind.get("kind").and_then(Value::as_str).unwrap_or("?");
    Err(Error::Config(format!("unknown parameter `{key}` for `{name}`")))
}

struct Overrides<'a> {
    common: &'a Common,
    /// Nested object replaced by `{"kind": name}` (e.g. `--timeset progression`).
    nested: Option<(&'static str, Value)>,
    /// Top-level field set directly (e.g. `--flow horocycle`).
    fields: Vec<(&'static str, Value)>,
}

fn build_config(name: &str, global: &Global, ov: Overrides) -> Result<ExperimentConfig, Error> {
    let mut config = match &global.config {
        Some(path) => {
            let c = ExperimentConfig::load(path)?;
            if c.experiment.name() != name {
                return Err(Error::Config(format!(
                    "{}: experiment kind is `{}`, subcommand is `{name}`",
                    path.display(),
                    c.experiment.name()
                )));
            }
            c
        }
        None => {
            let kind = ExperimentKind::examples().into_iter().find(|k| k.name() == name).expect("known kind");
            ExperimentConfig::new(kind)
        }
    };
    let common = ov.common;
    if let Some(l) = &common.lattice {
        config.lattice = parse_lattice(l)?;
    }
    let mut kind = match serde_json::to_value(&config.experiment) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("experiment kinds serialize to objects"),
    };
    if let Some((field, v)) = ov.nested {
        kind.insert(field.to_string(), v);
    }
    for (field, v) in ov.fields {
        kind.insert(field.to_string(), v);
    }
    for (key, value) in parse_params(&common.params)? {
        if key == "d" {
            match (&mut config.lattice, value.as_i64()) {
                (LatticeDescriptor::Hilbert { d }, Some(v)) => *d = v,
                _ => return Err(Error::Config("`D=` needs `--lattice hilbert` and an integer".into())),
            }
            continue;
        }
        set_param(&mut kind, &key, value)?;
    }
    config.experiment = serde_json::from_value(Value::Object(kind))
        .map_err(|e| Error::Config(format!("experiment `{name}`: {e}")))?;
    match &common.point {
        Some(p) => config.point = parse_point(p)?,
        None if global.config.is_none() && config.lattice.k() == 2 => {
            config.point = PointSpec::Preset { name: "hilbert_generic".into() }
        }
        None => {}
    }
    if let Some(o) = &global.out {
        config.output.dir = o.clone();
    }
    if let Some(w) = global.workers {
        config.workers = Some(w);
    }
    if let Some(s) = global.seed {
        config.seed = s;
    }
    for t in &global.tolerance {
        config.tolerances.set(t)?;
    }
    Ok(config)
}

fn fmt_value(v: &Value) -> String {
    match v {
        Value::Array(xs) if xs.len() > 8 => format!("[{} entries]", xs.len()),
        Value::Object(m) => format!("{{{} fields}}", m.len()),
        other => other.to_string(),
    }
}

fn print_summary(r: &ResultRecord) {
    println!("kind = {}", r.kind);
    if let Value::Object(m) = &r.payload {
        for (k, v) in m {
            match (r.kind.as_str(), k.as_str()) {
                ("average", "results") => {
                    for res in v.as_array().into_iter().flatten() {
                        println!(
                            "average T = {} value = {} reference = {} deviation = {} samples = {}",
                            res["timeset"].as_object().map_or(Value::Null, |t| {
                                t.get("t").or(t.get("n")).or(t.get("m")).cloned().unwrap_or(Value::Null)
                            }),
                            res["value"],
                            res["reference"],
                            res["deviation"],
                            res["sample_count"]
                        );
                    }
                }
                ("sieve", "report") => {
                    for f in ["z", "level", "lower", "exact", "upper"] {
                        println!("{f} = {}", v[f]);
                    }
                    println!("brackets_hold = {}", v["holds"]);
                }
                ("pipeline", "bumps") => {
                    for b in v.as_array().into_iter().flatten() {
                        println!(
                            "bump {} almost_prime_sum = {} lower = {} chain_holds = {}",
                            b["index"], b["almost_prime_sum"], b["bounds"]["lower"], b["chain_holds"]
                        );
                    }
                }
                (_, "height_series" | "stabilizer_generators") => {}
                _ => println!("{k} = {}", fmt_value(v)),
            }
        }
    }
    for (name, v) in [
        ("average_slope", r.exponents.average_slope),
        ("block_slope", r.exponents.block_slope),
        ("mixing_slope", r.exponents.mixing_slope),
    ] {
        if let Some(v) = v {
            println!("{name} = {v}");
        }
    }
    println!("status = {}", serde_json::to_value(r.status).unwrap_or(Value::Null).as_str().unwrap_or("?"));
    println!("content_id = {}", r.content_id);
}

fn run_experiment(name: &str, global: &Global, ov: Overrides) -> Result<u8, Error> {
    let config = build_config(name, global, ov)?;
    let art = run(&config)?;
    if global.json {
        println!("{}", serde_json::to_string(&art.record).map_err(|e| Error::Io(e.to_string()))?);
    } else {
        print_summary(&art.record);
        println!("record appended to {}", art.records_path.display());
        for t in &art.tables {
            println!("table {}", t.display());
        }
    }
    if art.record.payload.get("verdict").and_then(Value::as_str) == Some("dense-evidence") {
        eprintln!("note: {DENSITY_CAVEAT}");
    }
    Ok(status_code(art.record.status))
}

fn run_report(global: &Global, args: &ReportArgs) -> Result<u8, Error> {
    let out = global.out.clone().unwrap_or_else(|| PathBuf::from("results"));
    let files = if args.files.is_empty() { vec![out.join("records.jsonl")] } else { args.files.clone() };
    let mut records = Vec::new();
    for f in &files {
        records.extend(read_records(f)?);
    }
    let rep = report(&records)?;
    let dir = global.out.clone().unwrap_or_else(|| files[0].parent().unwrap_or(Path::new(".")).to_path_buf());
    let written = rep.write(&dir)?;
    println!("# {} ({} records)", rep.kind, rep.records);
    println!("{}", rep.table.header.join("\t"));
    for row in &rep.table.rows {
        println!("{}", row.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join("\t"));
    }
    if let Some(s) = rep.slope {
        println!("slope = {s}");
    }
    for c in &rep.criteria {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    for w in written {
        println!("table {}", w.display());
    }
    Ok(if rep.passed() { 0 } else { 2 })
}

fn describe(kind: Option<&str>) -> Result<u8, Error> {
    let kinds: Vec<ExperimentKind> = ExperimentKind::examples()
        .into_iter()
        .filter(|k| kind.is_none_or(|n| k.name() == n))
        .collect();
    if kinds.is_empty() {
        return Err(Error::Config(format!("unknown experiment kind `{}`", kind.unwrap_or_default())));
    }
    for k in kinds {
        println!("# {}\n{}", k.name(), ExperimentConfig::new(k).to_toml()?);
    }
    println!("# point presets: {}", PRESETS.join(", "));
    println!("# environment: HOROLAB_CONFIG, HOROLAB_OUT, HOROLAB_WORKERS, HOROLAB_SEED, HOROLAB_TOLERANCE, HOROLAB_LATTICE, HOROLAB_POINT");
    Ok(0)
}

fn dispatch(cli: &Cli) -> Result<u8, Error> {
    let g = &cli.global;
    let plain = |c| Overrides { common: c, nested: None, fields: vec![] };
    let with_kind = |field: &'static str, v: &Option<String>| {
        v.as_ref().map(|n| (field, serde_json::json!({ "kind": n.replace('-', "_") })))
    };
    match &cli.command {
        Command::Reduce(c) => run_experiment("reduce", g, plain(c)),
        Command::Blocks(c) => run_experiment("blocks", g, plain(c)),
        Command::Torus(c) => run_experiment("torus", g, plain(c)),
        Command::Pipeline(c) => run_experiment("pipeline", g, plain(c)),
        Command::Orbit(a) | Command::Average(a) => {
            let name = if matches!(cli.command, Command::Orbit(_)) { "orbit" } else { "average" };
            let ov = Overrides { common: &a.common, nested: with_kind("timeset", &a.timeset), fields: vec![] };
            run_experiment(name, g, ov)
        }
        Command::Mixing(a) => {
            let fields = a.flow.iter().map(|f| ("flow", Value::from(f.as_str()))).collect();
            run_experiment("mixing", g, Overrides { common: &a.common, nested: None, fields })
        }
        Command::Sieve(a) => {
            let nested = if a.toy_unit_weights {
                Some(("weights", serde_json::json!({ "kind": "unit" })))
            } else if a.random_weights {
                Some(("weights", serde_json::json!({ "kind": "random" })))
            } else {
                a.weights_file
                    .as_ref()
                    .map(|p| ("weights", serde_json::json!({ "kind": "file", "path": p, "index": 0 })))
            };
            run_experiment("sieve", g, Overrides { common: &a.common, nested, fields: vec![] })
        }
        Command::Dichotomy(a) => {
            let fields = a.mode.iter().map(|m| ("mode", Value::from(m.as_str()))).collect();
            run_experiment("dichotomy", g, Overrides { common: &a.common, nested: None, fields })
        }
        Command::Report(a) => run_report(g, a),
        Command::Describe(a) => describe(a.kind.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
