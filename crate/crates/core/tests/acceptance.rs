//! Acceptance suite: one PASS/FAIL line per criterion, each checked against
//! its tolerance and runtime budget. Failures are reported, not hidden; set
//! `HOROLAB_ACCEPTANCE_STRICT=1` to turn them into a non-zero exit.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use horolab::experiments::{
    dichotomy, execute, ten_bump_cover, DichotomyMode, DichotomyParams, ExperimentConfig, ExperimentKind, PointSpec,
    Verdict, WeightSource,
};
use horolab::group::{
    bracket, compose, diagonal_a, exp_map, log_map, unipotent_u, GroupElement, LieAlgebraElement, Mat2,
};
use horolab::lattice::{reduce, ChartCoord, Lattice, QuotientPoint};
use horolab::observables::{BumpFunction, Observable, SmoothingKernel};
use horolab::sampler::{
    block_average_compare, block_error, block_taylor_bound, decay_fit, horocycle_average,
    renormalization_identity_check, sparse_average, Flow, TimeSet,
};
use horolab::sieve::{
    brute_force_s, buchstab_rhs, dynamical_sieve_pipeline, sieve_bounds, sifted_sum, Density, MertensTable,
    SieveProblem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden() -> f64 {
    0.5 * (1.0 + 5f64.sqrt())
}

fn generic() -> QuotientPoint {
    QuotientPoint::from_inverse_rep(Lattice::modular(), vec![Mat2::new(golden(), -1.0, 1.0, 0.0)]).unwrap()
}

fn bump_at(lat: &Arc<Lattice>, x: f64, y: f64, th: f64, w: [f64; 3]) -> BumpFunction {
    let c = QuotientPoint::from_chart(lat.clone(), &[ChartCoord::new(x, y, th)]).unwrap();
    BumpFunction::new(&c, vec![w], 1.0).unwrap()
}

/// The fixed bump of the trend criteria.
fn fixed_bump() -> Observable {
    Observable::bump(bump_at(&Lattice::modular(), 0.1, 1.3, 0.2, [0.3, 0.3, 0.5]))
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn c1_group_laws() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let mut worst_u = 0.0f64;
    let mut worst_a = 0.0f64;
    let mut worst_comm = 0.0f64;
    let mut worst_log = 0.0f64;
    let mut in_branch = 0;
    for _ in 0..n {
        let (s, t) = (rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let uu = compose(&unipotent_u(1, s), &unipotent_u(1, t)).unwrap();
        worst_u = worst_u.max(uu.max_abs_diff(&unipotent_u(1, s + t)));
        let aa = compose(&diagonal_a(1, s).unwrap(), &diagonal_a(1, t).unwrap()).unwrap();
        let want = diagonal_a(1, s + t).unwrap();
        // entrywise, relative to the entry size
        let scale = want.factors[0].max_abs_entry();
        worst_a = worst_a.max(aa.max_abs_diff(&want) / scale.max(1.0));

        let (t, s) = (rng.gen_range(-20.0..20.0), rng.gen_range(-100.0..100.0));
        let c = compose(&diagonal_a(1, t).unwrap(), &compose(&unipotent_u(1, s), &diagonal_a(1, -t).unwrap()).unwrap())
            .unwrap();
        let target = unipotent_u(1, t.exp() * s);
        let m = &c.factors[0];
        let w = &target.factors[0];
        let err = [
            (m.m11 - w.m11).abs(),
            (m.m22 - w.m22).abs(),
            m.m21.abs(),
            (m.m12 - w.m12).abs() / w.m12.abs().max(1.0),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        worst_comm = worst_comm.max(err);

        let mut coeff = || rng.gen_range(-5i32..=5) as f64;
        let a = [coeff(), coeff(), coeff()];
        let b = [coeff(), coeff(), coeff()];
        let got = bracket(&LieAlgebraElement::first_factor(1, a[0], a[1], a[2]), &LieAlgebraElement::first_factor(1, b[0], b[1], b[2]));
        // [X,Y] = Z, [Z,X] = 2X, [Z,Y] = -2Y
        let want = [
            2.0 * (a[2] * b[0] - a[0] * b[2]),
            -2.0 * (a[2] * b[1] - a[1] * b[2]),
            a[0] * b[1] - a[1] * b[0],
        ];
        ensure(got.coords[0] == want, || format!("bracket of {a:?}, {b:?}: {:?} vs {want:?}", got.coords[0]))?;

        let mut small = || rng.gen_range(-0.2..0.2);
        let v = LieAlgebraElement::first_factor(1, small(), small(), small());
        if let Ok(back) = log_map(&exp_map(&v)) {
            in_branch += 1;
            worst_log = worst_log.max(back.max_abs_diff(&v));
        }
    }
    ensure(worst_u <= 1e-12, || format!("u(s)u(t) error {worst_u:.2e}"))?;
    ensure(worst_a <= 1e-12, || format!("a(s)a(t) relative error {worst_a:.2e}"))?;
    ensure(worst_comm <= 1e-9, || format!("a-commutation relative error {worst_comm:.2e}"))?;
    ensure(in_branch >= n / 2, || format!("only {in_branch} exp/log samples in branch"))?;
    ensure(worst_log <= 1e-9, || format!("exp/log round trip error {worst_log:.2e}"))?;
    Ok(format!(
        "4 x {n} cases; max errors u {worst_u:.1e}, a {worst_a:.1e}, commutation {worst_comm:.1e}, exp/log {worst_log:.1e} ({in_branch} in branch); brackets exact"
    ))
}

fn c2_reduction() -> Outcome {
    let lat = Lattice::new(
        horolab::lattice::LatticeDescriptor::Modular,
        horolab::lattice::LatticeParams { h_enum: 200, ..Default::default() },
    )
    .unwrap();
    let gammas = lat.enumerated_elements();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let points: Vec<QuotientPoint> = (0..100)
        .map(|_| {
            QuotientPoint::from_chart(
                lat.clone(),
                // representatives in a compact part of the fundamental domain
                &[ChartCoord::new(
                    rng.gen_range(-0.5..0.5),
                    rng.gen_range(0.75f64.sqrt()..3.0),
                    rng.gen_range(-3.0..3.0),
                )],
            )
            .unwrap()
        })
        .collect();
    use rayon::prelude::*;
    let worst = points
        .par_iter()
        .map(|p| -> Result<f64, String> {
            let r = reduce(p);
            ensure(reduce(&r).inverse_rep() == r.inverse_rep(), || format!("reduce is not idempotent at {:?}", p.chart()))?;
            let c0 = r.chart()[0];
            let mut worst = 0.0f64;
            for g in gammas {
                let c = reduce(&p.with_rep_times(g)).chart()[0];
                let e = (c.x - c0.x).abs().max((c.y - c0.y).abs()).max((c.theta - c0.theta).abs());
                worst = worst.max(e);
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>, String>>()?
        .into_iter()
        .fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("reduce(gamma p) differs from reduce(p) by {worst:.2e}"))?;
    Ok(format!("100 points x {} elements; max chart difference {worst:.1e}; idempotent", gammas.len()))
}

fn c3_kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let delta = rng.gen_range(1e-3..0.1);
        let n = rng.gen_range(1..=3usize);
        let gamma = rng.gen_range(0.05..2.0);
        let k = SmoothingKernel::new(delta, n, gamma).map_err(|e| e.to_string())?;
        let err = (k.integral() - gamma.powi(n as i32)).abs();
        worst = worst.max(err);
        ensure(err <= 1e-6, || format!("integral of g({delta}, {n}, {gamma}) off by {err:.2e}"))?;
        for _ in 0..200 {
            let mut u: Vec<f64> = (0..n).map(|_| rng.gen_range(-delta..gamma + delta)).collect();
            let i = rng.gen_range(0..n);
            let out = rng.gen_range(0.0..1.0) * delta + f64::EPSILON * 8.0;
            u[i] = if rng.gen_bool(0.5) { -delta - out } else { gamma + delta + out };
            ensure(k.value(&u) == 0.0, || format!("g({delta}, {n}, {gamma}) nonzero at {u:?}"))?;
        }
        // for n = 1 the bound is attained, so allow quadrature rounding
        ensure(k.l1_distance_to_box() <= k.l1_bound() * (1.0 + 1e-9), || {
            format!("L1 distance {} exceeds bound {}", k.l1_distance_to_box(), k.l1_bound())
        })?;
    }
    Ok(format!("20 kernels; max integral error {worst:.1e}; support and L1 bound hold"))
}

fn c4_renormalization() -> Outcome {
    let lat = Lattice::modular();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let f = Observable::bump(bump_at(
            &lat,
            rng.gen_range(-0.4..0.4),
            rng.gen_range(1.1..2.0),
            rng.gen_range(-1.2..1.2),
            [rng.gen_range(0.15..0.35), rng.gen_range(0.2..0.4), rng.gen_range(0.3..0.8)],
        ));
        let p = QuotientPoint::from_chart(
            lat.clone(),
            &[ChartCoord::new(rng.gen_range(-0.5..0.5), rng.gen_range(0.9..2.0), rng.gen_range(-1.5..1.5))],
        )
        .unwrap();
        let t = 10f64.powf(rng.gen_range(0.0..3.0));
        let e = renormalization_identity_check(&f, &p, t).map_err(|e| e.to_string())?;
        worst = worst.max(e);
        ensure(e <= 1e-6, || format!("sides differ by {e:.2e} at T = {t}"))?;
    }
    Ok(format!("20 triples; max difference {worst:.1e}"))
}

fn c5_horocycle_trend() -> Outcome {
    let f = fixed_bump();
    let p = generic();
    let mut series = Vec::new();
    for t in [1e2, 1e3, 1e4, 1e5] {
        let r = horocycle_average(&f, &p, t).map_err(|e| e.to_string())?;
        series.push((t, r.deviation.ok_or("no reference")?));
    }
    let fit = decay_fit(&series).map_err(|e| e.to_string())?;
    let devs: Vec<String> = series.iter().map(|(_, d)| format!("{d:.2e}")).collect();
    ensure(fit.slope <= -0.1, || format!("slope {:.3} > -0.1 (deviations {})", fit.slope, devs.join(", ")))?;
    Ok(format!("slope {:.3}; deviations {}", fit.slope, devs.join(", ")))
}

fn c6_progression_trend() -> Outcome {
    let f = fixed_bump();
    let p = generic();
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for k in [1.0, 10.0, 100.0] {
        let d = |t| -> Result<f64, String> {
            let r = sparse_average(&f, &p, &TimeSet::Progression { k, t }).map_err(|e| e.to_string())?;
            r.deviation.ok_or_else(|| "no reference".to_string())
        };
        let (d4, d6) = (d(1e4)?, d(1e6)?);
        lines.push(format!("K={k}: {d4:.2e} -> {d6:.2e}"));
        if !(d6 < d4) {
            failed.push(k);
        }
    }
    ensure(failed.is_empty(), || format!("no decrease for K in {failed:?}; {}", lines.join("; ")))?;
    Ok(lines.join("; "))
}

fn sieve_problem(weights: Vec<f64>, z: f64, level: f64) -> SieveProblem {
    SieveProblem { weights, excluded: vec![], density: Density::Reciprocal, z, level, epsilon: 0.004 }
}

fn ones(n: usize) -> Vec<f64> {
    let mut w = vec![1.0; n + 1];
    w[0] = 0.0;
    w
}

fn c7_sieve() -> Outcome {
    let n = 1_000_000;
    let z = (n as f64).powf(1.0 / 9.0);
    let prob = sieve_problem(ones(n), z, z.powi(9));
    let r = sieve_bounds(&prob).map_err(|e| e.to_string())?;
    let oracle = brute_force_s(&prob);
    ensure(r.exact == oracle, || format!("S_exact {} vs oracle {oracle}", r.exact))?;
    let lower = r.lower.ok_or("no lower bound at s = 9")?;
    ensure(lower <= oracle && oracle <= r.upper, || format!("{lower} <= {oracle} <= {} fails", r.upper))?;

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..50 {
        let n = rng.gen_range(500..20_000);
        let w: Vec<f64> = (0..=n).map(|j| if j == 0 { 0.0 } else { rng.gen_range(0.0..3.0) }).collect();
        let z = rng.gen_range(2.5..15.0);
        let s = rng.gen_range(2.0..5.0);
        let prob = sieve_problem(w, z, z.powf(s));
        let b = sieve_bounds(&prob).map_err(|e| e.to_string())?;
        let oracle = brute_force_s(&prob);
        let lo = b.lower.ok_or("D >= z^2 but no lower bound")?;
        ensure(lo <= oracle && oracle <= b.upper, || format!("vector {i}: {lo} <= {oracle} <= {} fails", b.upper))?;
    }

    let w = ones(10_000);
    let mut pairs = 0;
    for _ in 0..50 {
        let zp = rng.gen_range(2.0..50.0);
        let z = rng.gen_range(zp..120.0);
        let lhs = sifted_sum(&w, 1, z);
        let rhs = buchstab_rhs(&w, z, zp);
        ensure(lhs == rhs, || format!("Buchstab at z = {z}, z' = {zp}: {lhs} vs {rhs}"))?;
        pairs += 1;
    }
    Ok(format!(
        "unit weights: {lower:.1} <= {oracle} <= {:.1}; 50 random vectors bracketed; Buchstab exact on {pairs} pairs",
        r.upper
    ))
}

fn c8_mertens() -> Outcome {
    let limit = 100_000_000u64;
    let eps = 0.004;
    let table = MertensTable::new(limit);
    let ut = table.u_tilde(eps);
    let zmax = limit as f64 - 1.0;
    let grid = |lo: f64, n: usize| -> Vec<f64> {
        (0..=n).map(|i| (lo.ln() + (zmax.ln() - lo.ln()) * i as f64 / n as f64).exp()).collect()
    };
    let fails_at_two = grid(2.5, 200)
        .into_iter()
        .any(|z| !table.check(2.0, z, eps).unwrap_or(true));
    ensure(fails_at_two, || "inequality holds at u = 2 for every sampled z".into())?;
    let mut checks = 0;
    for u in grid(ut as f64, 60).into_iter().filter(|&u| u < zmax) {
        for z in grid(u * 1.0001, 60).into_iter().filter(|&z| z > u) {
            let ok = table.check(u, z, eps).map_err(|e| e.to_string())?;
            ensure(ok, || format!("fails at u = {u}, z = {z} (u~ = {ut})"))?;
            checks += 1;
        }
    }
    Ok(format!("u~(0.004) = {ut}; fails at u = 2; holds on {checks} (u, z) grid points up to 1e8"))
}

fn c9_pipeline() -> Outcome {
    let lat = Lattice::modular();
    let cover = ten_bump_cover(&lat).map_err(|e| e.to_string())?;
    let r = dynamical_sieve_pipeline(&cover, &generic(), 1_000_000, 1.0 / 9.0, 0.004, 101.0, None)
        .map_err(|e| e.to_string())?;
    ensure(r.l == 10, || format!("L = {}", r.l))?;
    let sums: Vec<f64> = r.bumps.iter().map(|b| b.almost_prime_sum).collect();
    ensure(sums.len() == 10 && sums.iter().all(|&s| s > 0.0), || format!("sums {sums:?}"))?;
    let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(format!("L = 10; 10 bumps, smallest almost-prime sum {min:.1}"))
}

fn c10_blocks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 1.0f64;
    for _ in 0..20 {
        let m = 10f64.powf(rng.gen_range(4.0..7.0)) as u64;
        let g = rng.gen_range(0.05..0.45);
        let e = block_error(m, g).map_err(|e| e.to_string())?;
        let b = block_taylor_bound(m, g).map_err(|e| e.to_string())?;
        let ratio = e / b;
        if (ratio.ln()).abs() > worst.ln().abs() {
            worst = ratio;
        }
        ensure((0.5..=2.0).contains(&ratio), || format!("M = {m}, gamma = {g}: error/bound = {ratio}"))?;
    }
    let f = Observable::bump(bump_at(&Lattice::modular(), 0.0, 1.6, 0.0, [0.49, 0.9, 1.5]));
    let p = generic();
    for _ in 0..10 {
        let m = rng.gen_range(10_000..2_000_000);
        let g = rng.gen_range(0.05..0.45);
        let c = block_average_compare(&f, &p, m, g).map_err(|e| e.to_string())?;
        ensure(c.gap <= c.lipschitz_bound, || format!("M = {m}, gamma = {g}: gap {} > {}", c.gap, c.lipschitz_bound))?;
    }
    Ok(format!("20 error/bound ratios within [1/2, 2] (extreme {worst:.3}); 10 gaps within the Lipschitz bound"))
}

fn commute(g: &GroupElement, h: &GroupElement) -> bool {
    let a = compose(g, h).unwrap();
    let b = compose(h, g).unwrap();
    a.max_abs_diff(&b) <= 1e-9 * a.factors.iter().map(Mat2::max_abs_entry).fold(1.0, f64::max)
}

fn c11_dichotomy() -> Outcome {
    let modular = Lattice::modular();
    let id = QuotientPoint::identity(modular.clone());
    let prm = |mode| DichotomyParams {
        mode,
        t_max: 30.0,
        threshold: 100.0,
        n: 1_000_000,
        alpha: 1.0 / 9.0,
        epsilon: 0.004,
        s_target: 101.0,
        gamma_exp: 0.1,
        m_values: vec![100_000, 400_000, 1_600_000, 6_400_000],
        search_budget: 50,
    };
    let cover = ten_bump_cover(&modular).map_err(|e| e.to_string())?;
    let r = dichotomy(&id, &cover, &prm(DichotomyMode::Integers)).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::TorusConfirmed, || format!("identity k=1: {:?}", r.verdict))?;
    let t = r.torus.as_ref().ok_or("no torus report")?;
    let u1 = unipotent_u(1, 1.0);
    let has_u1 = t.stabilizer_generators.iter().any(|g| {
        g.max_abs_diff(&u1) == 0.0 || g.max_abs_diff(&horolab::group::inverse(&u1)) == 0.0
    });
    ensure(has_u1, || format!("generators {:?} do not contain u(1)", t.stabilizer_generators))?;
    let c0 = id.chart();
    for n in 0..1000 {
        let q = reduce(&id.translate(&unipotent_u(1, n as f64)).unwrap());
        ensure(q.chart() == c0, || format!("u({n}) p = {:?} differs from p", q.chart()))?;
    }

    let hilbert = Lattice::hilbert(2).map_err(|e| e.to_string())?;
    let hid = QuotientPoint::identity(hilbert.clone());
    let hcover = ten_bump_cover(&hilbert).map_err(|e| e.to_string())?;
    let r = dichotomy(&hid, &hcover, &prm(DichotomyMode::Polynomial)).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::TorusConfirmed, || format!("Hilbert identity: {:?}", r.verdict))?;
    let t = r.torus.as_ref().ok_or("no torus report")?;
    let gens = &t.stabilizer_generators;
    ensure(t.torus_dim == 2 && gens.len() == 2, || format!("torus_dim {} with {} generators", t.torus_dim, gens.len()))?;
    ensure(commute(&gens[0], &gens[1]), || "generators do not commute".into())?;
    let unipotent = gens.iter().all(|g| {
        g.factors.iter().all(|m| m.m21 == 0.0 && m.m11 == 1.0 && m.m22 == 1.0)
    });
    ensure(unipotent, || format!("generators are not translations: {gens:?}"))?;
    ensure(t.orbit_bounded && t.sparse_orbit_max_height.is_finite(), || "sparse orbit unbounded".into())?;

    let r = dichotomy(&generic(), &cover, &prm(DichotomyMode::Integers)).map_err(|e| e.to_string())?;
    ensure(r.verdict == Verdict::DenseEvidence, || format!("generic: {:?}", r.verdict))?;
    ensure(r.caveat.is_some(), || "dense-evidence without caveat".into())?;
    Ok("identity k=1 torus-confirmed by u(1); Hilbert D=2 identity torus-confirmed (2 commuting translations); generic dense-evidence".into())
}

fn leaves(v: &Value, path: String, out: &mut Vec<(String, f64)>) {
    match v {
        Value::Number(n) => out.push((path, n.as_f64().unwrap_or(f64::NAN))),
        Value::Array(xs) => xs.iter().enumerate().for_each(|(i, x)| leaves(x, format!("{path}[{i}]"), out)),
        Value::Object(m) => m.iter().for_each(|(k, x)| leaves(x, format!("{path}.{k}"), out)),
        _ => {}
    }
}

fn c12_determinism() -> Outcome {
    let mut configs = Vec::new();
    let mut avg = ExperimentConfig::new(ExperimentKind::Average {
        timeset: TimeSet::Progression { k: 1.0, t: 1e4 },
        scales: vec![1e2, 1e3, 1e4, 1e5, 1e6],
    });
    avg.point = PointSpec::Preset { name: "generic1".into() };
    configs.push(avg);
    configs.push(ExperimentConfig::new(ExperimentKind::Average {
        timeset: TimeSet::Interval { t: 1.0, quadrature_step: 0.0 },
        scales: vec![1e2, 1e3, 1e4, 1e5],
    }));
    configs.push(ExperimentConfig::new(ExperimentKind::Mixing {
        flow: Flow::Geodesic,
        times: vec![0.5, 1.0, 2.0, 4.0],
        centre: true,
    }));
    configs.push(ExperimentConfig::new(ExperimentKind::Blocks { m_values: vec![100_000, 400_000], gamma_exp: 0.1 }));
    let mut sieve = ExperimentConfig::new(ExperimentKind::Sieve {
        weights: WeightSource::Random { n: 100_000 },
        z_exp: 0.2,
        s: 4.0,
        epsilon: 0.004,
        excluded: vec![],
    });
    sieve.seed = 12;
    configs.push(sieve);
    configs.push(ExperimentConfig::new(ExperimentKind::Pipeline {
        n: 1_000_000,
        alpha: 1.0 / 9.0,
        epsilon: 0.004,
        s_target: 101.0,
        u_tilde: None,
    }));
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let (p1, p8) = (pool(1), pool(8));
    let mut worst = 0.0f64;
    let mut count = 0;
    for c in &configs {
        let a = p1.install(|| execute(c)).map_err(|e| e.to_string())?;
        let b = p8.install(|| execute(c)).map_err(|e| e.to_string())?;
        let (mut la, mut lb) = (Vec::new(), Vec::new());
        leaves(&a.payload, String::new(), &mut la);
        leaves(&b.payload, String::new(), &mut lb);
        ensure(la.len() == lb.len(), || format!("{}: payload shapes differ", c.experiment.name()))?;
        for ((pa, x), (_, y)) in la.iter().zip(&lb) {
            ensure(rel_close(*x, *y, 1e-12), || format!("{}{pa}: {x} vs {y}", c.experiment.name()))?;
            if x.is_finite() {
                worst = worst.max((x - y).abs() / x.abs().max(1.0));
            }
            count += 1;
        }
    }
    Ok(format!("{} experiments, {count} numbers; max relative difference {worst:.1e}", configs.len()))
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "group laws", budget: Duration::from_secs(5), run: c1_group_laws },
        Criterion { id: 2, name: "reduction", budget: Duration::from_secs(30), run: c2_reduction },
        Criterion { id: 3, name: "kernel properties", budget: Duration::from_secs(60), run: c3_kernel },
        Criterion { id: 4, name: "renormalization identity", budget: Duration::from_secs(120), run: c4_renormalization },
        Criterion { id: 5, name: "horocycle trend", budget: Duration::from_secs(600), run: c5_horocycle_trend },
        Criterion { id: 6, name: "progression trend", budget: Duration::from_secs(600), run: c6_progression_trend },
        Criterion { id: 7, name: "sieve bracketing", budget: Duration::from_secs(300), run: c7_sieve },
        Criterion { id: 8, name: "Mertens threshold", budget: Duration::from_secs(120), run: c8_mertens },
        Criterion { id: 9, name: "sieve positivity", budget: Duration::from_secs(1200), run: c9_pipeline },
        Criterion { id: 10, name: "block machinery", budget: Duration::from_secs(300), run: c10_blocks },
        Criterion { id: 11, name: "dichotomy exemplars", budget: Duration::from_secs(600), run: c11_dichotomy },
        Criterion { id: 12, name: "determinism", budget: Duration::MAX, run: c12_determinism },
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for c in criteria.iter().filter(|c| filter.is_empty() || filter.contains(&c.id)) {
        let start = Instant::now();
        let out = std::panic::catch_unwind(c.run).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = start.elapsed();
        let timing = if c.budget == Duration::MAX {
            format!("{:.1}s", elapsed.as_secs_f64())
        } else {
            format!("{:.1}s / {}s", elapsed.as_secs_f64(), c.budget.as_secs())
        };
        let out = match out {
            Ok(msg) if elapsed > c.budget => Err(format!("over budget; {msg}")),
            other => other,
        };
        ran += 1;
        match out {
            Ok(msg) => println!("criterion {:>2} PASS  {:<26} [{timing}] {msg}", c.id, c.name),
            Err(msg) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {:<26} [{timing}] {msg}", c.id, c.name)
            }
        }
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    let strict = std::env::var("HOROLAB_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
