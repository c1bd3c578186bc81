//! Acceptance criteria, one PASS/FAIL line each.
//!
//! `cargo test --release --test acceptance -- 2 5` runs a subset.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use mmrl::integrand::{quasi_norm, variable_order_integral, Integrand};
use mmrl::kernel::{lemma_bound_check, DyadicTable, HaarTable, KernelPoint};
use mmrl::numerics::QuadratureSpec;
use mmrl::params::{build_alpha, build_hurst, AlphaFunction, FunctionDescriptor};
use mmrl::sampler::{sample_increment_sheet, sample_sas_vec, Stream};
use mmrl::simulator::{
    convergence_study, layer_sum_abel, layer_sum_direct, Engine, FieldEvaluator, FieldGrid, PathSimulator,
};
use mmrl::validation::{
    check_ecf_samples, check_ks, check_martingale_bound, check_rate, check_tail_samples, default_xi_grid,
    IntegralSampler,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn alpha(desc: FunctionDescriptor) -> AlphaFunction {
    build_alpha(&desc).unwrap()
}

fn constant() -> AlphaFunction {
    alpha(FunctionDescriptor::constant(1.5))
}

fn canonical_sine() -> AlphaFunction {
    alpha(FunctionDescriptor::sine(1.5, 0.3))
}

/// Sine family whose range [1.3, 1.9] admits v = 0.8.
fn sine() -> AlphaFunction {
    alpha(FunctionDescriptor::sine(1.6, 0.3))
}

fn five_alphas() -> Vec<AlphaFunction> {
    vec![
        constant(),
        alpha(FunctionDescriptor::constant(1.1)),
        alpha(FunctionDescriptor::affine(1.2, 0.6)),
        canonical_sine(),
        alpha(FunctionDescriptor::piecewise_cubic(vec![
            (0.0, 1.4),
            (0.25, 1.7),
            (0.5, 1.3),
            (0.75, 1.6),
            (1.0, 1.5),
        ])),
    ]
}

fn random_integrand(rng: &mut Stream, a: &AlphaFunction, i: usize) -> Integrand {
    let (u1, u2) = rng.uniform_pair();
    let (u3, u4) = rng.uniform_pair();
    match i % 3 {
        0 => {
            let pieces = 1 + (u1 * 6.0) as usize;
            let mut cuts: Vec<f64> = (0..pieces - 1).map(|_| rng.uniform_pair().0).collect();
            cuts.sort_by(f64::total_cmp);
            let mut edges = vec![0.0];
            edges.extend(cuts);
            edges.push(1.0);
            let steps = edges
                .windows(2)
                .map(|w| (w[0], w[1], 6.0 * rng.uniform_pair().0 - 3.0))
                .collect();
            Integrand::step(steps)
        }
        1 => {
            let floor = 1.0 / a.alpha_min;
            KernelPoint::new(0.05 + 0.95 * u2, floor + (1.0 - floor) * (0.05 + 0.9 * u3), a)
                .unwrap()
                .integrand(a)
        }
        _ => {
            let (amp, freq, phase, shift) = (0.2 + 4.0 * u1, 1.0 + (3.0 * u2).floor(), 6.0 * u3, 2.0 * u4 - 1.0);
            Integrand::new(
                move |s| amp * (2.0 * std::f64::consts::PI * freq * s + phase).sin() + shift,
                (0.0, 1.0),
                vec![],
                "smooth",
            )
        }
    }
}

fn c1_quasi_norm() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut rng = Stream::new(101, 0);
    let (mut worst_res, mut worst_hom) = (0.0f64, 0.0f64);
    for a in five_alphas() {
        for i in 0..50 {
            let f = random_integrand(&mut rng, &a, i);
            let norm = quasi_norm(&f, &a, &spec).unwrap();
            let res = (variable_order_integral(&f, &a, norm, &spec).unwrap() - 1.0).abs();
            let c = 10.0 * rng.uniform_pair().0 - 5.0;
            let scaled = quasi_norm(&f.scaled(c), &a, &spec).unwrap();
            let hom = (scaled - c.abs() * norm).abs() / (c.abs() * norm);
            worst_res = worst_res.max(res);
            worst_hom = worst_hom.max(hom);
        }
    }
    outcome(
        worst_res <= 1e-10 && worst_hom <= 1e-9,
        format!("max residual {worst_res:.2e} (<= 1e-10), max homogeneity error {worst_hom:.2e} (<= 1e-9)"),
    )
}

fn c2_cross_engine() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut worst = 0.0f64;
    for a in [constant(), canonical_sine()] {
        let grid = FieldGrid::new(FieldGrid::linspace(0.0, 1.0, 21), FieldGrid::linspace(0.85, 0.95, 5), &a).unwrap();
        let points = grid.points();
        let sheets: Vec<_> = (0..20).map(|r| sample_increment_sheet(&a, 8, 202, r).unwrap()).collect();
        for level in 1..=8 {
            let haar = FieldEvaluator::from_haar(HaarTable::new(&a, &points, level, &spec).unwrap());
            let dyadic = FieldEvaluator::from_dyadic(DyadicTable::new(&a, &points, level, &spec).unwrap());
            for sheet in &sheets {
                let xh = haar.evaluate(sheet).unwrap();
                let xd = dyadic.evaluate(sheet).unwrap();
                let scale = 1.0 + xd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                let gap = xh.iter().zip(&xd).fold(0.0f64, |m, (x, y)| m.max((x - y).abs())) / scale;
                worst = worst.max(gap);
            }
        }
    }
    outcome(worst <= 1e-8, format!("max relative gap {worst:.2e} (<= 1e-8) over J=1..8, 20 sheets, 2 families, 21x5 grid"))
}

fn c3_abel() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut rng = Stream::new(303, 0);
    let families = [constant(), sine(), alpha(FunctionDescriptor::affine(1.3, 0.5))];
    let mut worst = 0.0f64;
    for t in 0..100u64 {
        let a = &families[t as usize % 3];
        let (u1, u2) = rng.uniform_pair();
        let (u3, u4) = rng.uniform_pair();
        let floor = 1.0 / a.alpha_min;
        let p = KernelPoint::new(u1, floor + (1.0 - floor) * (0.02 + 0.96 * u2), a).unwrap();
        let j = (u3 * 10.0) as u32;
        let level = j + 1 + (u4 * 3.0) as u32;
        let sheet = sample_increment_sheet(a, level, 303, t).unwrap();
        let d = layer_sum_direct(a, &p, &sheet, j, &spec).unwrap();
        let b = layer_sum_abel(a, &p, &sheet, j, &spec).unwrap();
        worst = worst.max((d - b).abs());
    }
    outcome(worst <= 1e-9, format!("max |direct - Abel| {worst:.2e} (<= 1e-9) over 100 triples"))
}

fn c4_ks() -> Outcome {
    let spec = QuadratureSpec::default();
    let a = constant();
    let h = build_hurst(&FunctionDescriptor::constant(0.9), &a).unwrap();
    let seed = 404;
    let sim = PathSimulator::new(&a, &h, &[1.0], 14, Engine::DyadicAverage, &spec).unwrap();
    let y: Vec<f64> = (0..5000u64).map(|r| sim.values(seed, r)[0]).collect();
    let k = KernelPoint::new(1.0, 0.9, &a).unwrap().integrand(&a);
    let scale = quasi_norm(&k, &a, &spec).unwrap();
    let direct = sample_sas_vec(1.5, scale, 5000, seed, 1 << 50).unwrap();
    let ks = check_ks("ks", &y, &direct, seed);
    let ecf = check_ecf_samples("ecf", &y, &k, &a, &default_xi_grid(), seed, &spec).unwrap();
    outcome(
        ks.passed(),
        format!(
            "KS D={:.4} critical={:.4} at level 0.01, scale={scale:.6}; ECF on same samples {}",
            ks.statistic, ks.threshold, ecf.verdict
        ),
    )
}

fn c5_ecf() -> Outcome {
    let spec = QuadratureSpec::default();
    let xis = default_xi_grid();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, a) in [("constant", constant()), ("sine", sine())] {
        let one = Integrand::indicator(0.0, 1.0);
        let h = Integrand::haar(0, 0);
        let k = KernelPoint::new(1.0, 0.8, &a).unwrap().integrand(&a);
        let fs = [&one, &h, &k];
        let mc = IntegralSampler::new(&a, &fs, 14, &spec).unwrap();
        let samples = mc.samples(505, 0, 100_000);
        for (f, s) in fs.iter().zip(&samples) {
            let r = check_ecf_samples(f.label(), s, f, &a, &xis, 505, &spec).unwrap();
            pass &= r.passed();
            parts.push(format!("{name}/{}={:.2e}", f.label(), r.statistic));
        }
    }
    outcome(pass, format!("max deviation vs 5/sqrt(N)={:.2e}: {}", 5.0 / (1e5f64).sqrt(), parts.join(" ")))
}

fn c6_tail() -> Outcome {
    let spec = QuadratureSpec::default();
    let a = constant();
    let one = Integrand::indicator(0.0, 1.0);
    let mc = IntegralSampler::new(&a, &[&one], 6, &spec).unwrap();
    let samples = &mc.samples(606, 0, 1_000_000)[0];
    let r = check_tail_samples("tail", samples, &one, &a, None, 606, &spec).unwrap();
    outcome(r.passed(), format!("|slope + 1.5|={:.4} (<= 0.15); {}", r.statistic, r.note))
}

fn c7_rate() -> Outcome {
    let spec = QuadratureSpec::default();
    let a = constant();
    let grid = FieldGrid::new(FieldGrid::linspace(0.0, 1.0, 17), vec![0.8, 0.9], &a).unwrap();
    let levels: Vec<u32> = (4..=10).collect();
    let rep = convergence_study(&a, &grid, 0.8, 1.0, &levels, 14, 50, 707, &spec).unwrap();
    let r = check_rate(&rep, 0.8, a.holder_exponent, a.alpha_min).unwrap();
    outcome(
        r.passed(),
        format!("median slope {:.4} (<= {:.4}); {}", r.statistic, r.threshold, r.note),
    )
}

fn c8_lemmas() -> Outcome {
    let spec = QuadratureSpec::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, a) in [("constant", constant()), ("sine", sine())] {
        let points: Vec<KernelPoint> = [0.1, 0.3, 0.55, 0.77, 1.0]
            .iter()
            .flat_map(|&u| [0.8, 0.9].map(|v| KernelPoint { u, v }))
            .collect();
        let rep = lemma_bound_check(&a, 0.8, 0..=12, &points, &spec).unwrap();
        pass &= rep.pass();
        let c = rep.coefficient_check();
        let s = rep.second_difference_check();
        let e: Vec<String> = (1..=3)
            .map(|i| {
                let e = rep.edge_check(i);
                format!("I{i}={:.2}", e.worst / e.envelope)
            })
            .collect();
        parts.push(format!(
            "{name}: w={:.2} {} d2={:.2}",
            c.worst / c.envelope,
            e.join(" "),
            s.worst / s.envelope
        ));
    }
    outcome(pass, format!("growth ratios (<= 2): {}", parts.join("; ")))
}

fn c9_martingale() -> Outcome {
    let r = check_martingale_bound(&constant(), 1.0, 12, 1_000, 10_000, 909).unwrap();
    outcome(r.passed(), format!("p99 ratio {:.3} in [0.5, 2]; {}", r.statistic, r.note))
}

fn run_cli(config: &Path, out: &Path, threads: usize) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_mmrl"))
        .arg("--config")
        .arg(config)
        .arg("--output")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .output()
        .expect("binary runs")
        .status
        .code()
        .unwrap_or(-1)
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn c10_reproducibility() -> Outcome {
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let tmp = tempfile::tempdir().unwrap();
    let mut mismatches = Vec::new();
    let mut files = 0;
    for name in ["fmrl_path", "mmrl_path", "field", "convergence", "coefficients"] {
        let cfg = configs.join(format!("{name}.ini"));
        let runs: Vec<_> = [1usize, 8, 1]
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let out = tmp.path().join(format!("{name}_{i}"));
                let code = run_cli(&cfg, &out, t);
                (code, dir_bytes(&out))
            })
            .collect();
        files += runs[0].1.len();
        if runs.iter().any(|(c, b)| *c != 0 || *b != runs[0].1) {
            mismatches.push(name);
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("{files} files byte-identical across threads 1/8/1; mismatches: {mismatches:?}"),
    )
}

type Criterion = (u32, &'static str, f64, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "quasi-norm residual and homogeneity", 30.0, c1_quasi_norm),
        (2, "cross-engine identity", 120.0, c2_cross_engine),
        (3, "Abel identity", 10.0, c3_abel),
        (4, "distributional reduction (KS)", 180.0, c4_ks),
        (5, "ECF suite", 300.0, c5_ecf),
        (6, "tail index", 180.0, c6_tail),
        (7, "convergence rate", 600.0, c7_rate),
        (8, "kernel bound lemmas", 300.0, c8_lemmas),
        (9, "martingale statistic stability", 300.0, c9_martingale),
        (10, "CLI reproducibility", 60.0, c10_reproducibility),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (id, name, budget, run) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let secs = start.elapsed().as_secs_f64();
        let in_budget = secs <= budget;
        let pass = o.pass && in_budget;
        println!(
            "criterion {id:>2} {} {name}: {} [{secs:.1}s of {budget:.0}s]",
            if pass { "PASS" } else { "FAIL" },
            o.detail
        );
        if !pass {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
