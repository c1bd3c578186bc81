//! Executes a [`RunConfig`] and writes its artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{Mode, RunConfig};
use crate::error::{Error, Result};
use crate::integrand::{quasi_norm, Integrand};
use crate::kernel::{lemma_bound_check, HaarTable, KernelPoint, LemmaReport};
use crate::sampler::{sample_increment_sheet, sample_sas_vec};
use crate::simulator::{convergence_study, FieldEvaluator, FieldSample, PathSimulator};
use crate::validation::{
    check_ecf_samples, check_flag, check_ks, check_martingale_bound, check_moment, check_rate,
    check_tail, default_xi_grid, CheckResult, IntegralSampler, ValidationReport, Verdict,
};

/// Where the output directory came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OutputSource {
    Flag,
    Config,
    Env(String),
    Default,
}

#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    pub report: Option<ValidationReport>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.as_ref().map_or(true, ValidationReport::passed)
    }
}

fn preamble(cfg: &RunConfig) -> String {
    let mut s = format!(
        "# mmrl {}\n# mode: {}\n# config_hash: {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.mode,
        cfg.hash()
    );
    for (k, v) in &cfg.defaults {
        s.push_str(&format!("# default: {k}={v}\n"));
    }
    s
}

struct Artifacts {
    files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    fn text(&mut self, name: String, build: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        build(&mut buf)?;
        self.files.push((name, buf));
        Ok(())
    }
}

/// Runs `cfg`, writing all artifacts into `out_dir` from a single writer.
pub fn run(cfg: &RunConfig, out_dir: &Path, source: &OutputSource) -> Result<Outcome> {
    let spec = &cfg.numerics;
    let head = preamble(cfg);
    let mut art = Artifacts { files: Vec::new() };
    let mut report = None;

    match cfg.mode {
        Mode::SimulatePath => {
            let hurst = cfg.hurst.as_ref().expect("validated at parse time");
            let sim = PathSimulator::new(&cfg.alpha, hurst, &cfg.time_grid(), cfg.level, cfg.engine, spec)?;
            let paths = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| sim.simulate(cfg.seed, r))
                .collect::<Result<Vec<_>>>()?;
            for p in &paths {
                art.text(format!("path_{}_{}.csv", cfg.seed, p.replica_index), |b| {
                    b.write_all(head.as_bytes())?;
                    p.write_csv(b, &cfg.alpha, hurst)
                })?;
            }
            export_sheets(cfg, &mut art)?;
        }
        Mode::SimulateField => {
            let grid = cfg.field_grid()?;
            let eval = FieldEvaluator::new(&cfg.alpha, &grid.points(), cfg.level, cfg.engine, spec)?;
            let fields = (0..cfg.replicas)
                .into_par_iter()
                .map(|r| {
                    let sheet = sample_increment_sheet(&cfg.alpha, cfg.level.max(1), cfg.seed, r)?;
                    Ok(FieldSample {
                        grid: grid.clone(),
                        level: cfg.level,
                        values: eval.evaluate(&sheet)?,
                        seed: cfg.seed,
                        replica_index: r,
                        engine: cfg.engine,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            for f in &fields {
                art.text(format!("field_{}_{}.csv", cfg.seed, f.replica_index), |b| {
                    b.write_all(head.as_bytes())?;
                    f.write_csv(b, &cfg.alpha)
                })?;
            }
            export_sheets(cfg, &mut art)?;
        }
        Mode::ConvergenceStudy => {
            let rep = convergence_study(
                &cfg.alpha,
                &cfg.field_grid()?,
                cfg.a,
                cfg.zeta,
                &cfg.levels,
                cfg.reference_level,
                cfg.replicas,
                cfg.seed,
                spec,
            )?;
            art.text("convergence.csv".into(), |b| {
                b.write_all(head.as_bytes())?;
                rep.write_csv(b)
            })?;
        }
        Mode::ExportCoefficients => {
            let grid = cfg.field_grid()?;
            let table = HaarTable::new(&cfg.alpha, &grid.points(), cfg.level, spec)?;
            art.text("coefficients.csv".into(), |b| {
                b.write_all(head.as_bytes())?;
                table.write_csv(b)
            })?;
        }
        Mode::Validate => {
            let rep = validation_suite(cfg)?;
            art.text("validation.txt".into(), |b| {
                b.write_all(head.as_bytes())?;
                rep.write_text(b)
            })?;
            art.text("validation.csv".into(), |b| {
                b.write_all(head.as_bytes())?;
                rep.write_csv(b)
            })?;
            report = Some(rep);
        }
    }

    let mut manifest = format!(
        "mmrl_version: {}\nmode: {}\nconfig_hash: {}\nseed: {}\nreplicas: {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.mode,
        cfg.hash(),
        cfg.seed,
        cfg.replicas
    );
    for (k, v) in &cfg.defaults {
        manifest.push_str(&format!("default: {k}={v}\n"));
    }
    if let OutputSource::Env(dir) = source {
        manifest.push_str(&format!("output_dir_env: MMRL_OUTPUT_DIR={dir}\n"));
    }
    for (name, _) in &art.files {
        manifest.push_str(&format!("file: {name}\n"));
    }
    art.files.push(("manifest.txt".into(), manifest.into_bytes()));

    fs::create_dir_all(out_dir)
        .map_err(|e| Error::Resource(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut files = Vec::new();
    for (name, bytes) in art.files {
        let path = out_dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::Resource(format!("cannot write {}: {e}", path.display())))?;
        files.push(path);
    }
    Ok(Outcome { files, report })
}

fn export_sheets(cfg: &RunConfig, art: &mut Artifacts) -> Result<()> {
    if !cfg.export_sheets {
        return Ok(());
    }
    for r in 0..cfg.replicas {
        let sheet = sample_increment_sheet(&cfg.alpha, cfg.level.max(1), cfg.seed, r)?;
        let mut buf = Vec::new();
        sheet.write_to(&mut buf)?;
        art.files.push((format!("sheet_{}_{}.bin", cfg.seed, r), buf));
    }
    Ok(())
}

fn lemma_checks(report: &LemmaReport) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let c = report.coefficient_check();
    out.push(check_flag("lemma-coefficient", c.worst / c.envelope, 2.0, c.pass, "growth over j<=4 envelope"));
    for i in 1..=3 {
        let e = report.edge_check(i);
        out.push(check_flag(&format!("lemma-edge-{i}"), e.worst / e.envelope, 2.0, e.pass, "growth over j<=4 envelope"));
    }
    let s = report.second_difference_check();
    out.push(check_flag("lemma-second-difference", s.worst / s.envelope, 2.0, s.pass, "ratio to value fitted at j=4"));
    out
}

/// The validate-mode suite on the configured alpha.
pub fn validation_suite(cfg: &RunConfig) -> Result<ValidationReport> {
    let spec = &cfg.numerics;
    let v = &cfg.validation;
    let alpha = &cfg.alpha;
    let seed = cfg.seed;
    let mut rep = ValidationReport::default();

    let one = Integrand::indicator(0.0, 1.0);
    let h = Integrand::haar(0, 0);
    let kp = KernelPoint::new(1.0, cfg.a, alpha)?;
    let k = kp.integrand(alpha);

    let mc = IntegralSampler::new(alpha, &[&one, &h, &k], v.ecf_level, spec)?;
    let samples = mc.samples(seed, 0, v.ecf_n);
    let xis = default_xi_grid();
    for (f, s) in [&one, &h, &k].iter().zip(&samples) {
        rep.push(check_ecf_samples(&format!("ecf[{}]", f.label()), s, f, alpha, &xis, seed, spec)?);
    }

    rep.push(check_tail(&one, alpha, None, v.tail_n, v.tail_level, seed, spec)?);
    rep.push(check_moment(&h, alpha, v.moment_gamma, v.moment_n, v.moment_level, seed, spec)?);
    rep.push(check_martingale_bound(
        alpha,
        cfg.zeta,
        v.martingale_jmax,
        v.martingale_small,
        v.martingale_large,
        seed,
    )?);

    let conv = convergence_study(
        alpha,
        &cfg.field_grid()?,
        cfg.a,
        cfg.zeta,
        &cfg.levels,
        cfg.reference_level,
        v.rate_replicas,
        seed,
        spec,
    )?;
    rep.push(check_rate(&conv, cfg.a, alpha.holder_exponent, alpha.alpha_min)?);

    if alpha.is_constant() {
        let y = &samples[2];
        let n = (v.ks_n as usize).min(y.len());
        let scale = quasi_norm(&k, alpha, spec)?;
        let direct = sample_sas_vec(alpha.alpha_min, scale, n, seed, crate::validation::REFERENCE_STREAM_OFFSET)?;
        rep.push(check_ks(&format!("ks[{}]", k.label()), &y[..n], &direct, seed));
    } else {
        rep.push(CheckResult {
            verdict: Verdict::Skip,
            ..check_flag(&format!("ks[{}]", k.label()), f64::NAN, f64::NAN, true, "needs constant alpha")
        });
    }

    let points: Vec<KernelPoint> = [0.3, 0.55, 0.8, 1.0]
        .iter()
        .flat_map(|&u| [cfg.a, cfg.b].map(|v| KernelPoint { u, v }))
        .collect();
    let lemma = lemma_bound_check(alpha, cfg.a, 0..=12, &points, spec)?;
    for c in lemma_checks(&lemma) {
        rep.push(c);
    }
    Ok(rep)
}
