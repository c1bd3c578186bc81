//! Sectioned key-value run configuration.
//!
//! ```text
//! [run]
//! mode = simulate-path
//! seed = 7
//! J = 12
//!
//! [alpha]
//! family = constant
//! p1 = 1.5
//!
//! [hurst]
//! family = constant
//! p1 = 0.72
//! ```

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::numerics::QuadratureSpec;
use crate::params::{build_alpha, build_hurst, AlphaFunction, FamilyKind, FunctionDescriptor, HurstFunction};
use crate::simulator::{Engine, FieldGrid};

const SECTIONS: &[(&str, &[&str])] = &[
    (
        "run",
        &[
            "mode",
            "seed",
            "replicas",
            "engine",
            "J",
            "J_ref",
            "levels",
            "zeta",
            "ecf_n",
            "ecf_level",
            "tail_n",
            "tail_level",
            "moment_n",
            "moment_level",
            "moment_gamma",
            "martingale_jmax",
            "martingale_small",
            "martingale_large",
            "rate_replicas",
            "ks_n",
        ],
    ),
    ("alpha", &["family", "p1", "p2", "p3", "p4", "knots", "holder", "min", "max"]),
    ("hurst", &["family", "p1", "p2", "p3", "p4", "knots", "holder", "min", "max"]),
    ("grid", &["t_points", "u_points", "v_points", "a", "b"]),
    ("numerics", &["order", "abs_tol", "rel_tol", "max_depth"]),
    ("output", &["dir", "sheets"]),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    SimulatePath,
    SimulateField,
    ConvergenceStudy,
    Validate,
    ExportCoefficients,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::SimulatePath => "simulate-path",
            Mode::SimulateField => "simulate-field",
            Mode::ConvergenceStudy => "convergence-study",
            Mode::Validate => "validate",
            Mode::ExportCoefficients => "export-coefficients",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "simulate-path" => Ok(Mode::SimulatePath),
            "simulate-field" => Ok(Mode::SimulateField),
            "convergence-study" => Ok(Mode::ConvergenceStudy),
            "validate" => Ok(Mode::Validate),
            "export-coefficients" => Ok(Mode::ExportCoefficients),
            other => Err(Error::Config(format!("unknown mode '{other}'"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parsed `section.key -> value` pairs before validation.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, String>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<&str> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = strip_comment(raw).trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| Error::Config(format!("line {}: {msg}", lineno + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                section = Some(
                    SECTIONS
                        .iter()
                        .find(|(s, _)| *s == name)
                        .map(|(s, _)| *s)
                        .ok_or_else(|| at(format!("unknown section [{name}]")))?,
                );
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(format!("expected key = value, got '{line}'")))?;
            let sec = section.ok_or_else(|| at("key outside of any section".into()))?;
            let key = key.trim();
            let full = format!("{sec}.{key}");
            if !allowed(sec, key) {
                return Err(at(format!("unknown key '{full}'")));
            }
            if entries.insert(full.clone(), value.trim().to_string()).is_some() {
                return Err(at(format!("duplicate key '{full}'")));
            }
        }
        Ok(RawConfig { entries })
    }

    /// Sets `section.key`, as done by command-line overrides.
    pub fn set(&mut self, full_key: &str, value: impl Into<String>) -> Result<()> {
        let (sec, key) = full_key
            .split_once('.')
            .ok_or_else(|| Error::Config(format!("malformed key '{full_key}'")))?;
        if !allowed(sec, key) {
            return Err(Error::Config(format!("unknown key '{full_key}'")));
        }
        self.entries.insert(full_key.to_string(), value.into());
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    fn has_section(&self, sec: &str) -> bool {
        let prefix = format!("{sec}.");
        self.entries.keys().any(|k| k.starts_with(&prefix))
    }
}

fn strip_comment(line: &str) -> &str {
    let t = line.trim_start();
    if t.starts_with('#') || t.starts_with(';') {
        return "";
    }
    match line.find(" #") {
        Some(i) => &line[..i],
        None => line,
    }
}

fn allowed(sec: &str, key: &str) -> bool {
    SECTIONS.iter().any(|(s, keys)| *s == sec && keys.contains(&key))
}

/// Settings of the validate suite.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationSettings {
    pub ecf_n: u64,
    pub ecf_level: u32,
    pub tail_n: u64,
    pub tail_level: u32,
    pub moment_n: u64,
    pub moment_level: u32,
    pub moment_gamma: f64,
    pub martingale_jmax: u32,
    pub martingale_small: u64,
    pub martingale_large: u64,
    pub rate_replicas: u64,
    pub ks_n: u64,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Mode,
    pub alpha_descriptor: FunctionDescriptor,
    pub alpha: AlphaFunction,
    pub hurst_descriptor: Option<FunctionDescriptor>,
    pub hurst: Option<HurstFunction>,
    pub seed: u64,
    pub replicas: u64,
    pub engine: Engine,
    pub level: u32,
    pub reference_level: u32,
    pub levels: Vec<u32>,
    pub zeta: f64,
    pub t_points: usize,
    pub u_points: usize,
    pub v_points: usize,
    pub a: f64,
    pub b: f64,
    pub numerics: QuadratureSpec,
    pub validation: ValidationSettings,
    pub output_dir: Option<PathBuf>,
    pub export_sheets: bool,
    /// `(key, value)` for every default that was applied.
    pub defaults: Vec<(String, String)>,
}

struct Reader<'a> {
    raw: &'a RawConfig,
    defaults: Vec<(String, String)>,
}

impl<'a> Reader<'a> {
    fn parsed<T: std::str::FromStr>(&mut self, key: &str, default: Option<T>) -> Result<T>
    where
        T: fmt::Display,
    {
        match self.raw.get(key) {
            Some(v) => v
                .parse()
                .map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'"))),
            None => match default {
                Some(d) => {
                    self.defaults.push((key.to_string(), d.to_string()));
                    Ok(d)
                }
                None => Err(Error::Config(format!("missing required key '{key}'"))),
            },
        }
    }

    fn optional<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.raw
            .get(key)
            .map(|v| v.parse().map_err(|_| Error::Config(format!("invalid value '{v}' for '{key}'"))))
            .transpose()
    }
}

fn parse_levels(s: &str) -> Result<Vec<u32>> {
    let bad = || Error::Config(format!("invalid levels '{s}', expected e.g. 4..10 or 4,6,8"));
    if let Some((lo, hi)) = s.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn parse_knots(s: &str) -> Result<Vec<(f64, f64)>> {
    s.split(',')
        .map(|pair| {
            let (x, y) = pair
                .split_once(':')
                .ok_or_else(|| Error::Config(format!("knot '{pair}' must be s:value")))?;
            let p = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid knot '{pair}'")))
            };
            Ok((p(x)?, p(y)?))
        })
        .collect()
}

fn descriptor(r: &Reader<'_>, sec: &str) -> Result<FunctionDescriptor> {
    let family: String = r
        .optional(&format!("{sec}.family"))?
        .ok_or_else(|| Error::Config(format!("missing required key '{sec}.family'")))?;
    let family = FamilyKind::parse(&family)?;
    let mut params = Vec::new();
    for i in 1..=4 {
        match r.optional::<f64>(&format!("{sec}.p{i}"))? {
            Some(p) if params.len() == i - 1 => params.push(p),
            Some(_) => return Err(Error::Config(format!("'{sec}.p{i}' given without p{}", i - 1))),
            None => {}
        }
    }
    let knots = match r.raw.get(&format!("{sec}.knots")) {
        Some(k) => parse_knots(k)?,
        None => Vec::new(),
    };
    let mut desc = match family {
        FamilyKind::PiecewiseCubic => FunctionDescriptor::piecewise_cubic(knots),
        _ => {
            if !knots.is_empty() {
                return Err(Error::Config(format!("'{sec}.knots' only applies to piecewise-cubic")));
            }
            FunctionDescriptor { family, params, ..FunctionDescriptor::constant(0.0) }
        }
    };
    if let Some(rho) = r.optional::<f64>(&format!("{sec}.holder"))? {
        desc = desc.with_holder_exponent(rho);
    }
    match (
        r.optional::<f64>(&format!("{sec}.min"))?,
        r.optional::<f64>(&format!("{sec}.max"))?,
    ) {
        (Some(lo), Some(hi)) => desc = desc.with_declared_range(lo, hi),
        (None, None) => {}
        _ => return Err(Error::Config(format!("'{sec}.min' and '{sec}.max' go together"))),
    }
    Ok(desc)
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    RunConfig::from_raw(&RawConfig::parse(text)?)
}

impl RunConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self> {
        let mut r = Reader { raw, defaults: Vec::new() };
        let mode_name: String = r.parsed("run.mode", None)?;
        let mode = Mode::parse(&mode_name)?;

        let alpha_descriptor = descriptor(&r, "alpha")?;
        let alpha = build_alpha(&alpha_descriptor)?;
        let (hurst_descriptor, hurst) = if raw.has_section("hurst") {
            let d = descriptor(&r, "hurst")?;
            let h = build_hurst(&d, &alpha)?;
            (Some(d), Some(h))
        } else if mode == Mode::SimulatePath {
            return Err(Error::Config("simulate-path needs a [hurst] section".into()));
        } else {
            (None, None)
        };

        let seed = r.parsed("run.seed", Some(0u64))?;
        let replicas = r.parsed("run.replicas", Some(1u64))?;
        if replicas == 0 {
            return Err(Error::Config("run.replicas must be at least 1".into()));
        }
        let engine_name: String = r.parsed("run.engine", Some("dyadic-average".to_string()))?;
        let engine = Engine::parse(&engine_name)?;
        let level = r.parsed("run.J", Some(12u32))?;
        let reference_level = r.parsed("run.J_ref", Some(14u32))?;
        let levels_text: String = r.parsed("run.levels", Some("4..10".to_string()))?;
        let levels = parse_levels(&levels_text)?;
        let zeta = r.parsed("run.zeta", Some(1.0f64))?;

        let floor = 1.0 / alpha.alpha_min;
        if !(zeta > floor) {
            return Err(Error::Config(format!("zeta must exceed 1/alpha_min = {floor}")));
        }
        if mode == Mode::ConvergenceStudy {
            if levels.windows(2).any(|w| w[0] >= w[1]) || levels.is_empty() {
                return Err(Error::Config("run.levels must be strictly increasing".into()));
            }
            if levels[levels.len() - 1] > reference_level {
                return Err(Error::Config("run.levels must not exceed run.J_ref".into()));
            }
        }

        let t_points = r.parsed("grid.t_points", Some(101usize))?;
        let u_points = r.parsed("grid.u_points", Some(21usize))?;
        let v_points = r.parsed("grid.v_points", Some(5usize))?;
        let a = r.parsed("grid.a", Some(0.8f64))?;
        let b = r.parsed("grid.b", Some(0.95f64))?;
        if t_points < 2 || u_points < 2 || v_points < 1 {
            return Err(Error::Config("grid needs t_points >= 2, u_points >= 2, v_points >= 1".into()));
        }
        let grid_used = mode != Mode::SimulatePath || raw.get("grid.a").is_some() || raw.get("grid.b").is_some();
        if grid_used {
            if !(b < 1.0) {
                return Err(Error::Config(format!("grid.b = {b} must be < 1")));
            }
            if !(a > floor) {
                return Err(Error::Config(format!("grid.a = {a} must exceed 1/alpha_min = {floor}")));
            }
            if !(a <= b) || (v_points > 1 && a == b) {
                return Err(Error::Config("grid needs a < b".into()));
            }
        }

        let d = QuadratureSpec::default();
        let numerics = QuadratureSpec {
            order: r.parsed("numerics.order", Some(d.order))?,
            abs_tol: r.parsed("numerics.abs_tol", Some(d.abs_tol))?,
            rel_tol: r.parsed("numerics.rel_tol", Some(d.rel_tol))?,
            max_depth: r.parsed("numerics.max_depth", Some(d.max_depth))?,
            singular_points: Vec::new(),
        };
        numerics.validate().map_err(|e| Error::Config(e.to_string()))?;

        let gamma_default = (1.2f64).min(0.8 * alpha.alpha_min);
        let validation = ValidationSettings {
            ecf_n: r.parsed("run.ecf_n", Some(10_000u64))?,
            ecf_level: r.parsed("run.ecf_level", Some(12u32))?,
            tail_n: r.parsed("run.tail_n", Some(100_000u64))?,
            tail_level: r.parsed("run.tail_level", Some(6u32))?,
            moment_n: r.parsed("run.moment_n", Some(100_000u64))?,
            moment_level: r.parsed("run.moment_level", Some(6u32))?,
            moment_gamma: r.parsed("run.moment_gamma", Some(gamma_default))?,
            martingale_jmax: r.parsed("run.martingale_jmax", Some(12u32))?,
            martingale_small: r.parsed("run.martingale_small", Some(1_000u64))?,
            martingale_large: r.parsed("run.martingale_large", Some(10_000u64))?,
            rate_replicas: r.parsed("run.rate_replicas", Some(20u64))?,
            ks_n: r.parsed("run.ks_n", Some(2_000u64))?,
        };

        let output_dir = r.optional::<String>("output.dir")?.map(PathBuf::from);
        let export_sheets = r.parsed("output.sheets", Some(false))?;

        let cfg = RunConfig {
            mode,
            alpha_descriptor,
            alpha,
            hurst_descriptor,
            hurst,
            seed,
            replicas,
            engine,
            level,
            reference_level,
            levels,
            zeta,
            t_points,
            u_points,
            v_points,
            a,
            b,
            numerics,
            validation,
            output_dir,
            export_sheets,
            defaults: r.defaults,
        };
        if grid_used {
            cfg.field_grid()?;
        }
        Ok(cfg)
    }

    pub fn field_grid(&self) -> Result<FieldGrid> {
        FieldGrid::new(
            FieldGrid::linspace(0.0, 1.0, self.u_points),
            FieldGrid::linspace(self.a, self.b, self.v_points),
            &self.alpha,
        )
    }

    pub fn time_grid(&self) -> Vec<f64> {
        FieldGrid::linspace(0.0, 1.0, self.t_points)
    }

    /// Canonical text of every field that affects results; output location
    /// and thread count are excluded.
    pub fn canonical(&self) -> String {
        let v = &self.validation;
        let n = &self.numerics;
        let mut lines = vec![
            format!("mode={}", self.mode),
            format!("alpha={}", self.alpha_descriptor),
            format!(
                "hurst={}",
                self.hurst_descriptor.as_ref().map(|d| d.to_string()).unwrap_or_default()
            ),
            format!("seed={}", self.seed),
            format!("replicas={}", self.replicas),
            format!("engine={}", self.engine),
            format!("J={}", self.level),
            format!("J_ref={}", self.reference_level),
            format!("levels={:?}", self.levels),
            format!("zeta={:?}", self.zeta),
            format!("grid={} {} {} {:?} {:?}", self.t_points, self.u_points, self.v_points, self.a, self.b),
            format!("numerics={} {:?} {:?} {}", n.order, n.abs_tol, n.rel_tol, n.max_depth),
            format!("validation={v:?}"),
            format!("sheets={}", self.export_sheets),
        ];
        lines.push(String::new());
        lines.join("\n")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
