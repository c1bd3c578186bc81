//! Partial sums `X^J(u, v)` of the field by the Haar-series and
//! dyadic-average routes, Abel-rearranged layer sums, paths
//! `Y(t) = X^J(t, H(t))`, and the coupled-levels convergence study.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{haar_coefficient, DyadicTable, HaarIndex, HaarTable, KernelPoint};
use crate::numerics::QuadratureSpec;
use crate::params::{AlphaFunction, HurstFunction};
use crate::sampler::{epsilon_from_sheet, IncrementSheet, SheetPyramid, SheetSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    HaarSeries,
    DyadicAverage,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::HaarSeries => "haar-series",
            Engine::DyadicAverage => "dyadic-average",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "haar-series" | "haar" => Ok(Engine::HaarSeries),
            "dyadic-average" | "dyadic" => Ok(Engine::DyadicAverage),
            other => Err(Error::Config(format!("unknown engine '{other}'"))),
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Rectangular grid of `(u, v)` values.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn check_increasing(xs: &[f64], name: &str) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::Domain(format!("{name} grid is empty")));
    }
    if xs.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

impl FieldGrid {
    pub fn new(u: Vec<f64>, v: Vec<f64>, alpha: &AlphaFunction) -> Result<Self> {
        check_increasing(&u, "u")?;
        check_increasing(&v, "v")?;
        for &x in &u {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Domain(format!("u = {x} outside [0, 1]")));
            }
        }
        let floor = 1.0 / alpha.alpha_min;
        if !(v[0] > floor) {
            return Err(Error::Domain(format!("grid needs a > 1/alpha_min = {floor}, got {}", v[0])));
        }
        if !(v[v.len() - 1] < 1.0) {
            return Err(Error::Domain(format!("grid needs b < 1, got {}", v[v.len() - 1])));
        }
        Ok(FieldGrid { u, v })
    }

    /// `n` equally spaced values from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        if n == 1 {
            return vec![lo];
        }
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }

    /// Points in row-major order, `u` outer and `v` inner.
    pub fn points(&self) -> Vec<KernelPoint> {
        self.u
            .iter()
            .flat_map(|&u| self.v.iter().map(move |&v| KernelPoint { u, v }))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.u.len() * self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSample {
    pub grid: FieldGrid,
    pub level: u32,
    /// Row-major values, `u` outer and `v` inner.
    pub values: Vec<f64>,
    pub seed: u64,
    pub replica_index: u64,
    pub engine: Engine,
}

impl FieldSample {
    pub fn value(&self, iu: usize, iv: usize) -> f64 {
        self.values[iu * self.grid.v.len() + iv]
    }

    pub fn write_csv<W: Write>(&self, mut out: W, alpha: &AlphaFunction) -> std::io::Result<()> {
        writeln!(out, "# engine: {}", self.engine)?;
        writeln!(out, "# J: {}", self.level)?;
        writeln!(out, "# seed: {}", self.seed)?;
        writeln!(out, "# replica: {}", self.replica_index)?;
        writeln!(out, "# alpha: {}", alpha.descriptor)?;
        writeln!(out, "u,v,value")?;
        for (iu, u) in self.grid.u.iter().enumerate() {
            for (iv, v) in self.grid.v.iter().enumerate() {
                writeln!(out, "{u:.16e},{v:.16e},{:.16e}", self.value(iu, iv))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSample {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub hurst: Vec<f64>,
    pub level: u32,
    pub seed: u64,
    pub replica_index: u64,
    pub engine: Engine,
}

impl PathSample {
    pub fn write_csv<W: Write>(
        &self,
        mut out: W,
        alpha: &AlphaFunction,
        hurst: &HurstFunction,
    ) -> std::io::Result<()> {
        writeln!(out, "# engine: {}", self.engine)?;
        writeln!(out, "# J: {}", self.level)?;
        writeln!(out, "# seed: {}", self.seed)?;
        writeln!(out, "# replica: {}", self.replica_index)?;
        writeln!(out, "# alpha: {}", alpha.descriptor)?;
        writeln!(out, "# hurst: {}", hurst.descriptor)?;
        writeln!(out, "t,value")?;
        for (t, y) in self.times.iter().zip(&self.values) {
            writeln!(out, "{t:.16e},{y:.16e}")?;
        }
        Ok(())
    }
}

enum Tables {
    Haar(HaarTable),
    Dyadic(DyadicTable),
}

/// Precomputed kernel tables for a list of points at level `J`, reusable
/// across sheets.
pub struct FieldEvaluator {
    level: u32,
    tables: Tables,
}

impl FieldEvaluator {
    pub fn new(
        alpha: &AlphaFunction,
        points: &[KernelPoint],
        level: u32,
        engine: Engine,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        let floor = 1.0 / alpha.alpha_min;
        if let Some(p) = points.iter().find(|p| !(p.v > floor && p.v < 1.0)) {
            return Err(Error::Domain(format!("v = {} outside (1/alpha_min, 1)", p.v)));
        }
        let tables = match engine {
            Engine::HaarSeries => Tables::Haar(HaarTable::new(alpha, points, level, spec)?),
            Engine::DyadicAverage => Tables::Dyadic(DyadicTable::new(alpha, points, level, spec)?),
        };
        Ok(FieldEvaluator { level, tables })
    }

    pub fn from_haar(table: HaarTable) -> Self {
        FieldEvaluator { level: table.level, tables: Tables::Haar(table) }
    }

    pub fn from_dyadic(table: DyadicTable) -> Self {
        FieldEvaluator { level: table.level, tables: Tables::Dyadic(table) }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn engine(&self) -> Engine {
        match self.tables {
            Tables::Haar(_) => Engine::HaarSeries,
            Tables::Dyadic(_) => Engine::DyadicAverage,
        }
    }

    /// `X^J` at every point, driven by `sheet`.
    pub fn evaluate(&self, sheet: &IncrementSheet) -> Result<Vec<f64>> {
        if self.level > sheet.level {
            return Err(Error::Domain(format!(
                "level {} exceeds sheet level {}",
                self.level, sheet.level
            )));
        }
        let pyramid = SheetPyramid::new(sheet);
        Ok(self.evaluate_pyramid(&pyramid))
    }

    pub fn evaluate_pyramid(&self, pyramid: &SheetPyramid) -> Vec<f64> {
        match &self.tables {
            Tables::Dyadic(t) => dyadic_sum(t, pyramid.block_sums(self.level)),
            Tables::Haar(t) => {
                let eta = pyramid.block_sums(0)[0];
                let eps: Vec<Vec<f64>> = (0..self.level).map(|j| pyramid.epsilons(j)).collect();
                t.points
                    .iter()
                    .enumerate()
                    .map(|(pi, p)| {
                        let mut x = t.norms[pi] * eta;
                        for (j, e) in eps.iter().enumerate() {
                            let j = j as u32;
                            let top = p.top_index(j).min((1u64 << j) - 1);
                            for k in 0..=top {
                                x += t.coefficient(pi, HaarIndex { j, k }) * e[k as usize];
                            }
                        }
                        // no negative zero for empty kernels
                        x + 0.0
                    })
                    .collect()
            }
        }
    }
}

fn dyadic_sum(table: &DyadicTable, blocks: &[f64]) -> Vec<f64> {
    table
        .averages
        .iter()
        .map(|row| row.iter().zip(blocks).map(|(k, m)| k * m).sum::<f64>() + 0.0)
        .collect()
}

fn field_with(
    alpha: &AlphaFunction,
    grid: &FieldGrid,
    sheet: &IncrementSheet,
    level: u32,
    engine: Engine,
    spec: &QuadratureSpec,
) -> Result<FieldSample> {
    FieldGrid::new(grid.u.clone(), grid.v.clone(), alpha)?;
    if level > sheet.level {
        return Err(Error::Domain(format!("level {level} exceeds sheet level {}", sheet.level)));
    }
    let eval = FieldEvaluator::new(alpha, &grid.points(), level, engine, spec)?;
    Ok(FieldSample {
        grid: grid.clone(),
        level,
        values: eval.evaluate(sheet)?,
        seed: sheet.seed,
        replica_index: sheet.replica_index,
        engine,
    })
}

/// `X^J(u, v) = sum_l Kbar^{J,l}_{u,v} M([2^-J l, 2^-J (l+1)))`.
pub fn field_dyadic(
    alpha: &AlphaFunction,
    grid: &FieldGrid,
    sheet: &IncrementSheet,
    level: u32,
    spec: &QuadratureSpec,
) -> Result<FieldSample> {
    field_with(alpha, grid, sheet, level, Engine::DyadicAverage, spec)
}

/// `X^J(u, v) = ||K_{u,v}||_1 eta + sum_{j<J} sum_k w_{j,k} epsilon_{j,k}`.
pub fn field_haar(
    alpha: &AlphaFunction,
    grid: &FieldGrid,
    sheet: &IncrementSheet,
    level: u32,
    spec: &QuadratureSpec,
) -> Result<FieldSample> {
    field_with(alpha, grid, sheet, level, Engine::HaarSeries, spec)
}

fn layer_inputs(
    alpha: &AlphaFunction,
    p: &KernelPoint,
    sheet: &IncrementSheet,
    j: u32,
    spec: &QuadratureSpec,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if j >= sheet.level {
        return Err(Error::Index(format!("layer {j} needs a sheet finer than level {}", sheet.level)));
    }
    let top = p.top_index(j).min((1u64 << j) - 1);
    let mut w = Vec::with_capacity(top as usize + 1);
    let mut eps = Vec::with_capacity(top as usize + 1);
    for k in 0..=top {
        let idx = HaarIndex { j, k };
        w.push(haar_coefficient(p, alpha, idx, spec)?);
        eps.push(epsilon_from_sheet(sheet, idx)?);
    }
    Ok((w, eps))
}

/// `sum_k w_{j,k} epsilon_{j,k}`.
pub fn layer_sum_direct(
    alpha: &AlphaFunction,
    p: &KernelPoint,
    sheet: &IncrementSheet,
    j: u32,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (w, eps) = layer_inputs(alpha, p, sheet, j, spec)?;
    Ok(w.iter().zip(&eps).map(|(a, b)| a * b).sum())
}

/// The layer sum after summation by parts:
/// `tau_top w_top + sum_{k<top} tau_k (w_k - w_{k+1})`.
pub fn layer_sum_abel(
    alpha: &AlphaFunction,
    p: &KernelPoint,
    sheet: &IncrementSheet,
    j: u32,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let (w, eps) = layer_inputs(alpha, p, sheet, j, spec)?;
    Ok(abel_sum(&w, &eps))
}

pub(crate) fn abel_sum(w: &[f64], eps: &[f64]) -> f64 {
    let top = w.len() - 1;
    let mut tau = 0.0;
    let mut total = 0.0;
    for k in 0..top {
        tau += eps[k];
        total += tau * (w[k] - w[k + 1]);
    }
    tau += eps[top];
    total + tau * w[top]
}

/// Tables for `Y(t) = X^J(t, H(t))` on a fixed time grid.
pub struct PathSimulator {
    times: Vec<f64>,
    hurst: Vec<f64>,
    sampler: SheetSampler,
    evaluator: FieldEvaluator,
}

impl PathSimulator {
    pub fn new(
        alpha: &AlphaFunction,
        hurst: &HurstFunction,
        times: &[f64],
        level: u32,
        engine: Engine,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        let sampler = SheetSampler::new(alpha, level)?;
        check_increasing(times, "time")?;
        let hs = times.iter().map(|&t| hurst.value(t)).collect::<Result<Vec<_>>>()?;
        let points = times
            .iter()
            .zip(&hs)
            .map(|(&t, &h)| KernelPoint::new(t, h, alpha))
            .collect::<Result<Vec<_>>>()?;
        let evaluator = FieldEvaluator::new(alpha, &points, level, engine, spec)?;
        Ok(PathSimulator { times: times.to_vec(), hurst: hs, sampler, evaluator })
    }

    pub fn level(&self) -> u32 {
        self.evaluator.level()
    }

    pub fn simulate(&self, seed: u64, replica_index: u64) -> Result<PathSample> {
        let sheet = self.sampler.sheet(seed, replica_index);
        Ok(PathSample {
            times: self.times.clone(),
            values: self.evaluator.evaluate(&sheet)?,
            hurst: self.hurst.clone(),
            level: self.level(),
            seed,
            replica_index,
            engine: self.evaluator.engine(),
        })
    }

    /// Path values only, for Monte Carlo loops.
    pub fn values(&self, seed: u64, replica_index: u64) -> Vec<f64> {
        let sheet = self.sampler.sheet(seed, replica_index);
        let pyramid = SheetPyramid::new(&sheet);
        self.evaluator.evaluate_pyramid(&pyramid)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn simulate_path(
    alpha: &AlphaFunction,
    hurst: &HurstFunction,
    times: &[f64],
    level: u32,
    seed: u64,
    replica_index: u64,
    engine: Engine,
    spec: &QuadratureSpec,
) -> Result<PathSample> {
    PathSimulator::new(alpha, hurst, times, level, engine, spec)?.simulate(seed, replica_index)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub zeta: f64,
    pub levels: Vec<u32>,
    pub reference_level: u32,
    /// `min(rho, a - 1/alpha_min)`.
    pub rate_exponent: f64,
    /// Per replica, `d_J` for each level.
    pub distances: Vec<Vec<f64>>,
    /// Per replica, `r_J` for each level.
    pub rates: Vec<Vec<f64>>,
    /// Per replica, least-squares slope of `log2 d_J` on `J` (zero distances excluded).
    pub slopes: Vec<f64>,
    pub seed: u64,
    /// All levels built from one shared sheet per replica.
    pub coupled: bool,
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope of `y` on `x`; `NaN` with fewer than two points.
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return f64::NAN;
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

fn log2_slope(levels: &[u32], d: &[f64]) -> f64 {
    let (x, y): (Vec<f64>, Vec<f64>) = levels
        .iter()
        .zip(d)
        .filter(|(_, &dj)| dj > 0.0)
        .map(|(&j, &dj)| (j as f64, dj.log2()))
        .unzip();
    fit_slope(&x, &y)
}

impl ConvergenceReport {
    pub fn median_distances(&self) -> Vec<f64> {
        self.column_medians(&self.distances)
    }

    pub fn median_rates(&self) -> Vec<f64> {
        self.column_medians(&self.rates)
    }

    fn column_medians(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        (0..self.levels.len())
            .map(|i| median(&rows.iter().map(|r| r[i]).collect::<Vec<_>>()))
            .collect()
    }

    /// Median over replicas of the per-replica slopes.
    pub fn slope(&self) -> f64 {
        median(&self.slopes)
    }

    /// CSV with columns `J,median_d,median_r,slope`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "# J_ref: {}", self.reference_level)?;
        writeln!(out, "# zeta: {:.16e}", self.zeta)?;
        writeln!(out, "# rate_exponent: {:.16e}", self.rate_exponent)?;
        writeln!(out, "# replicas: {}", self.distances.len())?;
        writeln!(out, "# seed: {}", self.seed)?;
        writeln!(out, "J,median_d,median_r,slope")?;
        let slope = self.slope();
        for ((j, d), r) in self.levels.iter().zip(self.median_distances()).zip(self.median_rates()) {
            writeln!(out, "{j},{d:.16e},{r:.16e},{slope:.16e}")?;
        }
        Ok(())
    }
}

/// Sup-norm distances between `X^J` and the reference `X^{J_ref}` on a grid,
/// with all levels driven by the same finest sheet per replica.
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    alpha: &AlphaFunction,
    grid: &FieldGrid,
    a: f64,
    zeta: f64,
    levels: &[u32],
    reference_level: u32,
    replicas: u64,
    seed: u64,
    spec: &QuadratureSpec,
) -> Result<ConvergenceReport> {
    let grid = FieldGrid::new(grid.u.clone(), grid.v.clone(), alpha)?;
    let floor = 1.0 / alpha.alpha_min;
    if !(zeta > floor) {
        return Err(Error::Domain(format!("zeta = {zeta} must exceed 1/alpha_min = {floor}")));
    }
    if !(a > floor && a < 1.0) {
        return Err(Error::Domain(format!("a = {a} outside (1/alpha_min, 1)")));
    }
    if levels.is_empty() || levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("levels must be non-empty and strictly increasing".into()));
    }
    if levels[levels.len() - 1] > reference_level {
        return Err(Error::Domain("levels must not exceed the reference level".into()));
    }
    let sampler = SheetSampler::new(alpha, reference_level)?;
    let reference = DyadicTable::new(alpha, &grid.points(), reference_level, spec)?;
    let coarse = levels
        .iter()
        .map(|&j| reference.coarsen(j))
        .collect::<Result<Vec<_>>>()?;
    let rate_exponent = alpha.holder_exponent.min(a - floor);

    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let sheet = sampler.sheet(seed, r);
            let pyramid = SheetPyramid::new(&sheet);
            let x_ref = dyadic_sum(&reference, pyramid.block_sums(reference_level));
            let d: Vec<f64> = coarse
                .iter()
                .map(|t| {
                    dyadic_sum(t, pyramid.block_sums(t.level))
                        .iter()
                        .zip(&x_ref)
                        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
                })
                .collect();
            let rates = levels
                .iter()
                .zip(&d)
                .map(|(&j, dj)| {
                    let jf = (j as f64).max(1.0);
                    jf.powf(-zeta) * (j as f64 * rate_exponent).exp2() * dj
                })
                .collect();
            let slope = log2_slope(levels, &d);
            (d, rates, slope)
        })
        .collect();

    let mut distances = Vec::with_capacity(rows.len());
    let mut rates = Vec::with_capacity(rows.len());
    let mut slopes = Vec::with_capacity(rows.len());
    for (d, r, s) in rows {
        distances.push(d);
        rates.push(r);
        slopes.push(s);
    }
    Ok(ConvergenceReport {
        zeta,
        levels: levels.to_vec(),
        reference_level,
        rate_exponent,
        distances,
        rates,
        slopes,
        seed,
        coupled: true,
    })
}
