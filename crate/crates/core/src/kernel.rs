//! The Riemann-Liouville kernel `K_{u,v}(s) = (u - s)_+^(v - 1/alpha(s))` on
//! `[0, 1]`, its dyadic averages, its Haar coefficients, and numerical checks
//! of the kernel bound lemmas.
//!
//! Every dyadic cell is half-open, `[lo, hi)`, and the Haar mother function
//! is `h = 1[0,1/2) - 1[1/2,1)`.

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrand::Integrand;
use crate::numerics::{integrate_graded, QuadratureSpec};
use crate::params::AlphaFunction;

/// A point `(u, v)` of the field's parameter domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelPoint {
    pub u: f64,
    pub v: f64,
}

impl KernelPoint {
    pub fn new(u: f64, v: f64, alpha: &AlphaFunction) -> Result<Self> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("u = {u} outside [0, 1]")));
        }
        let floor = 1.0 / alpha.alpha_min;
        if !(v > floor && v < 1.0) {
            return Err(Error::Domain(format!(
                "v = {v} outside (1/alpha_min, 1) = ({floor}, 1)"
            )));
        }
        Ok(KernelPoint { u, v })
    }

    /// The kernel as an [`Integrand`], e.g. for its quasi-norm.
    pub fn integrand(&self, alpha: &AlphaFunction) -> Integrand {
        let p = *self;
        let alpha = alpha.clone();
        Integrand::new(
            move |s| kernel_eval(&p, &alpha, s),
            (0.0, p.u),
            vec![],
            format!("K[{},{}]", p.u, p.v),
        )
    }

    /// `floor(2^j u)`, the last Haar index whose support meets `[0, u)`.
    pub fn top_index(&self, j: u32) -> u64 {
        ((self.u * (j as f64).exp2()).floor()) as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HaarIndex {
    pub j: u32,
    pub k: u64,
}

impl HaarIndex {
    pub fn new(j: u32, k: u64) -> Result<Self> {
        if j >= 63 || k >= (1u64 << j) {
            return Err(Error::Index(format!("Haar index (j={j}, k={k}) needs k < 2^j")));
        }
        Ok(HaarIndex { j, k })
    }

    /// Position in a flat level-ordered table: `2^j - 1 + k`.
    pub fn flat(&self) -> usize {
        (1usize << self.j) - 1 + self.k as usize
    }
}

#[inline]
pub fn kernel_eval(p: &KernelPoint, alpha: &AlphaFunction, s: f64) -> f64 {
    if s < 0.0 || s >= p.u {
        return 0.0;
    }
    let exponent = p.v - 1.0 / alpha.value(s);
    (exponent * (p.u - s).ln()).exp()
}

/// `integral of K over [lo, hi)`, truncated at `u`, graded toward `u`.
fn kernel_integral(
    p: &KernelPoint,
    alpha: &AlphaFunction,
    lo: f64,
    hi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let lo = lo.max(0.0);
    let hi = hi.min(p.u);
    if hi <= lo {
        return Ok(0.0);
    }
    let f = |s: f64| kernel_eval(p, alpha, s);
    integrate_graded(&f, lo, hi, spec, &[p.u])
}

pub fn kernel_l1_norm(p: &KernelPoint, alpha: &AlphaFunction, spec: &QuadratureSpec) -> Result<f64> {
    kernel_integral(p, alpha, 0.0, p.u, spec)
}

/// Average of `K` over `[2^-J l, 2^-J (l+1))`.
pub fn dyadic_average(
    p: &KernelPoint,
    alpha: &AlphaFunction,
    level: u32,
    l: u64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if level >= 63 || l >= (1u64 << level) {
        return Err(Error::Index(format!("cell {l} outside level {level}")));
    }
    let width = (-(level as f64)).exp2();
    let lo = l as f64 * width;
    Ok(kernel_integral(p, alpha, lo, lo + width, spec)? / width)
}

/// `w_{j,k} = 2^j integral K(s) h(2^j s - k) ds`.
pub fn haar_coefficient(
    p: &KernelPoint,
    alpha: &AlphaFunction,
    idx: HaarIndex,
    spec: &QuadratureSpec,
) -> Result<f64> {
    let scale = (idx.j as f64).exp2();
    let width = 1.0 / scale;
    let lo = idx.k as f64 * width;
    if lo >= p.u {
        return Ok(0.0);
    }
    let mid = lo + 0.5 * width;
    let hi = lo + width;
    let first = kernel_integral(p, alpha, lo, mid, spec)?;
    let second = kernel_integral(p, alpha, mid, hi, spec)?;
    Ok(scale * (first - second))
}

/// Second difference `K(s) - K(s+d) - K(s+2d) + K(s+3d)`, `d = 2^-(j+1)`.
#[inline]
pub fn second_difference(p: &KernelPoint, alpha: &AlphaFunction, j: u32, s: f64) -> f64 {
    let d = (-(j as f64) - 1.0).exp2();
    kernel_eval(p, alpha, s) - kernel_eval(p, alpha, s + d) - kernel_eval(p, alpha, s + 2.0 * d)
        + kernel_eval(p, alpha, s + 3.0 * d)
}

/// `w_{j,k} - w_{j,k+1}` as `2^j` times the integral of the kernel second
/// difference over the first half of cell `k`.
pub fn coefficient_difference(
    p: &KernelPoint,
    alpha: &AlphaFunction,
    j: u32,
    k: u64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if j >= 63 || k + 1 >= (1u64 << j) {
        return Err(Error::Index(format!(
            "coefficient difference needs 0 <= k < 2^j - 1, got j={j}, k={k}"
        )));
    }
    let scale = (j as f64).exp2();
    let d = 0.5 / scale;
    let lo = k as f64 / scale;
    if lo >= p.u {
        return Ok(0.0);
    }
    let sing: Vec<f64> = (0..4).map(|m| p.u - m as f64 * d).collect();
    let f = |s: f64| second_difference(p, alpha, j, s);
    Ok(scale * integrate_graded(&f, lo, (lo + d).min(p.u), spec, &sing)?)
}

/// Integral `I_j^i(u, v)` of the kernel bound lemmas, `i` in `1..=3`:
/// `2^j` times the integral of the absolute second difference over
/// `[u - (i+1) d, u - i d]`; zero when `u <= i d`.
pub fn edge_integral(
    p: &KernelPoint,
    alpha: &AlphaFunction,
    j: u32,
    i: u32,
    spec: &QuadratureSpec,
) -> Result<f64> {
    assert!((1..=3).contains(&i));
    let scale = (j as f64).exp2();
    let d = 0.5 / scale;
    if p.u <= i as f64 * d {
        return Ok(0.0);
    }
    let hi = p.u - i as f64 * d;
    let lo = (p.u - (i + 1) as f64 * d).max(0.0);
    let sing: Vec<f64> = (0..4).map(|m| p.u - m as f64 * d).collect();
    let f = |s: f64| second_difference(p, alpha, j, s).abs();
    Ok(scale * integrate_graded(&f, lo, hi, spec, &sing)?)
}

/// Haar expansion of the kernel at a set of points, truncated before level `J`.
#[derive(Debug, Clone)]
pub struct HaarTable {
    pub points: Vec<KernelPoint>,
    pub level: u32,
    /// `||K_{u,v}||_1` per point.
    pub norms: Vec<f64>,
    /// Per point, `w_{j,k}` at flat index `2^j - 1 + k`, for `j < level`.
    pub coefficients: Vec<Vec<f64>>,
}

impl HaarTable {
    pub fn new(
        alpha: &AlphaFunction,
        points: &[KernelPoint],
        level: u32,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        let rows: Vec<(f64, Vec<f64>)> = points
            .par_iter()
            .map(|p| {
                let norm = kernel_l1_norm(p, alpha, spec)?;
                let mut w = vec![0.0; (1usize << level) - 1];
                for j in 0..level {
                    let last = p.top_index(j).min((1u64 << j) - 1);
                    for k in 0..=last {
                        let idx = HaarIndex { j, k };
                        w[idx.flat()] = haar_coefficient(p, alpha, idx, spec)?;
                    }
                }
                Ok((norm, w))
            })
            .collect::<Result<_>>()?;
        let (norms, coefficients) = rows.into_iter().unzip();
        Ok(HaarTable { points: points.to_vec(), level, norms, coefficients })
    }

    pub fn coefficient(&self, point: usize, idx: HaarIndex) -> f64 {
        self.coefficients[point][idx.flat()]
    }

    /// CSV with columns `j,k,u,v,w`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "j,k,u,v,w")?;
        for (pi, p) in self.points.iter().enumerate() {
            for j in 0..self.level {
                for k in 0..(1u64 << j) {
                    let w = self.coefficient(pi, HaarIndex { j, k });
                    writeln!(out, "{j},{k},{:.16e},{:.16e},{:.16e}", p.u, p.v, w)?;
                }
            }
        }
        Ok(())
    }
}

/// Dyadic averages `Kbar^{J,l}` of the kernel at a set of points.
///
/// Only cells meeting `[0, u)` are stored; the rest are zero.
#[derive(Debug, Clone)]
pub struct DyadicTable {
    pub points: Vec<KernelPoint>,
    pub level: u32,
    pub averages: Vec<Vec<f64>>,
}

impl DyadicTable {
    pub fn new(
        alpha: &AlphaFunction,
        points: &[KernelPoint],
        level: u32,
        spec: &QuadratureSpec,
    ) -> Result<Self> {
        let n = 1u64 << level;
        let averages = points
            .par_iter()
            .map(|p| {
                let cells = (p.top_index(level) + 1).min(n);
                (0..cells).map(|l| dyadic_average(p, alpha, level, l, spec)).collect()
            })
            .collect::<Result<_>>()?;
        Ok(DyadicTable { points: points.to_vec(), level, averages })
    }

    /// Averages at a coarser level, as block means of this table's cells.
    pub fn coarsen(&self, level: u32) -> Result<DyadicTable> {
        if level > self.level {
            return Err(Error::Index(format!(
                "cannot coarsen level {} to finer level {level}",
                self.level
            )));
        }
        let block = 1usize << (self.level - level);
        let averages = self
            .averages
            .iter()
            .map(|row| {
                row.chunks(block)
                    .map(|c| c.iter().sum::<f64>() / block as f64)
                    .collect()
            })
            .collect();
        Ok(DyadicTable { points: self.points.clone(), level, averages })
    }
}

/// Per-level maxima of the bound-lemma statistics over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LemmaRow {
    pub j: u32,
    /// `max |w_{j,floor(2^j u)}| 2^{j(a - 1/alpha_min)}`
    pub coefficient: f64,
    /// `max I_j^i 2^{j(a - 1/alpha_min)}`, `i = 1, 2, 3`.
    pub edge: [f64; 3],
    /// Max ratio of the second difference to its bound shape; `None` when no
    /// grid point satisfies `u >= 4 * 2^-(j+1)`.
    pub second_difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub exponent: f64,
    pub holder_exponent: f64,
    pub rows: Vec<LemmaRow>,
}

/// Growth check for one statistic: envelope = max over `j <= fit_through`,
/// worst = max over the remaining levels; passes iff `worst <= 2 * envelope`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeCheck {
    pub envelope: f64,
    pub worst: f64,
    pub pass: bool,
}

impl EnvelopeCheck {
    fn from_series(series: &[(u32, f64)], fit_through: u32) -> Self {
        let envelope = series
            .iter()
            .filter(|(j, _)| *j <= fit_through)
            .map(|s| s.1)
            .fold(0.0, f64::max);
        let worst = series
            .iter()
            .filter(|(j, _)| *j > fit_through)
            .map(|s| s.1)
            .fold(0.0, f64::max);
        let finite = series.iter().all(|s| s.1.is_finite());
        EnvelopeCheck { envelope, worst, pass: finite && worst <= 2.0 * envelope.max(f64::MIN_POSITIVE) }
    }
}

impl LemmaReport {
    pub const FIT_THROUGH: u32 = 4;

    pub fn coefficient_check(&self) -> EnvelopeCheck {
        let s: Vec<_> = self.rows.iter().map(|r| (r.j, r.coefficient)).collect();
        EnvelopeCheck::from_series(&s, Self::FIT_THROUGH)
    }

    pub fn edge_check(&self, i: usize) -> EnvelopeCheck {
        let s: Vec<_> = self.rows.iter().map(|r| (r.j, r.edge[i - 1])).collect();
        EnvelopeCheck::from_series(&s, Self::FIT_THROUGH)
    }

    /// Constant fitted at `j = FIT_THROUGH`; later levels may not exceed twice it.
    pub fn second_difference_check(&self) -> EnvelopeCheck {
        let fit = self
            .rows
            .iter()
            .find(|r| r.j == Self::FIT_THROUGH)
            .and_then(|r| r.second_difference)
            .unwrap_or(f64::NAN);
        let worst = self
            .rows
            .iter()
            .filter(|r| r.j > Self::FIT_THROUGH)
            .filter_map(|r| r.second_difference)
            .fold(0.0, f64::max);
        EnvelopeCheck { envelope: fit, worst, pass: fit.is_finite() && worst <= 2.0 * fit }
    }

    pub fn pass(&self) -> bool {
        self.coefficient_check().pass
            && (1..=3).all(|i| self.edge_check(i).pass)
            && self.second_difference_check().pass
    }
}

/// Evaluates the bound-lemma statistics for `j` in `levels` over `points`.
pub fn lemma_bound_check(
    alpha: &AlphaFunction,
    a: f64,
    levels: std::ops::RangeInclusive<u32>,
    points: &[KernelPoint],
    spec: &QuadratureSpec,
) -> Result<LemmaReport> {
    let exponent = a - 1.0 / alpha.alpha_min;
    let rho = alpha.holder_exponent;
    let rows = levels
        .map(|j| {
            let gain = (j as f64 * exponent).exp2();
            let per_point: Vec<(f64, [f64; 3], Option<f64>)> = points
                .par_iter()
                .map(|p| {
                    let top = p.top_index(j);
                    let w = if top < (1u64 << j) {
                        haar_coefficient(p, alpha, HaarIndex { j, k: top }, spec)?
                    } else {
                        0.0
                    };
                    let mut edge = [0.0; 3];
                    for (i, e) in edge.iter_mut().enumerate() {
                        *e = edge_integral(p, alpha, j, i as u32 + 1, spec)? * gain;
                    }
                    Ok((w.abs() * gain, edge, second_difference_ratio(p, alpha, j, a, rho)))
                })
                .collect::<Result<_>>()?;
            let coefficient = per_point.iter().map(|r| r.0).fold(0.0, f64::max);
            let mut edge = [0.0f64; 3];
            for r in &per_point {
                for i in 0..3 {
                    edge[i] = edge[i].max(r.1[i]);
                }
            }
            let second_difference = per_point.iter().filter_map(|r| r.2).reduce(f64::max);
            Ok(LemmaRow { j, coefficient, edge, second_difference })
        })
        .collect::<Result<_>>()?;
    Ok(LemmaReport { exponent, holder_exponent: rho, rows })
}

/// Max over sampled `s` in `[0, u - 4d]` of
/// `|second difference| / (2^-j (2^{-j rho} + 2^-j |u - s - 3d|^{a - 1/alpha_min - 2}))`.
fn second_difference_ratio(p: &KernelPoint, alpha: &AlphaFunction, j: u32, a: f64, rho: f64) -> Option<f64> {
    if j == 0 {
        return None;
    }
    let d = (-(j as f64) - 1.0).exp2();
    let end = p.u - 4.0 * d;
    if end < 0.0 {
        return None;
    }
    let power = a - 1.0 / alpha.alpha_min - 2.0;
    let step = (-(j as f64)).exp2();
    let uniform = (0..=32).map(|i| end * i as f64 / 32.0);
    let near = (1..=8).map(|m| end - m as f64 * d).filter(|s| *s >= 0.0);
    uniform
        .chain(near)
        .map(|s| {
            let lhs = second_difference(p, alpha, j, s).abs();
            let rhs = step * (step.powf(rho) + step * (p.u - s - 3.0 * d).abs().powf(power));
            lhs / rhs
        })
        .reduce(f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{build_alpha, FunctionDescriptor};

    const THETA: f64 = 2.0 / 15.0;

    fn constant() -> AlphaFunction {
        build_alpha(&FunctionDescriptor::constant(1.5)).unwrap()
    }

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    fn tight() -> QuadratureSpec {
        QuadratureSpec { abs_tol: 1e-15, rel_tol: 1e-14, ..Default::default() }
    }

    /// Composite Simpson on `n` intervals.
    fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut acc = f(a) + f(b);
        for i in 1..n {
            let x = a + i as f64 * h;
            acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
        }
        acc * h / 3.0
    }

    #[test]
    fn kernel_values() {
        let a = constant();
        let p = KernelPoint::new(1.0, 0.8, &a).unwrap();
        assert_eq!(kernel_eval(&p, &a, 0.0), 1.0);
        assert_eq!(kernel_eval(&p, &a, 1.0), 0.0);
        assert_eq!(kernel_eval(&p, &a, -0.1), 0.0);
        let q = KernelPoint::new(0.5, 0.8, &a).unwrap();
        assert!((kernel_eval(&q, &a, 0.25) - 0.831_237_896_142_787_8).abs() < 1e-14);
        assert!(KernelPoint::new(0.5, 0.6, &a).is_err());
        assert!(KernelPoint::new(1.2, 0.8, &a).is_err());
    }

    #[test]
    fn l1_norm_and_averages() {
        let a = constant();
        let p = KernelPoint::new(1.0, 0.8, &a).unwrap();
        let n = kernel_l1_norm(&p, &a, &spec()).unwrap();
        assert!((n - 15.0 / 17.0).abs() < 1e-10 * n + 1e-12, "{n}");
        let n = kernel_l1_norm(&p, &a, &tight()).unwrap();
        assert!((n - 15.0 / 17.0).abs() < 1e-13, "{n}");
        let zero = KernelPoint::new(0.0, 0.8, &a).unwrap();
        assert_eq!(kernel_l1_norm(&zero, &a, &spec()).unwrap(), 0.0);

        let avg = dyadic_average(&p, &a, 1, 0, &tight()).unwrap();
        assert!((avg - 0.960_244_863_036_867_5).abs() < 1e-13, "{avg}");
        let whole = dyadic_average(&p, &a, 0, 0, &tight()).unwrap();
        assert!((whole - n).abs() < 1e-13);
        let q = KernelPoint::new(0.3, 0.8, &a).unwrap();
        assert_eq!(dyadic_average(&q, &a, 2, 2, &spec()).unwrap(), 0.0);
    }

    #[test]
    fn haar_coefficient_closed_form() {
        let a = constant();
        let p = KernelPoint::new(1.0, 0.8, &a).unwrap();
        let w = haar_coefficient(&p, &a, HaarIndex::new(0, 0).unwrap(), &tight()).unwrap();
        let closed = (1.0 - (-THETA).exp2()) / (1.0 + THETA);
        assert!((w - closed).abs() < 1e-13);
        assert!((closed - 0.077_891_921_860_396_93).abs() < 1e-15);
    }

    #[test]
    fn haar_coefficient_against_simpson() {
        let a = constant();
        let p = KernelPoint::new(1.0, 0.8, &a).unwrap();
        let w = haar_coefficient(&p, &a, HaarIndex::new(3, 7).unwrap(), &tight()).unwrap();
        // Closed form for constant alpha on the two eighth-cells (oracle via antiderivative)
        let anti = |s: f64| -(1.0 - s).powf(1.0 + THETA) / (1.0 + THETA);
        let exact = 8.0 * ((anti(0.9375) - anti(0.875)) - (anti(1.0) - anti(0.9375)));
        // Brute-force Simpson on 2^16 points, away from the endpoint singularity of K'
        let k = |s: f64| kernel_eval(&p, &a, s);
        let simpson_val = 8.0 * (simpson(k, 0.875, 0.9375, 1 << 16) - simpson(k, 0.9375, 1.0, 1 << 16));
        assert!((w - exact).abs() < 1e-12, "{w} vs {exact}");
        assert!((simpson_val - exact).abs() < 1e-6);
        // the smooth half-cell alone reaches 1e-9 with Simpson
        let smooth = 8.0 * simpson(k, 0.875, 0.9375, 1 << 16);
        assert!((smooth - 8.0 * (anti(0.9375) - anti(0.875))).abs() < 1e-9);
    }

    #[test]
    fn coefficients_vanish_right_of_u() {
        let a = constant();
        let p = KernelPoint::new(0.4, 0.8, &a).unwrap();
        for j in 0..6 {
            for k in (p.top_index(j) + 1)..(1u64 << j) {
                let w = haar_coefficient(&p, &a, HaarIndex { j, k }, &spec()).unwrap();
                assert_eq!(w, 0.0, "j={j} k={k}");
            }
        }
    }

    #[test]
    fn coefficient_difference_identity() {
        let a = build_alpha(&FunctionDescriptor::sine(1.5, 0.3)).unwrap();
        for &(u, v, j, k) in &[(1.0, 0.85, 2u32, 1u64), (0.63, 0.9, 4, 7), (0.63, 0.9, 4, 9), (0.2, 0.95, 3, 0)] {
            let p = KernelPoint::new(u, v, &a).unwrap();
            let direct = haar_coefficient(&p, &a, HaarIndex { j, k }, &spec()).unwrap()
                - haar_coefficient(&p, &a, HaarIndex { j, k: k + 1 }, &spec()).unwrap();
            let diff = coefficient_difference(&p, &a, j, k, &spec()).unwrap();
            assert!((direct - diff).abs() < 1e-9, "({u},{v},{j},{k}): {direct} vs {diff}");
        }
        let p = KernelPoint::new(1.0, 0.85, &a).unwrap();
        assert!(matches!(coefficient_difference(&p, &a, 2, 3, &spec()), Err(Error::Index(_))));
    }

    #[test]
    fn edge_integral_conventions() {
        let a = constant();
        // u <= 3 * 2^-(j+1) gives I^3 = 0
        let p = KernelPoint::new(0.3, 0.8, &a).unwrap();
        assert_eq!(edge_integral(&p, &a, 2, 3, &spec()).unwrap(), 0.0);
        assert!(edge_integral(&p, &a, 2, 1, &spec()).unwrap() > 0.0);
    }

    #[test]
    fn haar_reconstruction_matches_dyadic_average() {
        let a = build_alpha(&FunctionDescriptor::sine(1.5, 0.3)).unwrap();
        let p = KernelPoint::new(0.71, 0.85, &a).unwrap();
        for level in 1..=6u32 {
            let table = HaarTable::new(&a, &[p], level, &spec()).unwrap();
            for l in 0..(1u64 << level) {
                let mid = (l as f64 + 0.5) * (-(level as f64)).exp2();
                let mut value = table.norms[0];
                for j in 0..level {
                    let k = (mid * (j as f64).exp2()).floor() as u64;
                    let x = mid * (j as f64).exp2() - k as f64;
                    let h = if x < 0.5 { 1.0 } else { -1.0 };
                    value += table.coefficient(0, HaarIndex { j, k }) * h;
                }
                let avg = dyadic_average(&p, &a, level, l, &spec()).unwrap();
                assert!((value - avg).abs() < 1e-8, "J={level} l={l}: {value} vs {avg}");
            }
        }
    }

    #[test]
    fn coarsened_table_matches_direct() {
        let a = constant();
        let pts = [KernelPoint::new(0.77, 0.8, &a).unwrap()];
        let fine = DyadicTable::new(&a, &pts, 8, &spec()).unwrap();
        let direct = DyadicTable::new(&a, &pts, 5, &spec()).unwrap();
        let coarse = fine.coarsen(5).unwrap();
        for (x, y) in coarse.averages[0].iter().zip(&direct.averages[0]) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn lemma_statistics_scale_as_expected() {
        let a = constant();
        let p = KernelPoint::new(1.0 - 1e-9, 0.8, &a).unwrap();
        let report = lemma_bound_check(&a, 0.8, 0..=6, &[p], &spec()).unwrap();
        for r in &report.rows {
            assert!(r.coefficient.is_finite());
            assert!(r.edge.iter().all(|e| e.is_finite()));
        }
        assert!(report.pass());
    }
}
