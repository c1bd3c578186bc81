//! Deterministic parameter functions: the stability index `alpha(s)` and the
//! Hurst function `H(t)`.
//!
//! Both are built from a [`FunctionDescriptor`] and share the same family
//! menu. Values outside `[0, 1]` are extended by the boundary value, so an
//! [`AlphaFunction`] is total on the real line.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Hölder exponent assigned to built-in families when the descriptor does not
/// override it. Every built-in family is C² on `[0, 1]`.
pub const DEFAULT_HOLDER_EXPONENT: f64 = 0.999;

const RANGE_GRID: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    Constant,
    Affine,
    Sine,
    PiecewiseCubic,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Constant => "constant",
            FamilyKind::Affine => "affine",
            FamilyKind::Sine => "sine",
            FamilyKind::PiecewiseCubic => "piecewise-cubic",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name.trim() {
            "constant" => Ok(FamilyKind::Constant),
            "affine" => Ok(FamilyKind::Affine),
            "sine" | "sine-mapped" => Ok(FamilyKind::Sine),
            "piecewise-cubic" | "piecewise" | "spline" => Ok(FamilyKind::PiecewiseCubic),
            other => Err(Error::Descriptor(format!("unknown family `{other}`"))),
        }
    }
}

/// Structured description of a parameter function.
///
/// Parameter meaning per family:
/// * `constant`: `p1` = value.
/// * `affine`: `p1 + p2 * s`.
/// * `sine`: `p1 + p2 * sin(2 pi p3 s + p4)`, with `p3 = 1` and `p4 = 0` when omitted.
/// * `piecewise-cubic`: natural cubic spline through `knots`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDescriptor {
    pub family: FamilyKind,
    pub params: Vec<f64>,
    pub knots: Vec<(f64, f64)>,
    pub holder_exponent: Option<f64>,
    pub declared_range: Option<(f64, f64)>,
}

impl FunctionDescriptor {
    pub fn constant(value: f64) -> Self {
        Self::with_params(FamilyKind::Constant, vec![value])
    }

    pub fn affine(intercept: f64, slope: f64) -> Self {
        Self::with_params(FamilyKind::Affine, vec![intercept, slope])
    }

    /// `center + amplitude * sin(2 pi s)`.
    pub fn sine(center: f64, amplitude: f64) -> Self {
        Self::with_params(FamilyKind::Sine, vec![center, amplitude])
    }

    pub fn piecewise_cubic(knots: Vec<(f64, f64)>) -> Self {
        FunctionDescriptor {
            family: FamilyKind::PiecewiseCubic,
            params: Vec::new(),
            knots,
            holder_exponent: None,
            declared_range: None,
        }
    }

    fn with_params(family: FamilyKind, params: Vec<f64>) -> Self {
        FunctionDescriptor {
            family,
            params,
            knots: Vec::new(),
            holder_exponent: None,
            declared_range: None,
        }
    }

    pub fn with_holder_exponent(mut self, rho: f64) -> Self {
        self.holder_exponent = Some(rho);
        self
    }

    pub fn with_declared_range(mut self, lo: f64, hi: f64) -> Self {
        self.declared_range = Some((lo, hi));
        self
    }
}

impl fmt::Display for FunctionDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "family={}", self.family.name())?;
        for (i, p) in self.params.iter().enumerate() {
            write!(f, " p{}={}", i + 1, p)?;
        }
        if !self.knots.is_empty() {
            let knots: Vec<String> = self.knots.iter().map(|(s, v)| format!("{s}:{v}")).collect();
            write!(f, " knots={}", knots.join(","))?;
        }
        if let Some(rho) = self.holder_exponent {
            write!(f, " holder={rho}")?;
        }
        if let Some((lo, hi)) = self.declared_range {
            write!(f, " min={lo} max={hi}")?;
        }
        Ok(())
    }
}

/// Natural cubic spline; C² on the knot span.
#[derive(Debug, Clone)]
struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl CubicSpline {
    fn new(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 4 {
            return Err(Error::Descriptor(format!(
                "piecewise-cubic needs at least 4 knots, got {}",
                knots.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Descriptor(
                "piecewise-cubic knot abscissae must be strictly increasing".into(),
            ));
        }
        if knots.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
            return Err(Error::Descriptor("non-finite knot".into()));
        }
        let (x0, x1) = (knots[0].0, knots[knots.len() - 1].0);
        if x0 > 0.0 || x1 < 1.0 {
            return Err(Error::Descriptor(
                "piecewise-cubic knots must cover [0, 1]".into(),
            ));
        }
        let xs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let ys: Vec<f64> = knots.iter().map(|k| k.1).collect();
        let n = xs.len();

        // Tridiagonal system for interior second derivatives (Thomas algorithm).
        let mut m = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let a = h0;
            let b = 2.0 * (h0 + h1);
            let c = h1;
            let d = 6.0 * ((ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0);
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(CubicSpline { xs, ys, m })
    }

    fn segment(&self, x: f64) -> usize {
        let n = self.xs.len();
        match self.xs.partition_point(|&k| k <= x) {
            0 => 0,
            i if i >= n => n - 2,
            i => i - 1,
        }
    }

    fn value(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        a * self.ys[i]
            + b * self.ys[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = (self.xs[i + 1] - x) / h;
        let b = (x - self.xs[i]) / h;
        (self.ys[i + 1] - self.ys[i]) / h
            + ((1.0 - 3.0 * a * a) * self.m[i] + (3.0 * b * b - 1.0) * self.m[i + 1]) * h / 6.0
    }

    /// Stationary points of the spline inside `[0, 1]`.
    fn critical_points(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for i in 0..self.xs.len() - 1 {
            let (lo, hi) = (self.xs[i].max(0.0), self.xs[i + 1].min(1.0));
            if lo >= hi {
                continue;
            }
            // Derivative is quadratic in b on the segment: q2 b^2 + q1 b + q0.
            let h = self.xs[i + 1] - self.xs[i];
            let (mi, mj) = (self.m[i], self.m[i + 1]);
            let slope = (self.ys[i + 1] - self.ys[i]) / h;
            // a = 1 - b
            let q2 = (mj - mi) * h / 2.0;
            let q1 = mi * h;
            let q0 = slope - mi * h / 3.0 - mj * h / 6.0;
            let mut roots = Vec::new();
            if q2.abs() < 1e-300 {
                if q1 != 0.0 {
                    roots.push(-q0 / q1);
                }
            } else {
                let disc = q1 * q1 - 4.0 * q2 * q0;
                if disc >= 0.0 {
                    let sq = disc.sqrt();
                    roots.push((-q1 + sq) / (2.0 * q2));
                    roots.push((-q1 - sq) / (2.0 * q2));
                }
            }
            for b in roots {
                let x = self.xs[i] + b * h;
                if x > lo && x < hi {
                    out.push(x);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Constant(f64),
    Affine { intercept: f64, slope: f64 },
    Sine { center: f64, amplitude: f64, frequency: f64, phase: f64 },
    Spline(CubicSpline),
}

impl Shape {
    fn from_descriptor(desc: &FunctionDescriptor) -> Result<Self> {
        let p = &desc.params;
        let need = |n: usize| -> Result<()> {
            if p.len() < n {
                Err(Error::Descriptor(format!(
                    "family `{}` needs at least {n} parameter(s), got {}",
                    desc.family.name(),
                    p.len()
                )))
            } else {
                Ok(())
            }
        };
        if p.iter().any(|x| !x.is_finite()) {
            return Err(Error::Descriptor("non-finite parameter".into()));
        }
        let shape = match desc.family {
            FamilyKind::Constant => {
                need(1)?;
                Shape::Constant(p[0])
            }
            FamilyKind::Affine => {
                need(2)?;
                Shape::Affine { intercept: p[0], slope: p[1] }
            }
            FamilyKind::Sine => {
                need(2)?;
                Shape::Sine {
                    center: p[0],
                    amplitude: p[1],
                    frequency: p.get(2).copied().unwrap_or(1.0),
                    phase: p.get(3).copied().unwrap_or(0.0),
                }
            }
            FamilyKind::PiecewiseCubic => Shape::Spline(CubicSpline::new(&desc.knots)?),
        };
        Ok(shape)
    }

    /// Value on `[0, 1]`; callers clamp the argument.
    fn value(&self, s: f64) -> f64 {
        match self {
            Shape::Constant(c) => *c,
            Shape::Affine { intercept, slope } => intercept + slope * s,
            Shape::Sine { center, amplitude, frequency, phase } => {
                center + amplitude * (2.0 * PI * frequency * s + phase).sin()
            }
            Shape::Spline(sp) => sp.value(s),
        }
    }

    fn derivative(&self, s: f64) -> f64 {
        match self {
            Shape::Constant(_) => 0.0,
            Shape::Affine { slope, .. } => *slope,
            Shape::Sine { amplitude, frequency, phase, .. } => {
                let w = 2.0 * PI * frequency;
                amplitude * w * (w * s + phase).cos()
            }
            Shape::Spline(sp) => sp.derivative(s),
        }
    }

    /// Exact (min, max) over `[0, 1]`: endpoints, stationary points, and a dense grid.
    fn range(&self) -> (f64, f64) {
        let mut candidates = vec![0.0, 1.0];
        match self {
            Shape::Sine { frequency, phase, .. } if *frequency != 0.0 => {
                // 2 pi f s + phase = pi/2 + n pi
                let w = 2.0 * PI * frequency;
                let (t0, t1) = {
                    let a = *phase;
                    let b = w + phase;
                    (a.min(b), a.max(b))
                };
                let n_lo = ((t0 - PI / 2.0) / PI).floor() as i64;
                let n_hi = ((t1 - PI / 2.0) / PI).ceil() as i64;
                for n in n_lo..=n_hi {
                    let s = (PI / 2.0 + n as f64 * PI - phase) / w;
                    if (0.0..=1.0).contains(&s) {
                        candidates.push(s);
                    }
                }
            }
            Shape::Spline(sp) => candidates.extend(sp.critical_points()),
            _ => {}
        }
        candidates.extend((0..=RANGE_GRID).map(|i| i as f64 / RANGE_GRID as f64));
        candidates
            .into_iter()
            .map(|s| self.value(s))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }
}

/// The stability index function `alpha(.)` with its bounds and Hölder metadata.
#[derive(Debug, Clone)]
pub struct AlphaFunction {
    shape: Shape,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub holder_exponent: f64,
    pub descriptor: FunctionDescriptor,
}

impl AlphaFunction {
    /// Value at `s`; arguments outside `[0, 1]` take the nearest boundary value.
    #[inline]
    pub fn value(&self, s: f64) -> f64 {
        self.shape.value(s.clamp(0.0, 1.0))
    }

    /// Derivative on `[0, 1]` (zero outside, matching the constant extension).
    pub fn derivative(&self, s: f64) -> f64 {
        if (0.0..=1.0).contains(&s) {
            self.shape.derivative(s)
        } else {
            0.0
        }
    }

    pub fn is_constant(&self) -> bool {
        self.alpha_min == self.alpha_max
    }
}

/// Builds an [`AlphaFunction`], enforcing `1 < alpha_min <= alpha(s) <= alpha_max < 2`.
pub fn build_alpha(desc: &FunctionDescriptor) -> Result<AlphaFunction> {
    let shape = Shape::from_descriptor(desc)?;
    let (lo, hi) = shape.range();
    let (alpha_min, alpha_max) = match desc.declared_range {
        Some((dlo, dhi)) => {
            if !(dlo <= dhi) {
                return Err(Error::Descriptor(format!(
                    "declared range [{dlo}, {dhi}] is empty"
                )));
            }
            if lo < dlo || hi > dhi {
                return Err(Error::Descriptor(format!(
                    "alpha range [{lo}, {hi}] leaves the declared range [{dlo}, {dhi}]"
                )));
            }
            (dlo, dhi)
        }
        None => (lo, hi),
    };
    if !(alpha_min > 1.0 && alpha_max < 2.0) {
        return Err(Error::Descriptor(format!(
            "alpha range [{alpha_min}, {alpha_max}] must lie in (1, 2)"
        )));
    }
    let holder_exponent = desc.holder_exponent.unwrap_or(DEFAULT_HOLDER_EXPONENT);
    if !(holder_exponent > 0.0 && holder_exponent < 1.0) {
        return Err(Error::Descriptor(format!(
            "holder exponent {holder_exponent} must lie in (0, 1)"
        )));
    }
    Ok(AlphaFunction {
        shape,
        alpha_min,
        alpha_max,
        holder_exponent,
        descriptor: desc.clone(),
    })
}

pub fn eval_alpha(f: &AlphaFunction, s: f64) -> f64 {
    f.value(s)
}

/// The Hurst function `H(.)` selecting the diagonal `v = H(t)` of the field.
#[derive(Debug, Clone)]
pub struct HurstFunction {
    shape: Shape,
    pub h_min: f64,
    pub h_max: f64,
    pub descriptor: FunctionDescriptor,
}

impl HurstFunction {
    pub fn value(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("H evaluated at t = {t} outside [0, 1]")));
        }
        Ok(self.shape.value(t))
    }

    pub fn is_constant(&self) -> bool {
        self.h_min == self.h_max
    }
}

/// Builds a [`HurstFunction`] whose range lies in `(1 / alpha_min, 1)`.
pub fn build_hurst(desc: &FunctionDescriptor, alpha: &AlphaFunction) -> Result<HurstFunction> {
    let shape = Shape::from_descriptor(desc)?;
    let (h_min, h_max) = shape.range();
    let floor = 1.0 / alpha.alpha_min;
    if !(h_min > floor && h_max < 1.0) {
        return Err(Error::Domain(format!(
            "H range [{h_min}, {h_max}] must lie in (1/alpha_min, 1) = ({floor}, 1)"
        )));
    }
    Ok(HurstFunction {
        shape,
        h_min,
        h_max,
        descriptor: desc.clone(),
    })
}

pub fn eval_hurst(h: &HurstFunction, t: f64) -> Result<f64> {
    h.value(t)
}
