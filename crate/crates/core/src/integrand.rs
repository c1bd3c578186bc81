//! Integrands of the multistable integral: the variable-order functional,
//! the quasi-norm it defines, the exact characteristic function, and the
//! right-hand sides of the tail and moment bounds.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{integrate_graded, solve_monotone_root, QuadratureSpec, RootSpec};
use crate::params::AlphaFunction;

/// Below this `L^1` mass a function is treated as the zero function.
pub const ZERO_FUNCTION_THRESHOLD: f64 = 1e-15;

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real function with bounded support `[c, d]`, plus the abscissae where it
/// jumps or has an unbounded derivative.
#[derive(Clone)]
pub struct Integrand {
    eval: Evaluator,
    support: (f64, f64),
    breakpoints: Vec<f64>,
    label: String,
}

impl fmt::Debug for Integrand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Integrand")
            .field("label", &self.label)
            .field("support", &self.support)
            .field("breakpoints", &self.breakpoints)
            .finish()
    }
}

impl Integrand {
    pub fn new<F>(f: F, support: (f64, f64), breakpoints: Vec<f64>, label: impl Into<String>) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        assert!(support.0 <= support.1, "support must be an ordered interval");
        let mut breakpoints: Vec<f64> = breakpoints
            .into_iter()
            .filter(|&b| b > support.0 && b < support.1)
            .collect();
        breakpoints.sort_by(f64::total_cmp);
        breakpoints.dedup();
        Integrand { eval: Arc::new(f), support, breakpoints, label: label.into() }
    }

    pub fn zero() -> Self {
        Integrand::new(|_| 0.0, (0.0, 0.0), Vec::new(), "0")
    }

    /// Indicator of `[c, d)`.
    pub fn indicator(c: f64, d: f64) -> Self {
        Integrand::new(
            move |s| if s >= c && s < d { 1.0 } else { 0.0 },
            (c, d),
            Vec::new(),
            format!("1[{c},{d})"),
        )
    }

    /// Step function: `value` on each half-open `[lo, hi)`; pieces must not overlap.
    pub fn step(pieces: Vec<(f64, f64, f64)>) -> Self {
        let c = pieces.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let d = pieces.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let breaks = pieces.iter().flat_map(|p| [p.0, p.1]).collect();
        let label = format!("step({} pieces)", pieces.len());
        let (c, d) = if pieces.is_empty() { (0.0, 0.0) } else { (c, d) };
        Integrand::new(
            move |s| {
                pieces
                    .iter()
                    .find(|(lo, hi, _)| s >= *lo && s < *hi)
                    .map_or(0.0, |p| p.2)
            },
            (c, d),
            breaks,
            label,
        )
    }

    /// The Haar function `h(2^j s - k)`, `h = 1[0,1/2) - 1[1/2,1)`.
    pub fn haar(j: u32, k: u64) -> Self {
        let width = (-(j as f64)).exp2();
        let lo = k as f64 * width;
        let mid = lo + 0.5 * width;
        let hi = lo + width;
        Integrand::new(
            move |s| {
                if s >= lo && s < mid {
                    1.0
                } else if s >= mid && s < hi {
                    -1.0
                } else {
                    0.0
                }
            },
            (lo, hi),
            vec![mid],
            format!("h(2^{j}s-{k})"),
        )
    }

    /// `s -> scale * f(s)`.
    pub fn scaled(&self, scale: f64) -> Self {
        let inner = self.eval.clone();
        Integrand {
            eval: Arc::new(move |s| scale * inner(s)),
            support: self.support,
            breakpoints: self.breakpoints.clone(),
            label: format!("{scale}*{}", self.label),
        }
    }

    /// Pointwise sum.
    pub fn sum(&self, other: &Integrand) -> Self {
        let (f, g) = (self.eval.clone(), other.eval.clone());
        let support = (self.support.0.min(other.support.0), self.support.1.max(other.support.1));
        let mut breaks = self.breakpoints.clone();
        breaks.extend(&other.breakpoints);
        breaks.extend([self.support.0, self.support.1, other.support.0, other.support.1]);
        Integrand::new(move |s| f(s) + g(s), support, breaks, format!("{}+{}", self.label, other.label))
    }

    #[inline]
    pub fn eval(&self, s: f64) -> f64 {
        if s < self.support.0 || s > self.support.1 {
            0.0
        } else {
            (self.eval)(s)
        }
    }

    pub fn support(&self) -> (f64, f64) {
        self.support
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `integral of g(s, f(s))` over the support, split at the breakpoints.
    pub fn integrate_map<G>(&self, g: G, spec: &QuadratureSpec) -> Result<f64>
    where
        G: Fn(f64, f64) -> f64,
    {
        let (c, d) = self.support;
        if d <= c {
            return Ok(0.0);
        }
        let mut knots = Vec::with_capacity(self.breakpoints.len() + 2);
        knots.push(c);
        knots.extend(&self.breakpoints);
        knots.push(d);
        let mut total = 0.0;
        for w in knots.windows(2) {
            let h = |s: f64| g(s, (self.eval)(s));
            total += integrate_graded(&h, w[0], w[1], spec, &knots)?;
        }
        Ok(total)
    }

    /// Classical `L^p` quasi-norm `(integral |f|^p)^(1/p)`.
    pub fn lp_norm(&self, p: f64, spec: &QuadratureSpec) -> Result<f64> {
        Ok(self.integrate_map(|_, v| v.abs().powf(p), spec)?.powf(1.0 / p))
    }

    /// Averages of `f` over the dyadic cells `[2^-J l, 2^-J (l+1))` of `[0, 1)`.
    pub fn cell_averages(&self, level: u32, spec: &QuadratureSpec) -> Result<Vec<f64>> {
        let n = 1usize << level;
        let width = (-(level as f64)).exp2();
        let (c, d) = self.support;
        (0..n)
            .map(|l| {
                let lo = (l as f64 * width).max(c);
                let hi = ((l + 1) as f64 * width).min(d);
                if hi <= lo {
                    return Ok(0.0);
                }
                let mut sing = self.breakpoints.clone();
                sing.extend([c, d]);
                let f = |s: f64| (self.eval)(s);
                Ok(integrate_graded(&f, lo, hi, spec, &sing)? / width)
            })
            .collect()
    }
}

/// Moment order `gamma` together with the computed bound shape and a fitted
/// placeholder constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundEstimate {
    pub gamma: f64,
    pub rhs_value: f64,
    pub fitted_constant: f64,
}

/// `integral of lambda^(-alpha(s)) |f(s)|^alpha(s) ds`.
pub fn variable_order_integral(
    f: &Integrand,
    alpha: &AlphaFunction,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let log_lambda = lambda.ln();
    f.integrate_map(
        |s, v| {
            let a = alpha.value(s);
            let m = v.abs();
            if m == 0.0 {
                0.0
            } else {
                (a * (m.ln() - log_lambda)).exp()
            }
        },
        spec,
    )
}

/// The quasi-norm: the unique `lambda > 0` at which the variable-order
/// integral equals one; zero for the zero function.
pub fn quasi_norm(f: &Integrand, alpha: &AlphaFunction, spec: &QuadratureSpec) -> Result<f64> {
    let l1 = f.integrate_map(|_, v| v.abs(), spec)?;
    if l1 < ZERO_FUNCTION_THRESHOLD {
        return Ok(0.0);
    }
    let envelope = f.lp_norm(alpha.alpha_min, spec)? + f.lp_norm(alpha.alpha_max, spec)? + 1e-30;

    // Work with x = ln(lambda): ln(integral) is convex, decreasing, with slope
    // in [-alpha_max, -alpha_min], so secant steps converge quickly.
    let objective = |x: f64| -> Result<f64> {
        Ok(variable_order_integral(f, alpha, x.exp(), spec)?.ln())
    };
    let mut lo = (envelope * 1e-6).ln();
    let mut hi = (envelope * 1e6).ln();
    let mut err = None;
    for _ in 0..20 {
        let (g_lo, g_hi) = (objective(lo)?, objective(hi)?);
        if g_lo > 0.0 && g_hi < 0.0 {
            break;
        }
        if !(g_lo > 0.0) {
            lo -= (1e6f64).ln();
        }
        if !(g_hi < 0.0) {
            hi += (1e6f64).ln();
        }
    }
    let root_spec = RootSpec { tol: 1e-15, ..RootSpec::new(lo, hi) };
    let x = solve_monotone_root(
        |x| match objective(x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                f64::NAN
            }
        },
        &root_spec,
    );
    if let Some(e) = err {
        return Err(e);
    }
    let x = x.map_err(|e| Error::Computation(format!("quasi-norm of {}: {e}", f.label())))?;
    Ok(x.exp())
}

/// `Phi(xi) = exp(-integral |xi f(s)|^alpha(s) ds)`.
pub fn characteristic_function(
    f: &Integrand,
    alpha: &AlphaFunction,
    xi: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if xi == 0.0 {
        return Ok(1.0);
    }
    Ok((-variable_order_integral(f, alpha, 1.0 / xi.abs(), spec)?).exp())
}

/// Shape of the tail bound, without its constant.
pub fn tail_bound_rhs(
    f: &Integrand,
    alpha: &AlphaFunction,
    lambda: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    variable_order_integral(f, alpha, lambda, spec)
}

/// `||f||_alpha^gamma` for `gamma` in `(0, alpha_min)`.
pub fn moment_bound_rhs(
    f: &Integrand,
    alpha: &AlphaFunction,
    gamma: f64,
    spec: &QuadratureSpec,
) -> Result<f64> {
    if !(gamma > 0.0 && gamma < alpha.alpha_min) {
        return Err(Error::Domain(format!(
            "moment order {gamma} must lie in (0, alpha_min) = (0, {})",
            alpha.alpha_min
        )));
    }
    Ok(quasi_norm(f, alpha, spec)?.powf(gamma))
}
