//! Adaptive Gauss-Legendre quadrature and bracketed root finding.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

const MAX_ORDER: usize = 128;
/// Geometric pre-refinement toward singular endpoints (halvings).
const GRADING_LEVELS: u32 = 12;
const MAX_PANELS: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss-Legendre nodes per panel.
    pub order: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Maximum number of bisections of a panel.
    pub max_depth: u32,
    /// Points toward which panels are graded.
    pub singular_points: Vec<f64>,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            order: 16,
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_depth: 40,
            singular_points: Vec::new(),
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::Domain("quadrature tolerances must be positive".into()));
        }
        if self.order < 2 || self.order > MAX_ORDER {
            return Err(Error::Domain(format!(
                "quadrature order must lie in [2, {MAX_ORDER}], got {}",
                self.order
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::Domain("quadrature depth must be at least 1".into()));
        }
        Ok(())
    }
}

struct Rule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Rule {
    /// Nodes and weights on [-1, 1] by Newton iteration on P_n.
    fn new(n: usize) -> Rule {
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                if n == 1 {
                    p1 = x;
                    p0 = 1.0;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Rule { nodes, weights }
    }

    fn apply<F: Fn(f64) -> f64 + ?Sized>(&self, f: &F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(c + h * x);
        }
        acc * h
    }
}

fn rule(order: usize) -> &'static Rule {
    static RULES: [OnceLock<Rule>; MAX_ORDER + 1] = [const { OnceLock::new() }; MAX_ORDER + 1];
    RULES[order].get_or_init(|| Rule::new(order))
}

struct Panel {
    a: f64,
    b: f64,
    left: f64,
    right: f64,
    err: f64,
    depth: u32,
}

impl Panel {
    fn new<F: Fn(f64) -> f64 + ?Sized>(
        f: &F,
        r: &Rule,
        a: f64,
        b: f64,
        whole: Option<f64>,
        depth: u32,
    ) -> Panel {
        let whole = whole.unwrap_or_else(|| r.apply(f, a, b));
        let m = 0.5 * (a + b);
        let left = r.apply(f, a, m);
        let right = r.apply(f, m, b);
        Panel { a, b, left, right, err: (whole - (left + right)).abs(), depth }
    }

    fn value(&self) -> f64 {
        self.left + self.right
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Initial panels on `[a, b]`: geometric halving toward each singular end.
fn graded_panels(a: f64, b: f64, sing_a: bool, sing_b: bool, out: &mut Vec<(f64, f64, u32)>) {
    match (sing_a, sing_b) {
        (false, false) => out.push((a, b, 0)),
        (true, true) => {
            let m = 0.5 * (a + b);
            graded_panels(a, m, true, false, out);
            graded_panels(m, b, false, true, out);
        }
        (false, true) => {
            let hi = b;
            let mut lo = a;
            for level in 0..GRADING_LEVELS {
                let mid = 0.5 * (lo + hi);
                out.push((lo, mid, level));
                lo = mid;
            }
            out.push((lo, hi, GRADING_LEVELS));
        }
        (true, false) => {
            let lo = a;
            let mut hi = b;
            for level in 0..GRADING_LEVELS {
                let mid = 0.5 * (lo + hi);
                out.push((mid, hi, level));
                hi = mid;
            }
            out.push((lo, hi, GRADING_LEVELS));
        }
    }
}

/// Adaptive integral of `f` over `[c, d]` under `spec`.
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(f: &F, c: f64, d: f64, spec: &QuadratureSpec) -> Result<f64> {
    integrate_graded(f, c, d, spec, &spec.singular_points)
}

/// As [`integrate`], with extra singular points supplied per call.
pub fn integrate_graded<F: Fn(f64) -> f64 + ?Sized>(
    f: &F,
    c: f64,
    d: f64,
    spec: &QuadratureSpec,
    singular: &[f64],
) -> Result<f64> {
    if d == c {
        return Ok(0.0);
    }
    if d < c {
        return integrate_graded(f, d, c, spec, singular).map(|v| -v);
    }
    let r = rule(spec.order.clamp(2, MAX_ORDER));

    let mut cuts: Vec<f64> = singular.iter().copied().filter(|&p| p > c && p < d).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let is_singular = |x: f64| singular.iter().any(|&p| p == x) || cuts.contains(&x);

    let mut bounds = Vec::with_capacity(cuts.len() + 2);
    bounds.push(c);
    bounds.extend(cuts.iter().copied());
    bounds.push(d);

    let mut initial = Vec::new();
    for w in bounds.windows(2) {
        graded_panels(w[0], w[1], is_singular(w[0]), is_singular(w[1]), &mut initial);
    }

    let mut heap: BinaryHeap<Panel> = initial
        .into_iter()
        .map(|(a, b, depth)| Panel::new(f, r, a, b, None, depth))
        .collect();
    let mut frozen: Vec<Panel> = Vec::new();

    let totals = |heap: &BinaryHeap<Panel>, frozen: &[Panel]| {
        heap.iter().chain(frozen.iter()).fold((0.0, 0.0), |(v, e), p| (v + p.value(), e + p.err))
    };

    let (mut value, mut error) = totals(&heap, &frozen);
    let mut panels = heap.len();
    loop {
        if !value.is_finite() {
            return Err(Error::Accuracy { estimate: value, error });
        }
        if error <= spec.abs_tol.max(spec.rel_tol * value.abs()) {
            return Ok(value);
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::Accuracy { estimate: value, error });
        };
        if worst.depth >= spec.max_depth || panels >= MAX_PANELS {
            frozen.push(worst);
            continue;
        }
        let m = 0.5 * (worst.a + worst.b);
        let left = Panel::new(f, r, worst.a, m, Some(worst.left), worst.depth + 1);
        let right = Panel::new(f, r, m, worst.b, Some(worst.right), worst.depth + 1);
        value += left.value() + right.value() - worst.value();
        error += left.err + right.err - worst.err;
        heap.push(left);
        heap.push(right);
        panels += 1;
        // refresh running sums periodically to avoid drift
        if panels % 64 == 0 {
            (value, error) = totals(&heap, &frozen);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootSpec {
    pub lo: f64,
    pub hi: f64,
    /// Relative tolerance on the argument.
    pub tol: f64,
    pub max_iter: usize,
}

impl RootSpec {
    pub fn new(lo: f64, hi: f64) -> Self {
        RootSpec { lo, hi, tol: 1e-14, max_iter: 200 }
    }
}

/// Root of a strictly decreasing `g` with `g(lo) > 0 > g(hi)`.
///
/// Dekker iteration: secant steps kept inside the current bracket, with a
/// forced bisection whenever the bracket fails to halve over three steps.
pub fn solve_monotone_root<G: FnMut(f64) -> f64>(mut g: G, spec: &RootSpec) -> Result<f64> {
    if !(spec.lo < spec.hi) || !(spec.tol > 0.0) {
        return Err(Error::Domain(format!(
            "invalid root spec: bracket [{}, {}], tol {}",
            spec.lo, spec.hi, spec.tol
        )));
    }
    let (lo, hi) = (spec.lo, spec.hi);
    let (g_lo, g_hi) = (g(lo), g(hi));
    if g_lo == 0.0 {
        return Ok(lo);
    }
    if g_hi == 0.0 {
        return Ok(hi);
    }
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }

    // b: best iterate, c: contrapoint with opposite sign, a: previous b.
    let (mut a, mut fa) = (lo, g_lo);
    let (mut b, mut fb) = (hi, g_hi);
    let (mut c, mut fc) = (a, fa);
    let mut widths = [f64::INFINITY; 3];

    for iter in 0..spec.max_iter {
        if fc.abs() < fb.abs() {
            a = b;
            fa = fb;
            std::mem::swap(&mut b, &mut c);
            std::mem::swap(&mut fb, &mut fc);
        }
        let tol1 = spec.tol * b.abs().max(f64::MIN_POSITIVE);
        let m = 0.5 * (c - b);
        if m.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        let width = (c - b).abs();
        let stalled = width > 0.5 * widths[iter % 3] && iter >= 3;
        widths[iter % 3] = width;

        let mut s = if fb != fa && !stalled {
            b - fb * (b - a) / (fb - fa)
        } else {
            b + m
        };
        let within = if m > 0.0 { s > b && s < b + 2.0 * m } else { s < b && s > b + 2.0 * m };
        if !within || !s.is_finite() {
            s = b + m;
        }
        if (s - b).abs() < tol1 {
            s = b + tol1.copysign(m);
        }
        a = b;
        fa = fb;
        b = s;
        fb = g(b);
        if !fb.is_finite() {
            return Err(Error::Computation(format!("objective not finite at {b}")));
        }
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
        }
    }
    Err(Error::Iteration(spec.max_iter))
}
