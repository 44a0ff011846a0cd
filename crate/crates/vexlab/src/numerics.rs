//! Periodic grids, quadrature and differentiation on the torus T = [-pi, pi].
//!
//! The uniform periodic trapezoid rule is spectrally accurate for smooth
//! integrands; declared singular points switch integration to composite
//! Gauss-Legendre panels geometrically graded toward each singularity, so
//! integrable singularities (cusps and negative powers) are resolved without
//! ever evaluating at the singular point itself.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::trigpoly::{Cplx, TrigPolynomial};
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

/// Wrap a real number into [-pi, pi).
pub fn wrap_to_torus(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI);
    y - PI
}

/// A closed subinterval of the real line, usually inside T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub a: f64,
    pub b: f64,
}

impl Interval {
    pub fn new(a: f64, b: f64) -> Interval {
        assert!(b >= a, "interval endpoints out of order");
        Interval { a, b }
    }

    pub const TORUS: Interval = Interval { a: -PI, b: PI };

    pub fn length(&self) -> f64 {
        self.b - self.a
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.a && x <= self.b
    }

    pub fn is_full_torus(&self) -> bool {
        (self.a - -PI).abs() < 1e-14 && (self.b - PI).abs() < 1e-14
    }
}

/// Quadrature rule selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadRule {
    /// Composite trapezoid on a uniform grid; periodic wrap on the full torus.
    Trapezoid,
    /// Composite Gauss-Legendre panels (used automatically near singularities).
    GaussLegendre,
}

#[derive(Debug, Clone)]
pub struct QuadratureConfig {
    pub rule: QuadRule,
    /// Initial panel count; grids double on refinement. Power of two.
    pub panels: usize,
    pub rel_tol: f64,
    pub max_refinements: usize,
    /// Must be set when the integrand has declared singular points inside B.
    pub split_singular: bool,
    /// Geometric grading depth toward each singular point.
    pub grading_levels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rule: QuadRule::Trapezoid,
            panels: 64,
            rel_tol: 1e-10,
            max_refinements: 14,
            split_singular: true,
            grading_levels: 60,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.panels < 8 {
            return Err(Error::Config("quadrature panel count must be >= 8".into()));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            return Err(Error::Config(
                "quadrature tolerance must lie in (0, 1e-2]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    /// Relative difference between the last two refinements.
    pub achieved_rel: f64,
    pub refinements: usize,
}

/// Neumaier compensated summation; keeps panel sums deterministic and
/// independent of panel evaluation order.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

// ---------------------------------------------------------------------------
// Gauss-Legendre nodes
// ---------------------------------------------------------------------------

const GL_ORDER: usize = 12;

/// Gauss-Legendre nodes and weights on [-1, 1], computed once by Newton
/// iteration on the Legendre polynomial.
fn gl_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n {
            // Chebyshev-based initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                // Legendre P_n(x) and P_n'(x) by recurrence
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
        }
        (nodes, weights)
    })
}

/// A concrete set of quadrature nodes with weights over some interval.
#[derive(Debug, Clone, Default)]
pub struct NodeSet {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl NodeSet {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push_gl_panel(&mut self, a: f64, b: f64) {
        let (xs, ws) = gl_rule();
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        for (x, w) in xs.iter().zip(ws) {
            self.nodes.push(mid + half * x);
            self.weights.push(half * w);
        }
    }

    /// Uniform periodic trapezoid nodes for the full torus.
    fn torus_trapezoid(n: usize) -> NodeSet {
        let h = 2.0 * PI / n as f64;
        let mut set = NodeSet::default();
        for j in 0..n {
            set.nodes.push(-PI + h * j as f64);
            set.weights.push(h);
        }
        set
    }

    /// Trapezoid nodes on a subinterval (endpoint weights halved).
    fn interval_trapezoid(iv: Interval, n: usize) -> NodeSet {
        let h = iv.length() / n as f64;
        let mut set = NodeSet::default();
        for j in 0..=n {
            set.nodes.push(iv.a + h * j as f64);
            let w = if j == 0 || j == n { h / 2.0 } else { h };
            set.weights.push(w);
        }
        set
    }

    /// Composite GL panels over `iv`, geometrically graded toward any
    /// singular endpoint. `panels` smooth panels plus `grading` graded ones
    /// per singular end.
    fn graded_gl(iv: Interval, panels: usize, grading: usize, sing_left: bool, sing_right: bool) -> NodeSet {
        let mut set = NodeSet::default();
        let len = iv.length();
        if len <= 0.0 {
            return set;
        }
        // fractions of the interval reserved for grading at each end
        let frac = 0.25f64;
        let left_stop = if sing_left { iv.a + frac * len } else { iv.a };
        let right_start = if sing_right { iv.b - frac * len } else { iv.b };
        if sing_left {
            let mut hi = left_stop;
            for _ in 0..grading {
                let lo = iv.a + (hi - iv.a) / 2.0;
                set.push_gl_panel(lo, hi);
                hi = lo;
            }
        }
        if right_start > left_stop {
            let m = panels.max(1);
            let h = (right_start - left_stop) / m as f64;
            for j in 0..m {
                set.push_gl_panel(left_stop + h * j as f64, left_stop + h * (j + 1) as f64);
            }
        }
        if sing_right {
            let mut lo = right_start;
            for _ in 0..grading {
                let hi = iv.b - (iv.b - lo) / 2.0;
                set.push_gl_panel(lo, hi);
                lo = hi;
            }
        }
        set
    }

    /// Nodes for integrating over `iv` an integrand with the given singular
    /// points. With no singular points: trapezoid (periodic form on the full
    /// torus). Otherwise GL panels split at every singularity.
    pub fn for_interval(iv: Interval, resolution: usize, singular: &[f64], grading: usize) -> NodeSet {
        let mut cuts: Vec<f64> = singular
            .iter()
            .copied()
            .filter(|s| *s > iv.a + 1e-300 && *s < iv.b)
            .collect();
        let boundary_sing = |x: f64| singular.iter().any(|s| (s - x).abs() < 1e-13);
        if cuts.is_empty() && !boundary_sing(iv.a) && !boundary_sing(iv.b) {
            return if iv.is_full_torus() {
                NodeSet::torus_trapezoid(resolution)
            } else {
                NodeSet::interval_trapezoid(iv, resolution)
            };
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        let mut edges = vec![iv.a];
        edges.extend(cuts.iter().copied());
        edges.push(iv.b);
        let per = (resolution / edges.len().max(1)).max(4);
        let mut set = NodeSet::default();
        for w in edges.windows(2) {
            let sub = Interval::new(w[0], w[1]);
            let sl = boundary_sing(sub.a);
            let sr = boundary_sing(sub.b);
            let sub_set = NodeSet::graded_gl(sub, per, grading, sl, sr);
            set.nodes.extend(sub_set.nodes);
            set.weights.extend(sub_set.weights);
        }
        set
    }
}

/// Integrate a raw callable over `iv` with refinement until two successive
/// grids agree to the configured relative tolerance.
pub fn integrate_fn<F>(f: F, iv: Interval, quad: &QuadratureConfig, singular: &[f64]) -> Result<QuadResult>
where
    F: Fn(f64) -> Result<f64>,
{
    quad.validate()?;
    let scale_floor = 1e-300;
    let mut resolution = quad.panels;
    let mut prev: Option<f64> = None;
    for refinement in 0..=quad.max_refinements {
        let set = NodeSet::for_interval(iv, resolution, singular, quad.grading_levels);
        let mut acc = CompensatedSum::default();
        for (x, w) in set.nodes.iter().zip(&set.weights) {
            acc.add(w * f(*x)?);
        }
        let value = acc.value();
        if let Some(p) = prev {
            let rel = (value - p).abs() / value.abs().max(scale_floor).max(1e-14);
            if rel <= quad.rel_tol {
                return Ok(QuadResult {
                    value,
                    achieved_rel: rel,
                    refinements: refinement,
                });
            }
            if refinement == quad.max_refinements {
                return Err(Error::QuadratureNonConvergence {
                    last: value,
                    previous: p,
                    target: quad.rel_tol,
                });
            }
        }
        prev = Some(value);
        resolution *= 2;
    }
    unreachable!()
}

// ---------------------------------------------------------------------------
// Periodic functions
// ---------------------------------------------------------------------------

/// Smoothness annotation driving operator dispatch: smooth sources may be
/// projected onto trigonometric polynomials and differentiated spectrally;
/// singular sources keep their quadrature split points.
#[derive(Debug, Clone, PartialEq)]
pub enum Smoothness {
    Smooth,
    Piecewise(Vec<f64>),
    Singular(Vec<f64>),
}

impl Smoothness {
    pub fn singular_points(&self) -> &[f64] {
        match self {
            Smoothness::Smooth => &[],
            Smoothness::Piecewise(p) | Smoothness::Singular(p) => p,
        }
    }
}

#[derive(Debug, Clone)]
enum Source {
    Expr(Arc<Expr>),
    Trig(Arc<TrigPolynomial>),
    /// Uniform samples on x_j = -pi + 2 pi j / N; N a power of two >= 16.
    Samples(Arc<Vec<f64>>),
    /// Right-continuous step function: value `values[i]` on
    /// [breaks[i], breaks[i+1]); `breaks` spans [-pi, pi].
    PiecewiseConst {
        breaks: Arc<Vec<f64>>,
        values: Arc<Vec<f64>>,
    },
}

/// A 2 pi-periodic real function: the common currency between every module.
#[derive(Debug, Clone)]
pub struct PeriodicFunction {
    source: Source,
    smoothness: Smoothness,
    exact_derivative: Option<Arc<PeriodicFunction>>,
    trig_cache: Arc<OnceLock<Arc<TrigPolynomial>>>,
}

impl PeriodicFunction {
    fn with_source(source: Source, smoothness: Smoothness) -> PeriodicFunction {
        PeriodicFunction {
            source,
            smoothness,
            exact_derivative: None,
            trig_cache: Arc::new(OnceLock::new()),
        }
    }

    pub fn from_expr(expr: Expr, smoothness: Smoothness) -> PeriodicFunction {
        PeriodicFunction::with_source(Source::Expr(Arc::new(expr)), smoothness)
    }

    pub fn parse(text: &str) -> Result<PeriodicFunction> {
        Ok(PeriodicFunction::from_expr(Expr::parse(text)?, Smoothness::Smooth))
    }

    pub fn parse_singular(text: &str, singular: Vec<f64>) -> Result<PeriodicFunction> {
        Ok(PeriodicFunction::from_expr(
            Expr::parse(text)?,
            Smoothness::Singular(singular),
        ))
    }

    pub fn from_trig(poly: TrigPolynomial) -> PeriodicFunction {
        PeriodicFunction::with_source(Source::Trig(Arc::new(poly)), Smoothness::Smooth)
    }

    pub fn constant(c: f64) -> PeriodicFunction {
        PeriodicFunction::from_trig(TrigPolynomial::constant(c))
    }

    pub fn from_samples(values: Vec<f64>, smoothness: Smoothness) -> Result<PeriodicFunction> {
        let n = values.len();
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::Config(
                "sample vectors must have power-of-two length >= 16".into(),
            ));
        }
        Ok(PeriodicFunction::with_source(
            Source::Samples(Arc::new(values)),
            smoothness,
        ))
    }

    pub fn piecewise_const(breaks: Vec<f64>, values: Vec<f64>) -> Result<PeriodicFunction> {
        if breaks.len() != values.len() + 1 {
            return Err(Error::Config(
                "piecewise-constant function needs exactly one more break than values".into(),
            ));
        }
        let interior: Vec<f64> = breaks.clone();
        Ok(PeriodicFunction::with_source(
            Source::PiecewiseConst {
                breaks: Arc::new(breaks),
                values: Arc::new(values),
            },
            Smoothness::Piecewise(interior),
        ))
    }

    /// Attach an exact derivative (chains recursively for higher orders).
    pub fn with_exact_derivative(mut self, d: PeriodicFunction) -> PeriodicFunction {
        self.exact_derivative = Some(Arc::new(d));
        self
    }

    pub fn smoothness(&self) -> &Smoothness {
        &self.smoothness
    }

    pub fn singular_points(&self) -> &[f64] {
        self.smoothness.singular_points()
    }

    pub fn is_trig(&self) -> bool {
        matches!(self.source, Source::Trig(_))
    }

    pub fn as_trig(&self) -> Option<&TrigPolynomial> {
        match &self.source {
            Source::Trig(p) => Some(p),
            _ => None,
        }
    }

    /// Evaluate at any real x (wrapped into the torus).
    pub fn eval(&self, x: f64) -> Result<f64> {
        let x = wrap_to_torus(x);
        match &self.source {
            Source::Expr(e) => e.eval(x),
            Source::Trig(p) => Ok(p.eval(x)),
            Source::Samples(v) => {
                let n = v.len();
                let h = 2.0 * PI / n as f64;
                let t = (x + PI) / h;
                let j = (t.floor() as usize).min(n - 1);
                let frac = t - j as f64;
                let next = v[(j + 1) % n];
                Ok(v[j] * (1.0 - frac) + next * frac)
            }
            Source::PiecewiseConst { breaks, values } => {
                let idx = match breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
                    Ok(i) => i.min(values.len() - 1),
                    Err(i) => i.saturating_sub(1).min(values.len() - 1),
                };
                Ok(values[idx])
            }
        }
    }

    /// Evaluate on many points, failing on the first domain error.
    pub fn eval_many(&self, xs: &[f64]) -> Result<Vec<f64>> {
        xs.iter().map(|&x| self.eval(x)).collect()
    }

    /// Project onto a trigonometric polynomial via the discrete Fourier
    /// transform of uniform samples, doubling the grid until the coefficient
    /// tail is negligible. Only meaningful for smooth sources.
    pub fn to_trig(&self) -> Result<Arc<TrigPolynomial>> {
        if let Source::Trig(p) = &self.source {
            return Ok(p.clone());
        }
        if !matches!(self.smoothness, Smoothness::Smooth) {
            return Err(Error::Capability(
                "trigonometric projection requires a smooth-tagged function".into(),
            ));
        }
        if let Some(p) = self.trig_cache.get() {
            return Ok(p.clone());
        }
        let poly = match &self.source {
            Source::Samples(v) => dft_project(v),
            Source::Expr(_) => {
                let mut n = 256usize;
                loop {
                    let xs: Vec<f64> = (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect();
                    let vals = self.eval_many(&xs)?;
                    let poly = dft_project(&vals);
                    let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
                    let deg = poly.degree_storage();
                    let tail = (deg * 3 / 4..=deg)
                        .map(|k| poly.complex_coeff(k).abs())
                        .fold(0.0f64, f64::max);
                    if tail < 1e-11 * scale || n >= 8192 {
                        break poly;
                    }
                    n *= 2;
                }
            }
            Source::PiecewiseConst { .. } => unreachable!("piecewise sources are not smooth"),
            Source::Trig(_) => unreachable!(),
        };
        let arc = Arc::new(poly);
        let _ = self.trig_cache.set(arc.clone());
        Ok(self.trig_cache.get().unwrap().clone())
    }

    /// r-th derivative. Preference order: exact coefficient derivative for
    /// trig polynomials, an attached exact-derivative chain, then spectral
    /// differentiation of smooth sources. Singular functions are rejected.
    pub fn differentiate(&self, r: usize) -> Result<PeriodicFunction> {
        if r == 0 {
            return Ok(self.clone());
        }
        if let Source::Trig(p) = &self.source {
            return Ok(PeriodicFunction::from_trig(p.derivative_n(r)));
        }
        if let Some(d) = &self.exact_derivative {
            return d.differentiate(r - 1);
        }
        match self.smoothness {
            Smoothness::Smooth => {
                let p = self.to_trig()?;
                Ok(PeriodicFunction::from_trig(p.derivative_n(r)))
            }
            _ => Err(Error::Capability(
                "cannot differentiate a non-smooth function without an exact derivative".into(),
            )),
        }
    }
}

/// DFT of uniform samples on x_j = -pi + 2 pi j / N into a real trig
/// polynomial of degree N/2 - 1. Direct O(N^2); projection happens once per
/// function and is cached.
pub fn dft_project(values: &[f64]) -> TrigPolynomial {
    let n = values.len();
    let kmax = n / 2 - 1;
    let mut coeffs = Vec::with_capacity(kmax + 1);
    let w = -2.0 * PI / n as f64;
    for k in 0..=kmax {
        let mut acc_re = CompensatedSum::default();
        let mut acc_im = CompensatedSum::default();
        // e^{-ik x_j} = (-1)^k e^{-2 pi i k j / N}
        let step = Cplx::cis(w * k as f64);
        let mut rot = Cplx::ONE;
        for &v in values {
            acc_re.add(v * rot.re);
            acc_im.add(v * rot.im);
            rot = rot.mul(step);
        }
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        coeffs.push(Cplx::new(acc_re.value(), acc_im.value()).scale(sign / n as f64));
    }
    TrigPolynomial::from_complex(&coeffs)
}

/// Integrate a periodic function over B. Singular points inside B require the
/// splitting flag; the rule then switches to graded Gauss-Legendre panels.
pub fn integrate(f: &PeriodicFunction, iv: Interval, quad: &QuadratureConfig) -> Result<QuadResult> {
    let sing = f.singular_points();
    let inside: Vec<f64> = sing
        .iter()
        .copied()
        .filter(|s| iv.contains(*s))
        .collect();
    if !inside.is_empty() && !quad.split_singular {
        return Err(Error::Config(
            "integrand has singular points inside B but singular splitting is disabled".into(),
        ));
    }
    integrate_fn(|x| f.eval(x), iv, quad, sing)
}
