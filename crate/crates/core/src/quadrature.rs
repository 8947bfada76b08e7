//! Gauss-Legendre rules and composite integration with geometric grading
//! toward endpoint singularities.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::mesh::SpaceTimeElement;

pub const MAX_ORDER: usize = 64;

/// Gauss-Legendre rule on the reference interval `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    /// Builds the `order`-point rule by Newton iteration on `P_order`.
    pub fn new(order: usize) -> Result<Self> {
        if !(1..=MAX_ORDER).contains(&order) {
            return Err(Error::InvalidArgument(format!(
                "Gauss order must lie in 1..={MAX_ORDER}, got {order}"
            )));
        }
        let n = order;
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            // Tricomi initial guess for the i-th largest root
            let theta = PI * (i as f64 + 0.75) / (n as f64 + 0.5);
            let mut x = theta.cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            weights[i] = w;
            nodes[n - 1 - i] = x;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Ok(Self { nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Plain rule mapped to `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            sum += w * f(mid + half * x);
        }
        sum * half
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, w * half))
    }
}

pub fn gauss_rule(order: usize) -> Result<GaussRule> {
    GaussRule::new(order)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let (p, pm1) = if n == 0 { (1.0, 0.0) } else { (p1, p0) };
    let d = n as f64 * (x * p - pm1) / (x * x - 1.0);
    (p, d)
}

/// Quadrature settings shared by assembly, data and indicators.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    pub order: usize,
    pub grading_levels: usize,
    pub grading_ratio: f64,
    pub indicator_order: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            order: 16,
            grading_levels: 10,
            grading_ratio: 0.15,
            indicator_order: 16,
        }
    }
}

impl QuadConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, o) in [("order", self.order), ("indicator_order", self.indicator_order)] {
            if !(1..=MAX_ORDER).contains(&o) {
                return Err(Error::InvalidArgument(format!("quad.{name} = {o} out of range")));
            }
        }
        if !(self.grading_ratio > 0.0 && self.grading_ratio < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "quad.grading_ratio = {} must lie in (0, 1)",
                self.grading_ratio
            )));
        }
        Ok(())
    }
}

/// A point where the integrand is not smooth. `singular` requests grading.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub at: f64,
    pub singular: bool,
}

impl Breakpoint {
    pub fn kink(at: f64) -> Self {
        Self { at, singular: false }
    }

    pub fn singular(at: f64) -> Self {
        Self { at, singular: true }
    }
}

/// Composite Gauss integrator with geometric grading.
#[derive(Debug, Clone)]
pub struct Integrator {
    rule: GaussRule,
    levels: usize,
    ratio: f64,
}

impl Integrator {
    pub fn new(order: usize, levels: usize, ratio: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidArgument(format!("grading ratio {ratio} not in (0, 1)")));
        }
        Ok(Self {
            rule: GaussRule::new(order)?,
            levels,
            ratio,
        })
    }

    pub fn from_config(cfg: &QuadConfig) -> Result<Self> {
        Self::new(cfg.order, cfg.grading_levels, cfg.grading_ratio)
    }

    pub fn rule(&self) -> &GaussRule {
        &self.rule
    }

    /// Integrates `f` over `[a, b]`, splitting at the breakpoints that fall
    /// strictly inside and grading toward every singular breakpoint (also
    /// when it coincides with `a` or `b`).
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, breakpoints: &[Breakpoint]) -> f64 {
        if !(b > a) {
            return 0.0;
        }
        let mut cuts: Vec<Breakpoint> = breakpoints
            .iter()
            .copied()
            .filter(|p| p.at >= a && p.at <= b && p.at.is_finite())
            .collect();
        cuts.sort_by(|p, q| p.at.total_cmp(&q.at));
        let is_singular = |at: f64| cuts.iter().any(|p| p.singular && p.at == at);
        let mut points = vec![a];
        points.extend(cuts.iter().map(|p| p.at).filter(|&x| x > a && x < b));
        points.push(b);
        points.dedup();

        let mut sum = 0.0;
        for w in points.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !(hi > lo) {
                continue;
            }
            sum += match (is_singular(lo), is_singular(hi)) {
                (false, false) => self.rule.integrate(lo, hi, &mut f),
                (true, false) => self.graded(&mut f, lo, hi - lo),
                (false, true) => self.graded(&mut f, hi, lo - hi),
                (true, true) => {
                    let mid = lo + 0.5 * (hi - lo);
                    self.graded(&mut f, lo, mid - lo) + self.graded(&mut f, hi, mid - hi)
                }
            };
        }
        sum
    }

    /// Integral over the interval between `origin` and `origin + len` (len may
    /// be negative) with geometric subintervals shrinking toward `origin`.
    /// The innermost piece uses the substitution `s = u^2`, which removes
    /// inverse square-root endpoint behavior.
    fn graded<F: FnMut(f64) -> f64>(&self, f: &mut F, origin: f64, len: f64) -> f64 {
        let sign = len.signum();
        let full = len.abs();
        // Points that round onto the singularity itself carry a negligible
        // share of the integral and are dropped.
        let at_offset = |f: &mut F, s: f64| {
            let y = origin + sign * s;
            if y == origin {
                0.0
            } else {
                f(y)
            }
        };
        let mut sum = 0.0;
        // Keep the innermost piece resolvable next to `origin` in floating point.
        let floor = 1e-10 * origin.abs();
        let mut outer = full;
        for _ in 0..self.levels {
            let inner = outer * self.ratio;
            if inner < floor {
                break;
            }
            sum += self.rule.integrate(inner, outer, |s| at_offset(f, s));
            outer = inner;
        }
        let delta = outer;
        sum += self
            .rule
            .integrate(0.0, 1.0, |u| 2.0 * delta * u * at_offset(f, delta * u * u));
        sum
    }
}

/// Free-function form of [`Integrator::integrate`] with explicit settings.
pub fn integrate_segment_with_breakpoints<F: FnMut(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[Breakpoint],
    cfg: &QuadConfig,
) -> Result<f64> {
    Ok(Integrator::from_config(cfg)?.integrate(f, a, b, breakpoints))
}

/// Tensor Gauss rule of orders `(order_t, order_x)` on the element.
pub fn integrate_cell<F: FnMut(f64, f64) -> f64>(
    mut f: F,
    element: &SpaceTimeElement,
    order_t: usize,
    order_x: usize,
) -> Result<f64> {
    let rt = GaussRule::new(order_t)?;
    let rx = GaussRule::new(order_x)?;
    let mut sum = 0.0;
    for (t, wt) in rt.mapped(element.t_lo, element.t_hi) {
        for (x, wx) in rx.mapped(element.x_lo, element.x_hi) {
            sum += wt * wx * f(t, x);
        }
    }
    Ok(sum)
}
