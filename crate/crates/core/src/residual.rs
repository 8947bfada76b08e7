//! Residual derivatives and the local error indicators.
//!
//! With `R = f - V psi_h`, the time derivative of the potential of one cell
//! is a corner combination of the kernel `F`, and its space derivative a
//! corner combination of `S`. Both kernels are differences of a term that
//! depends only on `x` and a term in `x - y`; the `x`-only parts cancel
//! between the two spatial corners of a cell. Accumulating the signed
//! coefficients per space-time corner therefore gives
//!
//! ```text
//! dR/dt = df/dt - (1 / 2 pi) sum_c w_c arcsin(clamp((x - y_c) / (t - tau_c)))
//! dR/dx = df/dx - sum_c w_c gcal(t, tau_c, |x - y_c|)
//! ```
//!
//! which is what [`element_indicators`] evaluates. [`residual_dt`] and
//! [`residual_dx`] keep the per-element four-term form with `F` and `S`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{cone_arcsin, gcal_unchecked, kernel_f, kernel_s};
use crate::linsolve::DiscreteSolution;
use crate::mesh::{ElementId, SpaceTimeElement, SpaceTimeMesh};
use crate::problems::DirichletDatum;
use crate::quadrature::GaussRule;

const INV_TWO_PI: f64 = 1.0 / (2.0 * PI);

/// Which indicator family steers marking and stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndicatorKind {
    /// `max(dt, dx) (|dR/dx|^2 + |dR/dt|^2)`.
    #[default]
    Theoretical,
    /// `dx |dR/dx|^2 + |dR/dt|^2`.
    Heuristic,
}

impl std::str::FromStr for IndicatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "theoretical" | "eta" => Ok(Self::Theoretical),
            "heuristic" | "eta_heur" => Ok(Self::Heuristic),
            _ => Err(Error::InvalidArgument(format!("unknown indicator kind '{s}'"))),
        }
    }
}

impl std::fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Theoretical => "theoretical",
            Self::Heuristic => "heuristic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementIndicator {
    pub id: ElementId,
    pub norm_dt_sq: f64,
    pub norm_dx_sq: f64,
    pub eta_sq: f64,
    pub eta_heur_sq: f64,
}

impl ElementIndicator {
    pub fn from_norms(element: &SpaceTimeElement, norm_dt_sq: f64, norm_dx_sq: f64) -> Self {
        let (dt, dx) = (element.dt(), element.dx());
        Self {
            id: element.id,
            norm_dt_sq,
            norm_dx_sq,
            eta_sq: dt.max(dx) * (norm_dx_sq + norm_dt_sq),
            eta_heur_sq: dx * norm_dx_sq + norm_dt_sq,
        }
    }

    pub fn value(&self, kind: IndicatorKind) -> f64 {
        match kind {
            IndicatorKind::Theoretical => self.eta_sq,
            IndicatorKind::Heuristic => self.eta_heur_sq,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorReport {
    entries: Vec<ElementIndicator>,
    eta_total: f64,
    eta_heur_total: f64,
    eta_max_sq: f64,
    eta_heur_max_sq: f64,
}

impl IndicatorReport {
    pub fn new(entries: Vec<ElementIndicator>) -> Self {
        let sum = |f: fn(&ElementIndicator) -> f64| entries.iter().map(f).sum::<f64>();
        let max = |f: fn(&ElementIndicator) -> f64| entries.iter().map(f).fold(0.0, f64::max);
        Self {
            eta_total: sum(|e| e.eta_sq),
            eta_heur_total: sum(|e| e.eta_heur_sq),
            eta_max_sq: max(|e| e.eta_sq),
            eta_heur_max_sq: max(|e| e.eta_heur_sq),
            entries,
        }
    }

    pub fn entries(&self) -> &[ElementIndicator] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eta_total(&self) -> f64 {
        self.eta_total
    }

    pub fn eta_heur_total(&self) -> f64 {
        self.eta_heur_total
    }

    pub fn eta_max_sq(&self) -> f64 {
        self.eta_max_sq
    }

    pub fn total(&self, kind: IndicatorKind) -> f64 {
        match kind {
            IndicatorKind::Theoretical => self.eta_total,
            IndicatorKind::Heuristic => self.eta_heur_total,
        }
    }

    pub fn max(&self, kind: IndicatorKind) -> f64 {
        match kind {
            IndicatorKind::Theoretical => self.eta_max_sq,
            IndicatorKind::Heuristic => self.eta_heur_max_sq,
        }
    }

    /// CSV with header `id,norm_dt_sq,norm_dx_sq,eta_sq,eta_heur_sq`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "id,norm_dt_sq,norm_dx_sq,eta_sq,eta_heur_sq")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{:.17e},{:.17e},{:.17e},{:.17e}",
                e.id, e.norm_dt_sq, e.norm_dx_sq, e.eta_sq, e.eta_heur_sq
            )?;
        }
        Ok(())
    }
}

/// `dR/dt` at `(t, x)` as the per-element sum of four `F` terms.
pub fn residual_dt(t: f64, x: f64, solution: &DiscreteSolution, datum: &DirichletDatum) -> f64 {
    let mut sum = 0.0;
    for (e, &a) in solution.mesh().elements().iter().zip(solution.coefficients()) {
        if a == 0.0 || e.t_lo >= t {
            continue;
        }
        sum += a
            * (kernel_f(t, e.t_hi, x, e.x_hi) - kernel_f(t, e.t_hi, x, e.x_lo) - kernel_f(t, e.t_lo, x, e.x_hi)
                + kernel_f(t, e.t_lo, x, e.x_lo));
    }
    datum.df_dt(t, x) + INV_TWO_PI * sum
}

/// `dR/dx` at `(t, x)` as the per-element sum of four `S` terms.
pub fn residual_dx(t: f64, x: f64, solution: &DiscreteSolution, datum: &DirichletDatum) -> f64 {
    let mut sum = 0.0;
    for (e, &a) in solution.mesh().elements().iter().zip(solution.coefficients()) {
        if a == 0.0 || e.t_lo >= t {
            continue;
        }
        sum += a
            * (kernel_s(t, e.t_hi, x, e.x_hi) - kernel_s(t, e.t_lo, x, e.x_hi) - kernel_s(t, e.t_hi, x, e.x_lo)
                + kernel_s(t, e.t_lo, x, e.x_lo));
    }
    datum.df_dx(t, x) + INV_TWO_PI * sum
}

/// Signed density coefficients accumulated on the space-time corners of the
/// mesh, sorted by corner time.
#[derive(Debug, Clone)]
pub struct CornerField {
    tau: Vec<f64>,
    y: Vec<f64>,
    w: Vec<f64>,
}

impl CornerField {
    pub fn new(solution: &DiscreteSolution) -> Self {
        let mut raw = Vec::with_capacity(4 * solution.coefficients().len());
        for (e, &a) in solution.mesh().elements().iter().zip(solution.coefficients()) {
            if a == 0.0 {
                continue;
            }
            raw.push((e.t_hi, e.x_hi, a));
            raw.push((e.t_hi, e.x_lo, -a));
            raw.push((e.t_lo, e.x_hi, -a));
            raw.push((e.t_lo, e.x_lo, a));
        }
        raw.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
        let mut field = Self {
            tau: Vec::new(),
            y: Vec::new(),
            w: Vec::new(),
        };
        for (tau, y, w) in raw {
            match (field.tau.last(), field.y.last()) {
                (Some(&lt), Some(&ly)) if lt == tau && ly == y => *field.w.last_mut().unwrap() += w,
                _ => {
                    field.tau.push(tau);
                    field.y.push(y);
                    field.w.push(w);
                }
            }
        }
        field
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    /// Number of corners with `tau < t`.
    fn causal_len(&self, t: f64) -> usize {
        self.tau.partition_point(|&tau| tau < t)
    }

    /// `(dV/dt, dV/dx)` of the discrete potential at `(t, x)`.
    pub fn potential_derivatives(&self, t: f64, x: f64) -> (f64, f64) {
        let mut dt = 0.0;
        let mut dx = 0.0;
        for c in 0..self.causal_len(t) {
            let lag = t - self.tau[c];
            let u = x - self.y[c];
            dt += self.w[c] * cone_arcsin(u, lag);
            dx += self.w[c] * gcal_unchecked(lag, u.abs());
        }
        (INV_TWO_PI * dt, dx)
    }
}

/// Squared `L2` norms of the two derivatives over each cell by tensor
/// Gauss quadrature, for an arbitrary derivative field.
pub fn indicators_from_field<F>(mesh: &SpaceTimeMesh, order: usize, field: F) -> Result<IndicatorReport>
where
    F: Fn(f64, f64) -> (f64, f64) + Sync,
{
    let rule = GaussRule::new(order)?;
    let entries = mesh
        .elements()
        .par_iter()
        .map(|e| {
            let (mut nt, mut nx) = (0.0, 0.0);
            for (t, wt) in rule.mapped(e.t_lo, e.t_hi) {
                for (x, wx) in rule.mapped(e.x_lo, e.x_hi) {
                    let (dt, dx) = field(t, x);
                    nt += wt * wx * dt * dt;
                    nx += wt * wx * dx * dx;
                }
            }
            ElementIndicator::from_norms(e, nt, nx)
        })
        .collect();
    Ok(IndicatorReport::new(entries))
}

fn check_inputs(mesh: &SpaceTimeMesh, solution: &DiscreteSolution, order: usize) -> Result<()> {
    if order == 0 {
        return Err(Error::InvalidArgument("indicator order must be at least 1".into()));
    }
    if mesh.len() != solution.mesh().len() || mesh.generation() != solution.mesh().generation() {
        return Err(Error::InvalidArgument("solution does not belong to this mesh".into()));
    }
    Ok(())
}

/// Per-element indicators of the residual of `solution`. Unrefined uniform
/// meshes use translation-invariant kernel tables; other meshes sum over
/// the corner field cell by cell.
pub fn element_indicators(
    mesh: &SpaceTimeMesh,
    solution: &DiscreteSolution,
    datum: &DirichletDatum,
    order: usize,
) -> Result<IndicatorReport> {
    check_inputs(mesh, solution, order)?;
    match mesh.uniform_shape() {
        Some((n_x, n_t)) => uniform_indicators(n_x, n_t, mesh, solution.coefficients(), datum, order),
        None => element_indicators_by_corners(mesh, solution, datum, order),
    }
}

/// `(arcsin(clamp(u / lag)), acosh(lag / |u|)_+)` sharing one square root
/// of the exact gap `lag - |u|`.
#[inline]
fn cone_pair(u: f64, lag: f64) -> (f64, f64) {
    let m = u.abs();
    let gap = lag - m;
    if gap <= 0.0 {
        return (FRAC_PI_2.copysign(u), 0.0);
    }
    let s = (gap * (lag + m)).sqrt();
    // acosh(lag / m) = ln((lag + s) / m) = ln_1p((gap + s) / m)
    (u.atan2(s), ((gap + s) / m.max(f64::MIN_POSITIVE)).ln_1p())
}

/// Mesh-agnostic indicator evaluation through the corner field.
pub fn element_indicators_by_corners(
    mesh: &SpaceTimeMesh,
    solution: &DiscreteSolution,
    datum: &DirichletDatum,
    order: usize,
) -> Result<IndicatorReport> {
    check_inputs(mesh, solution, order)?;
    let rule = GaussRule::new(order)?;
    let field = CornerField::new(solution);
    let q = order;
    let entries = mesh
        .elements()
        .par_iter()
        .map(|e| {
            let ts: Vec<(f64, f64)> = rule.mapped(e.t_lo, e.t_hi).collect();
            let xs: Vec<(f64, f64)> = rule.mapped(e.x_lo, e.x_hi).collect();
            let mut acc_p = vec![0.0; q * q];
            let mut acc_g = vec![0.0; q * q];
            // arcsine sum of corners whose cone misses the whole cell
            let mut saturated = 0.0;
            for c in 0..field.causal_len(e.t_hi) {
                let (tau, y, w) = (field.tau[c], field.y[c], field.w[c]);
                let reach = e.t_hi - tau;
                if tau <= e.t_lo && y <= e.x_lo - reach {
                    saturated += w;
                    continue;
                }
                if tau <= e.t_lo && y >= e.x_hi + reach {
                    saturated -= w;
                    continue;
                }
                for (a, &(t, _)) in ts.iter().enumerate() {
                    let lag = t - tau;
                    if lag <= 0.0 {
                        continue;
                    }
                    let row_p = &mut acc_p[a * q..(a + 1) * q];
                    let row_g = &mut acc_g[a * q..(a + 1) * q];
                    for (b, &(x, _)) in xs.iter().enumerate() {
                        let (p, g) = cone_pair(x - y, lag);
                        row_p[b] += w * p;
                        row_g[b] += w * g;
                    }
                }
            }
            let saturated = FRAC_PI_2 * saturated;
            let (mut nt, mut nx) = (0.0, 0.0);
            for (a, &(t, wt)) in ts.iter().enumerate() {
                for (b, &(x, wx)) in xs.iter().enumerate() {
                    let dt = datum.df_dt(t, x) - INV_TWO_PI * (acc_p[a * q + b] + saturated);
                    let dx = datum.df_dx(t, x) - INV_TWO_PI * acc_g[a * q + b];
                    nt += wt * wx * dt * dt;
                    nx += wt * wx * dx * dx;
                }
            }
            ElementIndicator::from_norms(e, nt, nx)
        })
        .collect();
    Ok(IndicatorReport::new(entries))
}

/// Indicators on the `n_x x n_t` uniform mesh. Node offsets repeat from cell
/// to cell, so `arcsin` and `gcal` are tabulated once per (time lag, panel
/// offset) pair and the corner sums become discrete convolutions. Offsets
/// outside the light cone contribute `+-pi/2` to the arcsine sum and zero
/// to the `gcal` sum; those ranges are handled with prefix sums.
fn uniform_indicators(
    n_x: usize,
    n_t: usize,
    mesh: &SpaceTimeMesh,
    alpha: &[f64],
    datum: &DirichletDatum,
    order: usize,
) -> Result<IndicatorReport> {
    let rule = GaussRule::new(order)?;
    let q = order;
    let qq = q * q;
    let h_t = mesh.final_time() / n_t as f64;
    let h_x = 1.0 / n_x as f64;
    // nodes and weights on [0, 1]
    let unit: Vec<(f64, f64)> = rule.mapped(0.0, 1.0).collect();

    // corner weights c[n][m] and their prefix sums along m
    let stride = n_x + 1;
    let mut corners = vec![0.0; (n_t + 1) * stride];
    for s in 0..n_t {
        for i in 0..n_x {
            let a = alpha[s * n_x + i];
            corners[(s + 1) * stride + i + 1] += a;
            corners[(s + 1) * stride + i] -= a;
            corners[s * stride + i + 1] -= a;
            corners[s * stride + i] += a;
        }
    }
    let mut prefix = vec![0.0; (n_t + 1) * (stride + 1)];
    for n in 0..=n_t {
        for m in 0..stride {
            prefix[n * (stride + 1) + m + 1] = prefix[n * (stride + 1) + m] + corners[n * stride + m];
        }
    }
    let range_sum = |n: usize, lo: usize, hi: usize| -> f64 {
        // sum of c[n][m] for lo <= m < hi
        if hi <= lo {
            0.0
        } else {
            prefix[n * (stride + 1) + hi] - prefix[n * (stride + 1) + lo]
        }
    };

    // half-width of the active offset window per time lag
    let window: Vec<isize> = (0..n_t)
        .map(|l| ((l as f64 + 1.0) * h_t / h_x).ceil() as isize + 1)
        .collect();

    // tables indexed [lag][j + n_x][a][b], j = p - m in [-n_x, n_x - 1]
    let offsets = 2 * n_x;
    let mut table_p = vec![0.0; n_t * offsets * qq];
    let mut table_g = vec![0.0; n_t * offsets * qq];
    table_p
        .par_chunks_mut(qq)
        .zip(table_g.par_chunks_mut(qq))
        .enumerate()
        .for_each(|(k, (bp, bg))| {
            let (l, jj) = (k / offsets, k % offsets);
            let j = jj as f64 - n_x as f64;
            for (a, &(xi, _)) in unit.iter().enumerate() {
                let lag = (l as f64 + xi) * h_t;
                for (b, &(zeta, _)) in unit.iter().enumerate() {
                    let u = (j + zeta) * h_x;
                    bp[a * q + b] = cone_arcsin(u, lag);
                    bg[a * q + b] = gcal_unchecked(lag, u.abs());
                }
            }
        });

    let entries: Vec<ElementIndicator> = (0..n_t * n_x)
        .into_par_iter()
        .map(|cell| {
            let (k, p) = (cell / n_x, cell % n_x);
            let mut acc_p = vec![0.0; qq];
            let mut acc_g = vec![0.0; qq];
            let mut saturated = 0.0;
            for n in 0..=k {
                let l = k - n;
                let s = window[l];
                let pi = p as isize;
                // m <= p - s: offset j >= s, arcsine saturated at +pi/2
                let lo_end = (pi - s + 1).clamp(0, stride as isize) as usize;
                // m >= p + s + 1: offset j <= -s - 1, saturated at -pi/2
                let hi_start = (pi + s + 1).clamp(0, stride as isize) as usize;
                saturated += FRAC_PI_2 * (range_sum(n, 0, lo_end) - range_sum(n, hi_start, stride));
                for m in lo_end..hi_start {
                    let c = corners[n * stride + m];
                    if c == 0.0 {
                        continue;
                    }
                    let jj = (pi - m as isize + n_x as isize) as usize;
                    let base = (l * offsets + jj) * qq;
                    let bp = &table_p[base..base + qq];
                    let bg = &table_g[base..base + qq];
                    for ((ap, ag), (vp, vg)) in acc_p.iter_mut().zip(acc_g.iter_mut()).zip(bp.iter().zip(bg)) {
                        *ap += c * vp;
                        *ag += c * vg;
                    }
                }
            }
            let (mut nt, mut nx) = (0.0, 0.0);
            for (a, &(xi, wa)) in unit.iter().enumerate() {
                let t = (k as f64 + xi) * h_t;
                for (b, &(zeta, wb)) in unit.iter().enumerate() {
                    let x = (p as f64 + zeta) * h_x;
                    let dt = datum.df_dt(t, x) - INV_TWO_PI * (acc_p[a * q + b] + saturated);
                    let dx = datum.df_dx(t, x) - acc_g[a * q + b];
                    nt += wa * wb * dt * dt;
                    nx += wa * wb * dx * dx;
                }
            }
            let area = h_t * h_x;
            ElementIndicator::from_norms(&mesh.elements()[cell], nt * area, nx * area)
        })
        .collect();
    Ok(IndicatorReport::new(entries))
}
