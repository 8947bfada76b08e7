//! Galerkin matrix and right-hand side on local tensor-product meshes.
//!
//! With piecewise constant trial and test functions the time integrals are
//! exact: entry `(i, j)` is a signed sum over the four corner lags
//! `t_i^{hi,lo} - t_j^{lo,hi}` of spatial double integrals of `gcal`. The
//! double integral of a function of `|x - y|` over two panels reduces to a
//! one-dimensional integral against the panel overlap, which is piecewise
//! linear, and `acosh(L / r)` times a linear function has an elementary
//! antiderivative. Entries are therefore evaluated in closed form;
//! [`matrix_entry_quadrature`] keeps a nested graded-quadrature route for
//! cross-checking.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{cone_acosh, gcal_unchecked};
use crate::mesh::{RefinementMap, SpaceTimeElement, SpaceTimeMesh};
use crate::problems::DirichletDatum;
use crate::quadrature::{Breakpoint, Integrator, QuadConfig};

const INV_TWO_PI: f64 = 1.0 / (2.0 * PI);

/// Dense system `E alpha = beta` over a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct GalerkinSystem {
    n: usize,
    /// Row-major, row = test element, column = trial element.
    matrix: Vec<f64>,
    rhs: Vec<f64>,
    mesh_generation: u64,
}

impl GalerkinSystem {
    pub fn from_parts(n: usize, matrix: Vec<f64>, rhs: Vec<f64>, mesh_generation: u64) -> Result<Self> {
        if matrix.len() != n * n || rhs.len() != n {
            return Err(Error::InvalidArgument(format!(
                "system of size {n} needs {} matrix and {n} rhs entries, got {} and {}",
                n * n,
                matrix.len(),
                rhs.len()
            )));
        }
        Ok(Self {
            n,
            matrix,
            rhs,
            mesh_generation,
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.n + j]
    }

    pub fn mesh_generation(&self) -> u64 {
        self.mesh_generation
    }

    /// Bytes held by the matrix and right-hand side.
    pub fn memory_bytes(&self) -> u64 {
        dense_memory_bytes(self.n)
    }

    /// Binary dump: `n` as little-endian `u64`, then the matrix row by row,
    /// then the right-hand side, all little-endian `f64`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.n as u64).to_le_bytes())?;
        for v in self.matrix.iter().chain(&self.rhs) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

pub fn dense_memory_bytes(n: usize) -> u64 {
    8 * ((n as u64) * (n as u64) + n as u64)
}

pub fn toeplitz_memory_bytes(n_x: usize, n_t: usize) -> u64 {
    8 * ((n_t * n_x * n_x) as u64 + (n_t * n_x) as u64)
}

/// Block lower triangular Toeplitz system of a uniform mesh. Block `l`
/// couples a test slab with the trial slab `l` steps earlier.
#[derive(Debug, Clone, PartialEq)]
pub struct ToeplitzSystem {
    n_x: usize,
    n_t: usize,
    /// `n_t` row-major `n_x x n_x` blocks, contiguous.
    blocks: Vec<f64>,
    rhs: Vec<f64>,
}

impl ToeplitzSystem {
    pub fn from_parts(n_x: usize, n_t: usize, blocks: Vec<f64>, rhs: Vec<f64>) -> Result<Self> {
        if blocks.len() != n_t * n_x * n_x || rhs.len() != n_t * n_x {
            return Err(Error::InvalidArgument("toeplitz block or rhs size mismatch".into()));
        }
        Ok(Self { n_x, n_t, blocks, rhs })
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn block(&self, lag: usize) -> &[f64] {
        let s = self.n_x * self.n_x;
        &self.blocks[lag * s..(lag + 1) * s]
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn memory_bytes(&self) -> u64 {
        toeplitz_memory_bytes(self.n_x, self.n_t)
    }

    /// Dense expansion, in the element order of [`SpaceTimeMesh::uniform`].
    pub fn expand(&self) -> Vec<f64> {
        let n = self.n_x * self.n_t;
        let mut dense = vec![0.0; n * n];
        for slab in 0..self.n_t {
            for lag in 0..=slab {
                let block = self.block(lag);
                let trial = slab - lag;
                for p in 0..self.n_x {
                    let row = slab * self.n_x + p;
                    let dst = &mut dense[row * n + trial * self.n_x..row * n + (trial + 1) * self.n_x];
                    dst.copy_from_slice(&block[p * self.n_x..(p + 1) * self.n_x]);
                }
            }
        }
        dense
    }
}

/// The four `(lag, sign)` pairs of an entry.
fn corner_lags(test: &SpaceTimeElement, trial: &SpaceTimeElement) -> [(f64, f64); 4] {
    [
        (test.t_hi - trial.t_lo, 1.0),
        (test.t_hi - trial.t_hi, -1.0),
        (test.t_lo - trial.t_lo, -1.0),
        (test.t_lo - trial.t_hi, 1.0),
    ]
}

fn panel_distance(a: &SpaceTimeElement, b: &SpaceTimeElement) -> f64 {
    (b.x_lo - a.x_hi).max(a.x_lo - b.x_hi).max(0.0)
}

/// True when the entry vanishes by causality or by the light cone.
pub fn entry_vanishes(test: &SpaceTimeElement, trial: &SpaceTimeElement) -> bool {
    let max_lag = test.t_hi - trial.t_lo;
    max_lag <= 0.0 || panel_distance(test, trial) >= max_lag
}

/// Overlap length `w(s) = |[c_i, d_i] ∩ [c_j + s, d_j + s]|`.
#[inline]
fn overlap(test: &SpaceTimeElement, trial: &SpaceTimeElement, s: f64) -> f64 {
    (test.x_hi.min(trial.x_hi + s) - test.x_lo.max(trial.x_lo + s)).max(0.0)
}

/// `int_{Gamma_i} int_{Gamma_j} acosh(lag / |x - y|)_+ dy dx` in closed form.
fn panel_acosh_integral(test: &SpaceTimeElement, trial: &SpaceTimeElement, lag: f64) -> f64 {
    if lag <= 0.0 {
        return 0.0;
    }
    // W(r) = w(r) + w(-r) is linear between these points
    let mut cuts = [
        0.0,
        (test.x_lo - trial.x_hi).abs(),
        (test.x_lo - trial.x_lo).abs(),
        (test.x_hi - trial.x_hi).abs(),
        (test.x_hi - trial.x_lo).abs(),
        lag,
    ];
    cuts.sort_by(f64::total_cmp);
    let weight = |r: f64| overlap(test, trial, r) + overlap(test, trial, -r);
    let a_of = |r: f64| if r <= 0.0 { f64::INFINITY } else { cone_acosh(lag, r) };
    // r * acosh(lag / r), zero at r = 0
    let r_acosh = |r: f64| if r <= 0.0 { 0.0 } else { r * a_of(r) };
    let root = |r: f64| ((lag - r) * (lag + r)).max(0.0).sqrt();
    // arcsin(r / lag) through the exact gap lag - r, accurate near r = lag
    let asin = |r: f64| if r >= lag { FRAC_PI_2 } else { r.atan2(root(r)) };

    let mut total = 0.0;
    for w in cuts.windows(2) {
        let (r0, r1) = (w[0], w[1].min(lag));
        if !(r1 > r0) {
            continue;
        }
        let (w0, w1) = (weight(r0), weight(r1));
        if w0 == 0.0 && w1 == 0.0 {
            continue;
        }
        let slope = (w1 - w0) / (r1 - r0);
        let intercept = w0 - slope * r0;
        // int acosh = r acosh + lag asin(r / lag)
        let i0 = r_acosh(r1) - r_acosh(r0) + lag * (asin(r1) - asin(r0));
        // int r acosh = r^2 / 2 acosh - lag / 2 sqrt(lag^2 - r^2)
        let sq0 = root(r0);
        let sq1 = root(r1);
        let i1 = 0.5 * (r1 * r_acosh(r1) - r0 * r_acosh(r0))
            + 0.5 * lag * (r1 - r0) * (r1 + r0) / (sq0 + sq1);
        total += intercept * i0 + slope * i1;
    }
    total
}

/// Galerkin matrix entry for test element `test` and trial element `trial`.
pub fn matrix_entry(test: &SpaceTimeElement, trial: &SpaceTimeElement) -> f64 {
    if entry_vanishes(test, trial) {
        return 0.0;
    }
    let sum: f64 = corner_lags(test, trial)
        .iter()
        .map(|&(lag, sign)| sign * panel_acosh_integral(test, trial, lag))
        .sum();
    INV_TWO_PI * sum
}

/// The same entry by nested graded Gauss quadrature in `y` then `x`.
pub fn matrix_entry_quadrature(test: &SpaceTimeElement, trial: &SpaceTimeElement, integrator: &Integrator) -> f64 {
    if entry_vanishes(test, trial) {
        return 0.0;
    }
    let lags = corner_lags(test, trial);
    let active: Vec<(f64, f64)> = lags.iter().copied().filter(|&(l, _)| l > 0.0).collect();
    let mut outer_bps = vec![Breakpoint::singular(trial.x_lo), Breakpoint::singular(trial.x_hi)];
    for &(lag, _) in &active {
        for edge in [trial.x_lo, trial.x_hi] {
            outer_bps.push(Breakpoint::singular(edge - lag));
            outer_bps.push(Breakpoint::singular(edge + lag));
        }
    }
    let inner = |x: f64| {
        let mut bps = vec![
            Breakpoint::singular(x),
            Breakpoint::singular(trial.x_lo),
            Breakpoint::singular(trial.x_hi),
        ];
        for &(lag, _) in &active {
            bps.push(Breakpoint::singular(x - lag));
            bps.push(Breakpoint::singular(x + lag));
        }
        integrator.integrate(
            |y| {
                let r = (x - y).abs();
                active.iter().map(|&(lag, sign)| sign * gcal_unchecked(lag, r)).sum::<f64>()
            },
            trial.x_lo,
            trial.x_hi,
            &bps,
        )
    };
    integrator.integrate(inner, test.x_lo, test.x_hi, &outer_bps)
}

/// `beta_i = int_{Gamma_i} f(t_hi, x) - f(t_lo, x) dx`.
pub fn rhs_entry(element: &SpaceTimeElement, datum: &DirichletDatum, integrator: &Integrator) -> f64 {
    datum.integrate_in_space(element.t_hi, element.x_lo, element.x_hi, integrator)
        - datum.integrate_in_space(element.t_lo, element.x_lo, element.x_hi, integrator)
}

fn assemble_rows(elements: &[SpaceTimeElement], rows: std::ops::Range<usize>, out: &mut [f64]) {
    let n = elements.len();
    out.par_chunks_mut(n).zip(rows).for_each(|(row, i)| {
        let test = &elements[i];
        for (j, v) in row.iter_mut().enumerate() {
            *v = matrix_entry(test, &elements[j]);
        }
    });
}

pub fn assemble(mesh: &SpaceTimeMesh, datum: &DirichletDatum, quad: &QuadConfig) -> Result<GalerkinSystem> {
    let integrator = Integrator::from_config(quad)?;
    let elements = mesh.elements();
    let n = elements.len();
    let mut matrix = vec![0.0; n * n];
    assemble_rows(elements, 0..n, &mut matrix);
    let rhs = elements.par_iter().map(|e| rhs_entry(e, datum, &integrator)).collect();
    GalerkinSystem::from_parts(n, matrix, rhs, mesh.generation())
}

/// Grows `system` from `old_mesh` to `new_mesh`. Entries between elements
/// that were not split are copied; every row and column of a retained or
/// appended child is recomputed.
pub fn update_after_refinement(
    system: &GalerkinSystem,
    old_mesh: &SpaceTimeMesh,
    new_mesh: &SpaceTimeMesh,
    map: &RefinementMap,
    datum: &DirichletDatum,
    quad: &QuadConfig,
) -> Result<GalerkinSystem> {
    if system.mesh_generation != old_mesh.generation() {
        return Err(Error::StampMismatch {
            system: system.mesh_generation,
            mesh: old_mesh.generation(),
        });
    }
    if system.n != old_mesh.len() {
        return Err(Error::InvalidArgument("system size does not match the old mesh".into()));
    }
    if map.is_empty() {
        return Ok(system.clone());
    }
    let integrator = Integrator::from_config(quad)?;
    let old_n = system.n;
    let n = new_mesh.len();
    let mut fresh = vec![false; n];
    for id in map.touched() {
        new_mesh.get(id)?;
        fresh[id.slot()] = true;
    }
    fresh[old_n..].iter_mut().for_each(|f| *f = true);

    let elements = new_mesh.elements();
    let mut matrix = vec![0.0; n * n];
    matrix.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        let test = &elements[i];
        for (j, v) in row.iter_mut().enumerate() {
            *v = if fresh[i] || fresh[j] {
                matrix_entry(test, &elements[j])
            } else {
                system.matrix[i * old_n + j]
            };
        }
    });
    let rhs = (0..n)
        .into_par_iter()
        .map(|i| {
            if fresh[i] {
                rhs_entry(&elements[i], datum, &integrator)
            } else {
                system.rhs[i]
            }
        })
        .collect();
    GalerkinSystem::from_parts(n, matrix, rhs, new_mesh.generation())
}

/// Right-hand side of a uniform mesh, reusing `int f(t_n, x) dx` between
/// neighbouring slabs.
pub fn uniform_rhs(mesh: &SpaceTimeMesh, datum: &DirichletDatum, quad: &QuadConfig) -> Result<Vec<f64>> {
    let (n_x, n_t) = mesh
        .uniform_shape()
        .ok_or_else(|| Error::InvalidArgument("uniform_rhs needs an unrefined uniform mesh".into()))?;
    let integrator = Integrator::from_config(quad)?;
    let elements = mesh.elements();
    let level_integrals: Vec<Vec<f64>> = (0..=n_t)
        .into_par_iter()
        .map(|n| {
            let t = if n < n_t { elements[n * n_x].t_lo } else { elements[(n_t - 1) * n_x].t_hi };
            (0..n_x)
                .map(|i| datum.integrate_in_space(t, elements[i].x_lo, elements[i].x_hi, &integrator))
                .collect()
        })
        .collect();
    let mut rhs = Vec::with_capacity(n_x * n_t);
    for pair in level_integrals.windows(2) {
        rhs.extend(pair[1].iter().zip(&pair[0]).take(n_x).map(|(hi, lo)| hi - lo));
    }
    Ok(rhs)
}

/// Block-Toeplitz assembly on the uniform `n_x x n_t` mesh. Each block
/// depends only on the panel offset, so `n_t (2 n_x - 1)` entries are
/// computed and spread over `n_t n_x^2` slots.
pub fn assemble_uniform_toeplitz(
    n_x: usize,
    n_t: usize,
    final_time: f64,
    datum: &DirichletDatum,
    quad: &QuadConfig,
) -> Result<ToeplitzSystem> {
    let mesh = SpaceTimeMesh::uniform(n_x, n_t, final_time)?;
    let elements = mesh.elements();
    let offsets = 2 * n_x - 1;
    let values: Vec<f64> = (0..n_t * offsets)
        .into_par_iter()
        .map(|k| {
            let (lag, o) = (k / offsets, k % offsets);
            let offset = o as isize - (n_x as isize - 1);
            let (p, m) = if offset >= 0 { (offset as usize, 0) } else { (0, (-offset) as usize) };
            matrix_entry(&elements[lag * n_x + p], &elements[m])
        })
        .collect();
    let mut blocks = vec![0.0; n_t * n_x * n_x];
    for lag in 0..n_t {
        let block = &mut blocks[lag * n_x * n_x..(lag + 1) * n_x * n_x];
        for p in 0..n_x {
            for m in 0..n_x {
                let o = p + n_x - 1 - m;
                block[p * n_x + m] = values[lag * offsets + o];
            }
        }
    }
    let rhs = uniform_rhs(&mesh, datum, quad)?;
    ToeplitzSystem::from_parts(n_x, n_t, blocks, rhs)
}
