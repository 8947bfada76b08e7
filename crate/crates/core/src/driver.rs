//! Uniform convergence studies, the adaptive SOLVE, ESTIMATE, MARK, REFINE
//! loop and the bookkeeping around them: discrete energies, empirical
//! ratios, geometric extrapolation of a benchmark energy, slope fits and the
//! run ledger.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use log::{info, warn};

use crate::assembly::{
    assemble, assemble_uniform_toeplitz, dense_memory_bytes, update_after_refinement, GalerkinSystem,
};
use crate::error::{Error, Result};
use crate::linsolve::{solve_dense, solve_toeplitz, DiscreteSolution};
use crate::mesh::{ElementId, SpaceTimeMesh};
use crate::problems::DirichletDatum;
use crate::quadrature::QuadConfig;
use crate::residual::{element_indicators, IndicatorKind, IndicatorReport};

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub datum: DirichletDatum,
    pub theta: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
    pub indicator_kind: IndicatorKind,
    pub n_x: usize,
    pub n_t: usize,
    pub final_time: f64,
    pub quad: QuadConfig,
}

impl AdaptiveConfig {
    /// Initial 4x4 mesh on `[0, 1]`, the datum's default `theta`.
    pub fn new(datum: DirichletDatum) -> Self {
        Self {
            datum,
            theta: datum.default_theta(),
            epsilon: 1e-5,
            max_iterations: 15,
            indicator_kind: IndicatorKind::Theoretical,
            n_x: 4,
            n_t: 4,
            final_time: 1.0,
            quad: QuadConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.theta) {
            return Err(Error::InvalidArgument(format!("theta = {} not in [0, 1)", self.theta)));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon = {} must be positive", self.epsilon)));
        }
        self.quad.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRecord {
    pub iteration: usize,
    pub dofs: usize,
    pub energy: f64,
    /// `|E_bench - E|`, once a benchmark is known.
    pub sq_energy_err: Option<f64>,
    pub eta_total: f64,
    pub eta_heur_total: f64,
    pub memory_bytes: u64,
    pub wall_time_s: f64,
}

/// Numeric columns of a [`ConvergenceRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordField {
    Dofs,
    Energy,
    SqEnergyErr,
    EtaTotal,
    EtaHeurTotal,
    MemoryBytes,
    WallTime,
}

impl ConvergenceRecord {
    pub fn field(&self, field: RecordField) -> f64 {
        match field {
            RecordField::Dofs => self.dofs as f64,
            RecordField::Energy => self.energy,
            RecordField::SqEnergyErr => self.sq_energy_err.unwrap_or(f64::NAN),
            RecordField::EtaTotal => self.eta_total,
            RecordField::EtaHeurTotal => self.eta_heur_total,
            RecordField::MemoryBytes => self.memory_bytes as f64,
            RecordField::WallTime => self.wall_time_s,
        }
    }
}

/// `alpha^T beta`, which equals `alpha^T E alpha` when `alpha` solves the system.
pub fn discrete_energy(solution: &DiscreteSolution, system: &GalerkinSystem) -> Result<f64> {
    if solution.coefficients().len() != system.size() {
        return Err(Error::InvalidArgument("solution and system sizes differ".into()));
    }
    Ok(dot(solution.coefficients(), system.rhs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Increment quotients `(E_{i+1} - E_i) / (E_i - E_{i-1})` of an energy
/// sequence, one per interior index whose denominator is nonzero.
#[derive(Debug, Clone, PartialEq)]
pub struct Ratios {
    /// `(interior index, quotient)`.
    pub values: Vec<(usize, f64)>,
    /// Interior indices skipped because the previous increment vanished.
    pub omitted: Vec<usize>,
}

impl Ratios {
    pub fn increment(&self) -> Vec<f64> {
        self.values.iter().map(|&(_, r)| r).collect()
    }

    /// The reciprocal orientation, previous increment over next increment.
    pub fn reciprocal(&self) -> Vec<f64> {
        self.values.iter().map(|&(_, r)| 1.0 / r).collect()
    }

    pub fn mean_reciprocal(&self) -> f64 {
        let r = self.reciprocal();
        r.iter().sum::<f64>() / r.len() as f64
    }

    pub fn last(&self) -> f64 {
        self.values.last().map_or(f64::NAN, |&(_, r)| r)
    }
}

pub fn empirical_ratios(energies: &[f64]) -> Result<Ratios> {
    if energies.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 energies for a ratio, got {}",
            energies.len()
        )));
    }
    let mut ratios = Ratios {
        values: Vec::new(),
        omitted: Vec::new(),
    };
    for i in 1..energies.len() - 1 {
        let prev = energies[i] - energies[i - 1];
        let next = energies[i + 1] - energies[i];
        if prev == 0.0 {
            warn!("zero energy increment before index {i}; ratio omitted");
            ratios.omitted.push(i);
        } else {
            ratios.values.push((i, next / prev));
        }
    }
    if ratios.values.is_empty() {
        return Err(Error::ZeroIncrement(ratios.omitted[0]));
    }
    Ok(ratios)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extrapolation {
    pub value: f64,
    /// Last increment quotient used for the geometric tail.
    pub ratio: f64,
    /// False when `|ratio| >= 1` and `value` is just the last energy.
    pub extrapolated: bool,
}

/// Geometric-series limit `E_n + (E_n - E_{n-1}) rho / (1 - rho)`.
pub fn extrapolate_benchmark(energies: &[f64]) -> Result<Extrapolation> {
    let ratios = empirical_ratios(energies)?;
    let rho = ratios.last();
    let n = energies.len() - 1;
    let last = energies[n];
    if !(rho.abs() < 1.0) {
        warn!("increment ratio {rho} is not contracting; reporting the last energy");
        return Ok(Extrapolation {
            value: last,
            ratio: rho,
            extrapolated: false,
        });
    }
    Ok(Extrapolation {
        value: last + (last - energies[n - 1]) * rho / (1.0 - rho),
        ratio: rho,
        extrapolated: true,
    })
}

pub fn apply_benchmark(records: &mut [ConvergenceRecord], benchmark: f64) {
    for r in records {
        r.sq_energy_err = Some((benchmark - r.energy).abs());
    }
}

/// Elements whose indicator exceeds `theta` times the largest one.
pub fn mark(report: &IndicatorReport, theta: f64, kind: IndicatorKind) -> BTreeSet<ElementId> {
    let threshold = theta * report.max(kind);
    report
        .entries()
        .iter()
        .filter(|e| e.value(kind) > threshold)
        .map(|e| e.id)
        .collect()
}

/// Least-squares slope of `log y` against `log x` over pairs with both
/// values positive and finite.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| x.is_finite() && y.is_finite() && **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < xs.len().min(ys.len()) {
        warn!("{} nonpositive or non-finite points excluded from the slope fit", xs.len().min(ys.len()) - pts.len());
    }
    if pts.len() < 2 {
        return Err(Error::InvalidArgument("slope fit needs two positive points".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}

pub fn slope_fit(records: &[ConvergenceRecord], x: RecordField, y: RecordField) -> Result<f64> {
    let xs: Vec<f64> = records.iter().map(|r| r.field(x)).collect();
    let ys: Vec<f64> = records.iter().map(|r| r.field(y)).collect();
    log_log_slope(&xs, &ys)
}

/// Result of [`adaptive_run`].
#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub records: Vec<ConvergenceRecord>,
    pub solution: DiscreteSolution,
    pub report: IndicatorReport,
    /// True when the indicator total fell below `epsilon`.
    pub converged: bool,
}

impl AdaptiveOutcome {
    pub fn mesh(&self) -> &SpaceTimeMesh {
        self.solution.mesh()
    }
}

pub fn adaptive_run(config: &AdaptiveConfig) -> Result<AdaptiveOutcome> {
    config.validate()?;
    let datum = config.datum;
    let mut mesh = SpaceTimeMesh::uniform(config.n_x, config.n_t, config.final_time)?;
    let mut clock = Instant::now();
    let mut system = assemble(&mesh, &datum, &config.quad)?;
    let mut records = Vec::new();
    for k in 0.. {
        let alpha = solve_dense(&system)?;
        let solution = DiscreteSolution::new(mesh.clone(), alpha)?;
        let energy = discrete_energy(&solution, &system)?;
        let report = element_indicators(&mesh, &solution, &datum, config.quad.indicator_order)?;
        records.push(ConvergenceRecord {
            iteration: k,
            dofs: mesh.len(),
            energy,
            sq_energy_err: None,
            eta_total: report.eta_total(),
            eta_heur_total: report.eta_heur_total(),
            memory_bytes: dense_memory_bytes(mesh.len()),
            wall_time_s: clock.elapsed().as_secs_f64(),
        });
        info!(
            "k = {k}: dofs = {}, energy = {energy:.9e}, eta = {:.3e}, eta_heur = {:.3e}",
            mesh.len(),
            report.eta_total(),
            report.eta_heur_total()
        );
        let converged = report.total(config.indicator_kind) < config.epsilon;
        let marked = mark(&report, config.theta, config.indicator_kind);
        if converged || k == config.max_iterations || marked.is_empty() {
            return Ok(AdaptiveOutcome {
                records,
                solution,
                report,
                converged,
            });
        }
        clock = Instant::now();
        let (fine, map) = mesh.refine(&marked)?;
        system = update_after_refinement(&system, &mesh, &fine, &map, &datum, &config.quad)?;
        mesh = fine;
    }
    unreachable!("the loop returns")
}

/// Settings of [`uniform_study`].
#[derive(Debug, Clone, PartialEq)]
pub struct UniformStudy {
    pub datum: DirichletDatum,
    /// Coarsest mesh is `n0 x n0`.
    pub n0: usize,
    pub levels: usize,
    pub final_time: f64,
    pub quad: QuadConfig,
    /// Compute indicator totals at every level.
    pub indicators: bool,
}

impl UniformStudy {
    pub fn new(datum: DirichletDatum, n0: usize, levels: usize) -> Self {
        Self {
            datum,
            n0,
            levels,
            final_time: 1.0,
            quad: QuadConfig::default(),
            indicators: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UniformOutcome {
    pub records: Vec<ConvergenceRecord>,
    /// Solution on the finest mesh.
    pub solution: DiscreteSolution,
    pub report: Option<IndicatorReport>,
}

/// Uniform meshes `N = n0 2^i`, `i < levels`, solved through the Toeplitz
/// path. Indicator totals are zero when indicators are disabled.
pub fn uniform_study(study: &UniformStudy) -> Result<UniformOutcome> {
    if study.levels == 0 || study.n0 == 0 {
        return Err(Error::InvalidArgument("uniform study needs n0 >= 1 and levels >= 1".into()));
    }
    study.quad.validate()?;
    let mut records = Vec::with_capacity(study.levels);
    let mut last = None;
    for i in 0..study.levels {
        let clock = Instant::now();
        let n = study.n0 << i;
        let system = assemble_uniform_toeplitz(n, n, study.final_time, &study.datum, &study.quad)?;
        let alpha = solve_toeplitz(&system)?;
        let energy = dot(&alpha, system.rhs());
        let mesh = SpaceTimeMesh::uniform(n, n, study.final_time)?;
        let solution = DiscreteSolution::new(mesh, alpha)?;
        let report = if study.indicators {
            Some(element_indicators(solution.mesh(), &solution, &study.datum, study.quad.indicator_order)?)
        } else {
            None
        };
        records.push(ConvergenceRecord {
            iteration: i,
            dofs: n * n,
            energy,
            sq_energy_err: None,
            eta_total: report.as_ref().map_or(0.0, |r| r.eta_total()),
            eta_heur_total: report.as_ref().map_or(0.0, |r| r.eta_heur_total()),
            memory_bytes: system.memory_bytes(),
            wall_time_s: clock.elapsed().as_secs_f64(),
        });
        info!("N = {n}: energy = {energy:.9e}, {:.2} s", clock.elapsed().as_secs_f64());
        last = Some((solution, report));
    }
    let (solution, report) = last.expect("levels >= 1");
    Ok(UniformOutcome {
        records,
        solution,
        report,
    })
}

pub const LEDGER_HEADER: &str = "k,dofs,energy,sq_energy_err,eta_total,eta_heur_total,memory_bytes,wall_time_s";

/// Run ledger, floats with nine significant digits.
pub fn write_ledger<W: Write>(records: &[ConvergenceRecord], mut out: W) -> Result<()> {
    writeln!(out, "{LEDGER_HEADER}")?;
    for r in records {
        let err = r.sq_energy_err.map_or("nan".to_string(), |e| format!("{e:.8e}"));
        writeln!(
            out,
            "{},{},{:.8e},{},{:.8e},{:.8e},{},{:.8e}",
            r.iteration, r.dofs, r.energy, err, r.eta_total, r.eta_heur_total, r.memory_bytes, r.wall_time_s
        )?;
    }
    Ok(())
}
