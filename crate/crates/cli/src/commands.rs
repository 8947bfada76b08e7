use std::collections::BTreeSet;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use log::warn;
use stbem_core::assembly::assemble;
use stbem_core::driver::{
    adaptive_run, apply_benchmark, empirical_ratios, extrapolate_benchmark, uniform_study, write_ledger,
    ConvergenceRecord,
};
use stbem_core::{DiscreteSolution, ElementId, IndicatorReport, SpaceTimeMesh};

use crate::config::Settings;

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn prepare_dir(settings: &Settings) -> Result<PathBuf> {
    let dir = settings.out_dir();
    fs::create_dir_all(&dir).with_context(|| format!("creating output directory {}", dir.display()))?;
    Ok(dir)
}

fn write_mesh(dir: &Path, mesh: &SpaceTimeMesh, svg: bool) -> Result<()> {
    let mut out = create(dir, "mesh.csv")?;
    mesh.write_csv(&mut out)?;
    out.flush()?;
    if svg {
        let mut out = create(dir, "mesh.svg")?;
        mesh.write_svg(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

fn write_outputs(
    dir: &Path,
    settings: &Settings,
    records: &mut [ConvergenceRecord],
    solution: &DiscreteSolution,
    report: Option<&IndicatorReport>,
) -> Result<()> {
    if settings.omit_timing() {
        records.iter_mut().for_each(|r| r.wall_time_s = 0.0);
    }
    let mut out = create(dir, "ledger.csv")?;
    write_ledger(records, &mut out)?;
    out.flush()?;
    write_mesh(dir, solution.mesh(), settings.svg())?;
    let mut out = create(dir, "solution.csv")?;
    solution.write_csv(&mut out)?;
    out.flush()?;
    if let Some(report) = report {
        let mut out = create(dir, "indicators.csv")?;
        report.write_csv(&mut out)?;
        out.flush()?;
    }
    Ok(())
}

/// Summary table on stdout. A closed pipe (`stbem ... | head`) is not an
/// error worth reporting.
fn print_table(records: &[ConvergenceRecord]) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(
        out,
        "{:>4} {:>8} {:>16} {:>16} {:>16} {:>16}",
        "k", "dofs", "energy", "sq_energy_err", "eta", "eta_heur"
    );
    for r in records {
        let err = r.sq_energy_err.map_or("nan".to_string(), |e| format!("{e:.8e}"));
        let _ = writeln!(
            out,
            "{:>4} {:>8} {:>16.8e} {:>16} {:>16.8e} {:>16.8e}",
            r.iteration, r.dofs, r.energy, err, r.eta_total, r.eta_heur_total
        );
    }
}

pub fn uniform(settings: &Settings) -> Result<()> {
    let study = settings.uniform_study()?;
    let dir = prepare_dir(settings)?;
    let out = uniform_study(&study)?;
    let mut records = out.records;
    let energies: Vec<f64> = records.iter().map(|r| r.energy).collect();
    let extrapolated = if energies.len() >= 3 {
        let ex = extrapolate_benchmark(&energies)?;
        let ratios = empirical_ratios(&energies)?;
        println!(
            "extrapolated energy {:.8e}, increment ratios {:?}, reciprocal {:?}",
            ex.value,
            ratios.increment().iter().map(|r| format!("{r:.8e}")).collect::<Vec<_>>(),
            ratios.reciprocal().iter().map(|r| format!("{r:.8e}")).collect::<Vec<_>>()
        );
        Some(ex.value)
    } else {
        None
    };
    let benchmark = settings
        .benchmark
        .or(extrapolated)
        .or_else(|| study.datum.reference_energy());
    if let Some(b) = benchmark {
        apply_benchmark(&mut records, b);
    }
    print_table(&records);
    write_outputs(&dir, settings, &mut records, &out.solution, out.report.as_ref())
}

pub fn adapt(settings: &Settings) -> Result<()> {
    let cfg = settings.adaptive_config()?;
    let dir = prepare_dir(settings)?;
    let out = adaptive_run(&cfg)?;
    let mut records = out.records;
    match settings.benchmark.or_else(|| cfg.datum.reference_energy()) {
        Some(b) => apply_benchmark(&mut records, b),
        None => warn!("no benchmark energy for {}; error column left empty", cfg.datum),
    }
    print_table(&records);
    println!(
        "{} after {} iterations, {} elements",
        if out.converged { "converged" } else { "stopped" },
        records.len() - 1,
        out.solution.mesh().len()
    );
    write_outputs(&dir, settings, &mut records, &out.solution, Some(&out.report))
}

fn refined_mesh(settings: &Settings) -> Result<SpaceTimeMesh> {
    let mesh = SpaceTimeMesh::uniform(settings.nx.unwrap_or(4), settings.nt.unwrap_or(4), settings.final_time())?;
    let marked: BTreeSet<ElementId> = settings.refine_ids().into_iter().collect();
    Ok(mesh.refine(&marked)?.0)
}

pub fn entry_dump(settings: &Settings) -> Result<()> {
    let mesh = refined_mesh(settings)?;
    let datum = settings.datum()?;
    let dir = prepare_dir(settings)?;
    let system = assemble(&mesh, &datum, &settings.quad()?)?;
    let mut out = create(&dir, "system.bin")?;
    system.write_binary(&mut out)?;
    out.flush()?;
    let n = system.size();
    let mut out = create(&dir, "entries.csv")?;
    writeln!(out, "i,j,value")?;
    for i in 0..n {
        for j in 0..n {
            let v = system.entry(i, j);
            if v != 0.0 {
                writeln!(out, "{},{},{:.17e}", i + 1, j + 1, v)?;
            }
        }
    }
    out.flush()?;
    let mut out = create(&dir, "rhs.csv")?;
    writeln!(out, "id,beta")?;
    for (i, b) in system.rhs().iter().enumerate() {
        writeln!(out, "{},{:.17e}", i + 1, b)?;
    }
    out.flush()?;
    write_mesh(&dir, &mesh, settings.svg())?;
    println!("{n} elements, system written to {}", dir.display());
    Ok(())
}

pub fn mesh_export(settings: &Settings) -> Result<()> {
    let mesh = refined_mesh(settings)?;
    let dir = prepare_dir(settings)?;
    write_mesh(&dir, &mesh, settings.svg())?;
    println!("{} elements written to {}", mesh.len(), dir.display());
    Ok(())
}
