//! Fixtures shared by the criterion benchmarks.

use stbem_core::assembly::assemble;
use stbem_core::linsolve::solve_dense;
use stbem_core::{DirichletDatum, DiscreteSolution, ElementId, QuadConfig, SpaceTimeMesh};

/// `n x n` uniform mesh with the first `splits` elements of the first time
/// slab split once, which rules out the uniform fast paths.
pub fn locally_refined(n: usize, splits: usize) -> SpaceTimeMesh {
    let mesh = SpaceTimeMesh::uniform(n, n, 1.0).expect("mesh");
    let marked = (1..=splits.min(n)).map(ElementId).collect();
    mesh.refine(&marked).expect("refine").0
}

/// Dense solve of `datum` on `mesh`.
pub fn solved(mesh: &SpaceTimeMesh, datum: DirichletDatum) -> DiscreteSolution {
    let system = assemble(mesh, &datum, &QuadConfig::default()).expect("assemble");
    DiscreteSolution::new(mesh.clone(), solve_dense(&system).expect("solve")).expect("solution")
}
