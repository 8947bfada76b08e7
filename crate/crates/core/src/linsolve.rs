//! Dense LU with partial pivoting and the marching solve for block
//! lower triangular Toeplitz systems.

use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::Mat;

use crate::assembly::{GalerkinSystem, ToeplitzSystem};
use crate::error::{Error, Result};
use crate::mesh::SpaceTimeMesh;

/// Pivots smaller than this multiple of the infinity norm count as zero.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Blocked LU with partial pivoting.
#[derive(Debug)]
pub struct LuFactors {
    n: usize,
    lu: PartialPivLu<f64>,
}

impl LuFactors {
    /// Factors a row-major `n x n` matrix. A pivot below
    /// [`PIVOT_TOLERANCE`] times the infinity norm is reported as singular.
    pub fn new(matrix: &[f64], n: usize) -> Result<Self> {
        if matrix.len() != n * n {
            return Err(Error::InvalidArgument(format!("expected {} entries, got {}", n * n, matrix.len())));
        }
        let norm = (0..n)
            .map(|i| matrix[i * n..(i + 1) * n].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let threshold = PIVOT_TOLERANCE * norm;
        let a = Mat::from_fn(n, n, |i, j| matrix[i * n + j]);
        let lu = a.partial_piv_lu();
        let u = lu.U();
        for k in 0..n {
            let magnitude = u[(k, k)].abs();
            if !(magnitude > threshold) {
                return Err(Error::Singular { index: k, magnitude });
            }
        }
        Ok(Self { n, lu })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let rhs = Mat::from_fn(self.n, 1, |i, _| b[i]);
        let x = self.lu.solve(&rhs);
        (0..self.n).map(|i| x[(i, 0)]).collect()
    }
}

pub fn solve_dense(system: &GalerkinSystem) -> Result<Vec<f64>> {
    let lu = LuFactors::new(system.matrix(), system.size())?;
    Ok(lu.solve(system.rhs()))
}

/// Time marching: `A_0 alpha_n = beta_n - sum_{l >= 1} A_l alpha_{n - l}`
/// with one factorization of `A_0`.
pub fn solve_toeplitz(system: &ToeplitzSystem) -> Result<Vec<f64>> {
    let (n_x, n_t) = (system.n_x(), system.n_t());
    let lu = LuFactors::new(system.block(0), n_x)?;
    let mut alpha = vec![0.0; n_x * n_t];
    let mut rhs = vec![0.0; n_x];
    for n in 0..n_t {
        rhs.copy_from_slice(&system.rhs()[n * n_x..(n + 1) * n_x]);
        for lag in 1..=n {
            let block = system.block(lag);
            let past = &alpha[(n - lag) * n_x..(n - lag + 1) * n_x];
            for (p, r) in rhs.iter_mut().enumerate() {
                let row = &block[p * n_x..(p + 1) * n_x];
                *r -= row.iter().zip(past).map(|(a, v)| a * v).sum::<f64>();
            }
        }
        let step = lu.solve(&rhs);
        alpha[n * n_x..(n + 1) * n_x].copy_from_slice(&step);
    }
    Ok(alpha)
}

/// Coefficients of a piecewise constant density on a mesh.
#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    mesh: SpaceTimeMesh,
    alpha: Vec<f64>,
}

impl DiscreteSolution {
    pub fn new(mesh: SpaceTimeMesh, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != mesh.len() {
            return Err(Error::InvalidArgument(format!(
                "{} coefficients for {} elements",
                alpha.len(),
                mesh.len()
            )));
        }
        Ok(Self { mesh, alpha })
    }

    pub fn mesh(&self) -> &SpaceTimeMesh {
        &self.mesh
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.alpha
    }

    /// Value of the density at `(t, x)`, zero outside the mesh.
    pub fn value_at(&self, t: f64, x: f64) -> f64 {
        self.mesh
            .elements()
            .iter()
            .zip(&self.alpha)
            .find(|(e, _)| e.t_lo <= t && t < e.t_hi && e.x_lo <= x && x <= e.x_hi)
            .map_or(0.0, |(_, a)| *a)
    }

    /// CSV with one row per element: `id,t_lo,t_hi,x_lo,x_hi,alpha`.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "id,t_lo,t_hi,x_lo,x_hi,alpha")?;
        for (e, a) in self.mesh.elements().iter().zip(&self.alpha) {
            writeln!(out, "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", e.id, e.t_lo, e.t_hi, e.x_lo, e.x_hi, a)?;
        }
        Ok(())
    }
}
