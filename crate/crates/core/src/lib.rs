//! Space-time energetic Galerkin boundary elements for the 2D wave equation
//! on the flat screen `[0, 1]`, with local tensor-product meshes, residual
//! error indicators and an adaptive refinement loop.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod driver;
pub mod error;
pub mod kernels;
pub mod linsolve;
pub mod mesh;
pub mod problems;
pub mod quadrature;
pub mod residual;

pub use assembly::{GalerkinSystem, ToeplitzSystem};
pub use error::{Error, Result};
pub use linsolve::DiscreteSolution;
pub use mesh::{ElementId, RefinementMap, SpaceTimeElement, SpaceTimeMesh, Split};
pub use problems::DirichletDatum;
pub use quadrature::{Breakpoint, GaussRule, Integrator, QuadConfig};
pub use residual::{ElementIndicator, IndicatorKind, IndicatorReport};
pub use driver::{AdaptiveConfig, ConvergenceRecord, UniformStudy};
