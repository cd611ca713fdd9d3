//! Unfolded Borel–Laplace summation for parametric singular systems
//! (x²−ε)·dy/dx = M(ε)y + f(x,y,ε), whose double singular point at x = 0
//! splits into the simple points x = ±√ε.
//!
//! Layers, bottom up:
//! - [`series_core`]: formal series, formal Borel transform, formal solution.
//! - [`geometry`]: the time coordinate t(x,ε), strips, sectors and paths.
//! - [`line_calculus`]: sampled functions on Borel-plane lines, convolutions, norms.
//! - [`transforms`]: closed-form and quadrature Borel/Laplace transforms.
//! - [`solver`]: the convolution fixed point in the Borel plane and residue series.
//! - [`applications`]: bounded solutions, confluence, linear-system normalization.
//! - [`acceptance`]: the end-to-end acceptance checks shared by tests and the CLI.

pub mod acceptance;
pub mod applications;
pub mod error;
pub mod geometry;
pub mod line_calculus;
pub mod numerics;
pub mod series_core;
pub mod solver;
pub mod transforms;

pub use num_complex::Complex64 as C64;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{AngleInterval, DirectionRange, SheetPoint, Side, SqrtEps};
pub use line_calculus::{DiracAtom, LineFunction, StripFunction};
pub use series_core::{MultiIndex, PowerSeries1, PowerSeries2, SystemSpec, TermKind, VecPoly};
pub use applications::{CenterManifold, LinearSystemSpec};
pub use solver::{OmegaGrid, OmegaSolution, SolverConfig};
pub use transforms::MonomialBorel;
