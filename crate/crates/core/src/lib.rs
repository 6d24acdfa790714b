//! Boundary-integral tools for the Neumann–Poincaré operator in the plane.

pub mod bipolar;
pub mod bvp;
pub mod error;
pub mod geometry;
pub mod gpt;
pub mod linalg;
pub mod multibody;
pub mod neumann;
pub mod potentials;
pub mod spectral;
pub mod transmission;

pub use nalgebra::Complex;

/// Complex scalar used for densities, contrasts and spectral parameters.
pub type C64 = Complex<f64>;

pub use error::{NpError, Result};
pub use geometry::{make_curve, refine, BoundaryCurve, CurveShape, Vec2};
pub use potentials::{Density, OperatorMatrix};
pub use neumann::DiskDomain;
pub use spectral::{Conductivity, MediumSpec, SpectralDecomposition};
pub use transmission::{HarmonicSource, SolveReport};
pub use bvp::{BvpReport, NeumannData};
pub use gpt::{GptTable, InclusionPlacement, MultiIndex};
pub use multibody::{MultiSolveReport, MultiSystem};
pub use bipolar::{BipolarGeometry, SourceKind};
