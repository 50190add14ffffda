//! Coordinate-chart tensor calculus for Walker metrics, Riemann extensions
//! and pullback extensions.

pub mod chart;
pub mod connection;
pub mod corpus;
pub mod curvature;
pub mod dist;
pub mod error;
pub mod expr;
pub mod extension;
pub mod point;
pub mod residual;
pub mod transport;

pub use chart::{ChartSplit, MetricField, SymMatrix, DET_FLOOR};
pub use connection::{christoffel, ChristoffelDerivatives, ChristoffelValues, ConnectionField};
pub use curvature::{curvature, lower_curvature, CurvatureValue, LoweredCurvature};
pub use error::{Error, Result};
pub use expr::{ParseError, ScalarField};
pub use point::{sample_box, Point, Sampler};
pub use residual::Residual;
pub use dist::{CheckEntry, CheckReport, DistributionSpec, ProjectabilityResidual};
pub use extension::{build_pullback_extension, build_riemann_extension, ExtensionSpec, OneFormSection};
pub use transport::{parallel_transport, CurveSpec, TransportPath};
