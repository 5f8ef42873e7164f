//! Surface-area-preserving mean curvature flow of closed hypersurfaces.
//!
//! Evolves a closed triangle mesh (or closed planar curve) with normal
//! velocity `(1 − h·H)ν`, where `h = ∫H dμ / ∫H² dμ`, and records the
//! quantities that govern its convergence to a round sphere.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod exec;
pub mod flow;
pub mod geometry;
pub mod mesh;
pub mod oracle;

pub use diagnostics::{DiagnosticsRecord, TimeSeries};
pub use flow::{FlowConfig, FlowError, FlowState, Stepping, Termination};
pub use geometry::{GeometryCache, GeometryError};
pub use mesh::{MeshError, MeshFormat, MeshMode, TriMesh, Vec3};
