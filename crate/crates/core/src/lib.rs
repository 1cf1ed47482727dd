//! Unsigned orthogonal distance fields (UODFs).
//!
//! A shape is described by three fields, one per coordinate axis. Along every
//! axis-parallel lattice ray the field is the 1D unsigned distance to the
//! nearest surface crossing on that ray, and it is undefined on rays that miss
//! the shape. Because each sample predicts its own nearest crossing, surface
//! points on grid edges can be recovered without interpolating between
//! neighbouring corners.
//!
//! The crate covers the full pipeline:
//!
//! * [`mesh`]: triangle mesh loading, normalization, BVH ray stabbing and
//!   closest-point queries.
//! * [`surface`] and [`fixtures`]: the [`surface::Surface`] abstraction over
//!   meshes and closed-form shapes used as ground truth.
//! * [`field`]: exact ground-truth UODFs plus SDF/UDF corner grids, and their
//!   binary file format.
//! * [`gep`]: grid-edge-point reconstruction (segment averaging, merging and
//!   cross-direction fusion) and point export.
//! * [`baseline`]: marching-cubes style edge interpolation on SDF/UDF grids.
//! * [`neural`]: a small positional-encoding MLP regressor for one UODF and
//!   its silhouette mask, trained with value, derivative and surface-point
//!   losses.
//! * [`metrics`]: Chamfer distances, evaluation reports and resolution sweeps.

pub mod baseline;
pub mod field;
pub mod fixtures;
pub mod geometry;
pub mod gep;
pub mod mesh;
pub mod metrics;
pub mod neural;
pub mod surface;

pub use field::{DirectionalField, GridSpec, ScalarFieldGrid, ScalarKind};
pub use geometry::{Direction, Vec3};
pub use gep::{GepSet, GridEdgePoint};
pub use mesh::{Bvh, RayHitList, TriangleMesh};
pub use surface::Surface;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
