//! Ground-truth distance fields on the `[-1,1]^3` lattice.
//!
//! A [`DirectionalField`] holds one UODF component: for each lattice ray of a
//! direction, either nothing (the ray misses the shape and the field is
//! undefined there) or the ray's sorted surface crossings together with the
//! distance and derivative sign at each lattice sample. [`ScalarFieldGrid`]
//! holds the SDF/UDF corner grids used by the interpolation baselines.

mod io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Direction, Vec3};
use crate::surface::Surface;

pub use io::{
    directional_from_bytes, directional_to_bytes, read_directional, read_field_file, read_scalar, scalar_from_bytes,
    scalar_to_bytes, write_directional, write_scalar, FieldFile, FormatError, UNDEFINED_BITS,
};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("grid resolution must be at least 2 corners per axis, got {0}")]
    InvalidResolution(usize),
}

/// Sampling lattice over `[-1,1]^3` with `resolution` corners per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    resolution: usize,
}

impl GridSpec {
    pub fn new(resolution: usize) -> Result<Self, FieldError> {
        if resolution < 2 {
            return Err(FieldError::InvalidResolution(resolution));
        }
        Ok(GridSpec { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.resolution - 1) as f64
    }

    /// Coordinate of lattice index `i`; exactly `-1` and `1` at the ends.
    pub fn coord(&self, i: usize) -> f64 {
        let n = (self.resolution - 1) as f64;
        (2.0 * i as f64 - n) / n
    }

    pub fn corner(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        Vec3::new(self.coord(ix), self.coord(iy), self.coord(iz))
    }

    /// Linear index of a corner, x fastest.
    pub fn index(&self, ix: usize, iy: usize, iz: usize) -> usize {
        ix + self.resolution * (iy + self.resolution * iz)
    }

    pub fn corner_count(&self) -> usize {
        self.resolution.pow(3)
    }

    pub fn ray_count(&self) -> usize {
        self.resolution * self.resolution
    }

    /// Lattice edge index containing axis coordinate `s`, clamped to the domain.
    pub fn edge_index(&self, s: f64) -> usize {
        let i = ((s + 1.0) / self.spacing()).floor();
        if i.is_nan() || i < 0.0 {
            0
        } else {
            (i as usize).min(self.resolution - 2)
        }
    }
}

/// Distance from axis coordinate `s` to the nearest of the sorted crossings
/// `hits`, with the sign of the field's derivative at `s`.
///
/// A sample exactly on a crossing has distance 0 and sign `+1`; when the
/// nearest crossings on both sides are equidistant, the one on the positive
/// side wins (derivative sign `-1`). Returns `None` when `hits` is empty.
pub fn ray_distance(hits: &[f64], s: f64) -> Option<(f64, i8)> {
    if hits.is_empty() {
        return None;
    }
    let k = hits.partition_point(|&h| h <= s);
    let below = k.checked_sub(1).map(|i| s - hits[i]);
    let above = hits.get(k).map(|&h| h - s);
    Some(match (below, above) {
        (Some(0.0), _) => (0.0, 1),
        (Some(b), Some(a)) if a <= b => (a, -1),
        (Some(b), _) => (b, 1),
        (None, Some(a)) => (a, -1),
        (None, None) => unreachable!("hits is non-empty"),
    })
}

/// Where a directional field came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSource {
    GroundTruth,
    Predicted,
}

/// Samples of one defined ray.
#[derive(Debug, Clone, PartialEq)]
pub struct RayProfile {
    /// Axis coordinates of the surface crossings (empty for predicted fields).
    pub hits: Vec<f64>,
    /// Unsigned distance at each lattice sample along the ray.
    pub distances: Vec<f64>,
    /// Derivative sign (`-1` or `+1`) at each sample.
    pub signs: Vec<i8>,
}

impl RayProfile {
    pub fn from_hits(hits: Vec<f64>, grid: &GridSpec) -> Self {
        let (distances, signs) = (0..grid.resolution())
            .map(|i| ray_distance(&hits, grid.coord(i)).expect("profile built from non-empty hits"))
            .unzip();
        RayProfile { hits, distances, signs }
    }
}

/// One UODF component sampled on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalField {
    direction: Direction,
    grid: GridSpec,
    source: FieldSource,
    /// Indexed by `iu + R * iv` over the direction's plane axes.
    rays: Vec<Option<RayProfile>>,
}

impl DirectionalField {
    pub fn new(direction: Direction, grid: GridSpec, source: FieldSource, rays: Vec<Option<RayProfile>>) -> Self {
        assert_eq!(rays.len(), grid.ray_count(), "one entry per lattice ray");
        DirectionalField {
            direction,
            grid,
            source,
            rays,
        }
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn source(&self) -> FieldSource {
        self.source
    }

    pub fn ray_index(&self, iu: usize, iv: usize) -> usize {
        iu + self.grid.resolution() * iv
    }

    /// Plane indices `(iu, iv)` of a ray index.
    pub fn ray_plane_indices(&self, ray: usize) -> (usize, usize) {
        let r = self.grid.resolution();
        (ray % r, ray / r)
    }

    pub fn ray(&self, iu: usize, iv: usize) -> Option<&RayProfile> {
        self.rays[self.ray_index(iu, iv)].as_ref()
    }

    pub fn rays(&self) -> &[Option<RayProfile>] {
        &self.rays
    }

    pub fn mask(&self, iu: usize, iv: usize) -> bool {
        self.ray(iu, iv).is_some()
    }

    pub fn masked_ray_count(&self) -> usize {
        self.rays.iter().filter(|r| r.is_some()).count()
    }

    /// Distance and derivative sign at world corner `(ix, iy, iz)`; `None`
    /// where the field is undefined.
    pub fn sample(&self, ix: usize, iy: usize, iz: usize) -> Option<(f64, i8)> {
        let idx = [ix, iy, iz];
        let (a, b) = self.direction.plane_axes();
        let s = idx[self.direction.axis()];
        self.ray(idx[a], idx[b]).map(|r| (r.distances[s], r.signs[s]))
    }

    pub fn distance(&self, ix: usize, iy: usize, iz: usize) -> Option<f64> {
        self.sample(ix, iy, iz).map(|(d, _)| d)
    }

    /// World position of sample `is` on ray `(iu, iv)`.
    pub fn sample_position(&self, iu: usize, iv: usize, is: usize) -> Vec3 {
        self.direction
            .compose(self.grid.coord(iu), self.grid.coord(iv), self.grid.coord(is))
    }
}

/// Exact UODF of `surface` along `direction`, by stabbing every lattice ray.
pub fn compute_uodf_gt(surface: &dyn Surface, grid: &GridSpec, direction: Direction) -> DirectionalField {
    let r = grid.resolution();
    let rays = (0..grid.ray_count())
        .into_par_iter()
        .map(|ray| {
            let (iu, iv) = (ray % r, ray / r);
            let origin = direction.compose(grid.coord(iu), grid.coord(iv), 0.0);
            let hits: Vec<f64> = surface.stab_axis(&origin, direction).ts().collect();
            (!hits.is_empty()).then(|| RayProfile::from_hits(hits, grid))
        })
        .collect();
    DirectionalField::new(direction, *grid, FieldSource::GroundTruth, rays)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Sdf,
    Udf,
}

impl ScalarKind {
    pub fn code(self) -> u8 {
        match self {
            ScalarKind::Sdf => 0,
            ScalarKind::Udf => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ScalarKind::Sdf),
            1 => Some(ScalarKind::Udf),
            _ => None,
        }
    }
}

/// Signed or unsigned distances at every lattice corner, x fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldGrid {
    kind: ScalarKind,
    grid: GridSpec,
    values: Vec<f64>,
    /// Set when the SDF sign could not be trusted everywhere.
    warning: Option<String>,
}

impl ScalarFieldGrid {
    pub fn new(kind: ScalarKind, grid: GridSpec, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.corner_count());
        ScalarFieldGrid {
            kind,
            grid,
            values,
            warning: None,
        }
    }

    /// Evaluate `f` at every corner.
    pub fn from_fn(kind: ScalarKind, grid: GridSpec, f: impl Fn(Vec3) -> f64 + Sync) -> Self {
        let r = grid.resolution();
        let values = (0..grid.corner_count())
            .into_par_iter()
            .map(|i| f(grid.corner(i % r, (i / r) % r, i / (r * r))))
            .collect();
        ScalarFieldGrid::new(kind, grid, values)
    }

    pub fn kind(&self) -> ScalarKind {
        self.kind
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        self.values[self.grid.index(ix, iy, iz)]
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }
}

/// Unsigned distance to the surface at every corner.
pub fn compute_udf_gt(surface: &dyn Surface, grid: &GridSpec) -> ScalarFieldGrid {
    ScalarFieldGrid::from_fn(ScalarKind::Udf, *grid, |p| surface.distance(&p))
}

/// Fraction of corners on odd-parity rays above which the SDF carries a warning.
pub const PARITY_WARNING_RATE: f64 = 1e-3;

/// Signed distance with the sign taken from crossing parity along `+x`:
/// an odd number of crossings ahead of a corner puts it inside (negative).
///
/// Meant for closed meshes. Rays with an odd total crossing count cannot be
/// consistent; when they cover more than [`PARITY_WARNING_RATE`] of the
/// corners a warning is attached, but values are still produced.
pub fn compute_sdf_gt(surface: &dyn Surface, grid: &GridSpec) -> ScalarFieldGrid {
    let r = grid.resolution();
    let mut values = vec![0.0; grid.corner_count()];
    let odd_rays: usize = values
        .par_chunks_mut(r)
        .enumerate()
        .map(|(ray, row)| {
            let (iy, iz) = (ray % r, ray / r);
            let origin = Vec3::new(0.0, grid.coord(iy), grid.coord(iz));
            let hits = surface.stab_axis(&origin, Direction::Lr);
            let crossings: Vec<f64> = hits
                .hits
                .iter()
                .filter(|h| h.kind != crate::mesh::HitKind::Touching)
                .map(|h| h.t)
                .collect();
            for (ix, value) in row.iter_mut().enumerate() {
                let p = grid.corner(ix, iy, iz);
                let udf = surface.distance(&p);
                let ahead = crossings.len() - crossings.partition_point(|&c| c <= p.x);
                *value = if ahead % 2 == 1 { -udf } else { udf };
            }
            crossings.len() % 2
        })
        .sum();
    let mut field = ScalarFieldGrid::new(ScalarKind::Sdf, *grid, values);
    let rate = odd_rays as f64 / grid.ray_count() as f64;
    if rate > PARITY_WARNING_RATE {
        let msg = format!(
            "{odd_rays} of {} x-rays have odd crossing parity ({:.3}% of corners); SDF signs are unreliable",
            grid.ray_count(),
            100.0 * rate
        );
        log::warn!("{msg}");
        field.warning = Some(msg);
    }
    field
}
