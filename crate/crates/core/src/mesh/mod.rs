//! Triangle meshes: loading, validation, normalization and exact ray stabbing.

mod bvh;
mod intersect;
mod io;

use std::path::PathBuf;

use thiserror::Error;

use crate::geometry::{Aabb, Vec3};

pub use bvh::{Bvh, BvhNode};
pub use intersect::{
    closest_point_on_triangle, dedup_hits, intersect_line_triangle, HitKind, RayHit, RayHitList,
    HIT_MERGE_TOLERANCE,
};
pub use io::{load_mesh, MeshFormat};

/// Radius of the bounding sphere after [`normalize_mesh`].
pub const NORMALIZED_RADIUS: f64 = 0.9;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("face {face} references vertex {index} but the mesh has {vertex_count} vertices")]
    IndexOutOfRange {
        face: usize,
        index: i64,
        vertex_count: usize,
    },
    #[error("{path} contains no triangles")]
    Empty { path: PathBuf },
    #[error("every triangle of the mesh is degenerate")]
    AllDegenerate,
    #[error("unsupported mesh format `{extension}` (expected obj or ply)")]
    UnsupportedFormat { extension: String },
}

/// Indexed triangle soup.
///
/// Triangles with zero area are kept (indices stay stable) but flagged and
/// never take part in intersection or distance queries.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    degenerate: Vec<bool>,
    bbox: Aabb,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<Self, MeshError> {
        let n = vertices.len();
        for (face, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i as usize >= n) {
                return Err(MeshError::IndexOutOfRange {
                    face,
                    index: bad as i64,
                    vertex_count: n,
                });
            }
        }
        let degenerate = triangles
            .iter()
            .map(|t| is_degenerate(&vertices[t[0] as usize], &vertices[t[1] as usize], &vertices[t[2] as usize]))
            .collect();
        let bbox = Aabb::from_points(&vertices);
        Ok(TriangleMesh {
            vertices,
            triangles,
            degenerate,
            bbox,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn bbox(&self) -> Aabb {
        self.bbox
    }

    pub fn is_degenerate(&self, triangle: usize) -> bool {
        self.degenerate[triangle]
    }

    pub fn degenerate_count(&self) -> usize {
        self.degenerate.iter().filter(|&&d| d).count()
    }

    pub fn triangle(&self, index: usize) -> [Vec3; 3] {
        let t = self.triangles[index];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn triangle_area(&self, index: usize) -> f64 {
        let [a, b, c] = self.triangle(index);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    /// Concatenate two meshes into one triangle soup.
    pub fn merged(&self, other: &TriangleMesh) -> TriangleMesh {
        let offset = self.vertices.len() as u32;
        let mut vertices = self.vertices.clone();
        vertices.extend_from_slice(&other.vertices);
        let mut triangles = self.triangles.clone();
        triangles.extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
        TriangleMesh::new(vertices, triangles).expect("offset indices stay in range")
    }

    /// Largest vertex distance from `center`.
    pub fn max_radius_about(&self, center: &Vec3) -> f64 {
        self.vertices.iter().map(|v| (v - center).norm()).fold(0.0, f64::max)
    }
}

fn is_degenerate(a: &Vec3, b: &Vec3, c: &Vec3) -> bool {
    let e0 = b - a;
    let e1 = c - a;
    let scale = e0.norm_squared().max(e1.norm_squared()).max((c - b).norm_squared());
    let cross = e0.cross(&e1).norm();
    scale == 0.0 || cross <= 1e-14 * scale
}

/// Translate the bounding-box center to the origin and scale uniformly so the
/// farthest vertex lies at distance [`NORMALIZED_RADIUS`].
pub fn normalize_mesh(mesh: &TriangleMesh) -> Result<TriangleMesh, MeshError> {
    if mesh.triangles.is_empty() || mesh.degenerate.iter().all(|&d| d) {
        return Err(MeshError::AllDegenerate);
    }
    let center = mesh.bbox.center();
    let radius = mesh.max_radius_about(&center);
    if radius == 0.0 || !radius.is_finite() {
        return Err(MeshError::AllDegenerate);
    }
    let scale = NORMALIZED_RADIUS / radius;
    let vertices = mesh.vertices.iter().map(|v| (v - center) * scale).collect();
    TriangleMesh::new(vertices, mesh.triangles.clone())
}
