//! Procedural test shapes.
//!
//! All shapes live inside the `[-1,1]^3` domain. Coordinates that must avoid
//! the sampling lattice (plate faces, box sides) are chosen off every lattice
//! with spacing `2 / 2^k` up to `k = 8`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::geometry::Vec3;
use crate::mesh::{normalize_mesh, TriangleMesh};
use crate::surface::{AxisBox, MeshSurface, Slab, Sphere, Surface, Union};

/// Center of the gap between the two close plates: midway between two lattice
/// planes at spacing 1/128.
pub const PLATES_GAP_CENTER: f64 = 12.5 / 128.0;
/// Half width of the gap between the plates (gap = 1/256).
pub const PLATES_GAP_HALF: f64 = 1.0 / 512.0;
pub const PLATES_HALF_EXTENT: f64 = 0.6;
pub const PLATES_THICKNESS: f64 = 0.25 - PLATES_GAP_HALF;

/// Analytic sphere of radius 0.9 at the origin.
pub fn sphere() -> Sphere {
    Sphere { center: Vec3::zeros(), radius: 0.9 }
}

/// Two solid plates whose facing sides are 1/256 apart, so both facing
/// surfaces fall between the same pair of lattice samples at every
/// resolution up to 257.
pub fn close_plates() -> Union {
    let e = PLATES_HALF_EXTENT;
    let c = PLATES_GAP_CENTER;
    let d = PLATES_GAP_HALF;
    let lower = AxisBox {
        min: Vec3::new(-e, -e, c - 0.25),
        max: Vec3::new(e, e, c - d),
    };
    let upper = AxisBox {
        min: Vec3::new(-e, -e, c + d),
        max: Vec3::new(e, e, c + 0.25),
    };
    Union::new(vec![Box::new(lower), Box::new(upper)])
}

/// Thick slab tilted 45 degrees about the y axis. Its SDF is affine along
/// every grid edge that crosses the surface.
pub fn tilted_slab() -> Slab {
    Slab::new(Vec3::new(1.0, 0.0, 1.0), 0.05, 0.3)
}

/// Subdivided icosahedron projected onto a sphere; outward winding.
pub fn icosphere(radius: f64, center: Vec3, subdivisions: u32) -> TriangleMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut cache: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, verts: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *cache.entry(key).or_insert_with(|| {
                verts.push(((verts[a as usize] + verts[b as usize]) * 0.5).normalize());
                verts.len() as u32 - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    let verts = verts.into_iter().map(|v| center + v * radius).collect();
    TriangleMesh::new(verts, faces).expect("icosphere indices are valid")
}

/// Closed box mesh with outward winding (8 vertices, 12 triangles).
pub fn cube_mesh(min: Vec3, max: Vec3) -> TriangleMesh {
    let v: Vec<Vec3> = (0..8)
        .map(|i| {
            Vec3::new(
                if i & 1 == 0 { min.x } else { max.x },
                if i & 2 == 0 { min.y } else { max.y },
                if i & 4 == 0 { min.z } else { max.z },
            )
        })
        .collect();
    let faces = vec![
        [0, 2, 1],
        [1, 2, 3],
        [4, 5, 6],
        [5, 7, 6],
        [0, 1, 4],
        [1, 5, 4],
        [2, 6, 3],
        [3, 6, 7],
        [0, 4, 2],
        [2, 4, 6],
        [1, 3, 5],
        [3, 7, 5],
    ];
    TriangleMesh::new(v, faces).expect("cube indices are valid")
}

/// Open square plate at height `z`, built from two coplanar quads that share
/// the edge `x = 0`.
pub fn plate_mesh(z: f64, half: f64) -> TriangleMesh {
    let v = vec![
        Vec3::new(-half, -half, z),
        Vec3::new(0.0, -half, z),
        Vec3::new(half, -half, z),
        Vec3::new(-half, half, z),
        Vec3::new(0.0, half, z),
        Vec3::new(half, half, z),
    ];
    let faces = vec![[0, 1, 4], [0, 4, 3], [1, 2, 5], [1, 5, 4]];
    TriangleMesh::new(v, faces).expect("plate indices are valid")
}

/// Open cylinder (no caps) along z; a non-watertight garment stand-in.
pub fn open_tube(radius: f64, half_height: f64, segments: u32, rings: u32) -> TriangleMesh {
    let mut v = Vec::new();
    for r in 0..=rings {
        let z = -half_height + 2.0 * half_height * r as f64 / rings as f64;
        for s in 0..segments {
            // irrational phase keeps seams off the lattice planes
            let a = std::f64::consts::TAU * (s as f64 + 0.1234) / segments as f64;
            v.push(Vec3::new(radius * a.cos(), radius * a.sin(), z));
        }
    }
    let mut faces = Vec::new();
    for r in 0..rings {
        for s in 0..segments {
            let i0 = r * segments + s;
            let i1 = r * segments + (s + 1) % segments;
            let j0 = i0 + segments;
            let j1 = i1 + segments;
            faces.push([i0, i1, j1]);
            faces.push([i0, j1, j0]);
        }
    }
    TriangleMesh::new(v, faces).expect("tube indices are valid")
}

/// Bumpy closed blob standing in for a scanned model: an icosphere with a
/// smooth radial displacement, normalized.
pub fn scanned_blob(subdivisions: u32) -> TriangleMesh {
    let base = icosphere(1.0, Vec3::zeros(), subdivisions);
    let verts: Vec<Vec3> = base
        .vertices()
        .iter()
        .map(|p| {
            let bump = 0.12 * (4.0 * p.x + 1.0).sin() * (3.0 * p.y + 2.0).sin() * (5.0 * p.z).cos()
                + 0.05 * (9.0 * p.x * p.y).sin()
                + 0.04 * (7.0 * p.z + 0.5).sin();
            p * (1.0 + bump) + Vec3::new(0.13, -0.07, 0.05)
        })
        .collect();
    let mesh = TriangleMesh::new(verts, base.triangles().to_vec()).expect("indices unchanged");
    normalize_mesh(&mesh).expect("blob is not degenerate")
}

/// Two concentric sphere meshes (radii 0.9 and 0.45) as one triangle soup.
pub fn nested_shells(subdivisions: u32) -> (TriangleMesh, TriangleMesh, TriangleMesh) {
    let outer = icosphere(0.9, Vec3::zeros(), subdivisions);
    let inner = icosphere(0.45, Vec3::new(0.0123, -0.0211, 0.0077), subdivisions);
    let both = outer.merged(&inner);
    (outer, inner, both)
}

/// Named shapes for the command line and the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fixture {
    Sphere,
    Plates,
    Slab,
    Blob,
    Shells,
}

impl Fixture {
    pub const ALL: [Fixture; 5] = [Fixture::Sphere, Fixture::Plates, Fixture::Slab, Fixture::Blob, Fixture::Shells];

    pub fn name(self) -> &'static str {
        match self {
            Fixture::Sphere => "sphere",
            Fixture::Plates => "plates",
            Fixture::Slab => "slab",
            Fixture::Blob => "blob",
            Fixture::Shells => "shells",
        }
    }

    /// Whether the shape is closed, so ray parity gives a valid SDF sign.
    pub fn is_watertight(self) -> bool {
        true
    }

    pub fn surface(self) -> Box<dyn Surface> {
        match self {
            Fixture::Sphere => Box::new(sphere()),
            Fixture::Plates => Box::new(close_plates()),
            Fixture::Slab => Box::new(tilted_slab()),
            Fixture::Blob => Box::new(MeshSurface::new(scanned_blob(4))),
            Fixture::Shells => Box::new(MeshSurface::new(nested_shells(3).2)),
        }
    }
}

impl fmt::Display for Fixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Fixture {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Fixture::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown fixture `{s}`"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::HitKind;

    #[test]
    fn icosphere_vertices_on_radius_and_outward() {
        let m = icosphere(0.9, Vec3::zeros(), 2);
        assert_eq!(m.triangles().len(), 320);
        for v in m.vertices() {
            assert!((v.norm() - 0.9).abs() < 1e-14);
        }
        for i in 0..m.triangles().len() {
            let [a, b, c] = m.triangle(i);
            assert!((b - a).cross(&(c - a)).dot(&a) > 0.0);
        }
    }

    #[test]
    fn cube_faces_point_outward() {
        let m = cube_mesh(Vec3::zeros(), Vec3::repeat(1.0));
        let center = Vec3::repeat(0.5);
        for i in 0..12 {
            let [a, b, c] = m.triangle(i);
            let centroid = (a + b + c) / 3.0;
            assert!((b - a).cross(&(c - a)).dot(&(centroid - center)) > 0.0);
        }
    }

    #[test]
    fn plates_gap_sits_between_lattice_planes() {
        let plates = close_plates();
        let hits = plates.stab_axis(&Vec3::new(0.0, 0.0, 0.0), crate::geometry::Direction::Ud);
        let zs: Vec<f64> = hits.ts().collect();
        assert_eq!(zs.len(), 4);
        let lo = (zs[1] * 128.0).floor();
        assert_eq!(lo, (zs[2] * 128.0).floor());
        assert_eq!(hits.hits[1].kind, HitKind::Exiting);
        assert_eq!(hits.hits[2].kind, HitKind::Entering);
    }

    #[test]
    fn blob_is_normalized() {
        let m = scanned_blob(3);
        assert!((m.max_radius_about(&Vec3::zeros()) - 0.9).abs() < 1e-12);
    }
}
