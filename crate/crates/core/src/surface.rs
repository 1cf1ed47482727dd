//! Ground-truth surfaces.
//!
//! Everything downstream (field generation, evaluation, the benchmark) talks
//! to a [`Surface`]: a triangle mesh behind a BVH, or a closed-form shape whose
//! crossings and distances are exact.

use rand::{Rng, RngCore};
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{Aabb, Direction, Vec3};
use crate::mesh::{Bvh, HitKind, RayHit, RayHitList, TriangleMesh};

pub trait Surface: Send + Sync {
    /// Crossings of the full line through `origin` parallel to `direction`.
    /// `t` is the signed offset along the positive axis, so the crossing's
    /// axis coordinate is `origin[axis] + t`.
    fn stab_axis(&self, origin: &Vec3, direction: Direction) -> RayHitList;

    /// Euclidean distance from `p` to the surface.
    fn distance(&self, p: &Vec3) -> f64;

    fn area(&self) -> f64;

    /// `n` points distributed uniformly by area.
    fn sample_surface(&self, n: usize, rng: &mut dyn RngCore) -> Vec<Vec3>;
}

/// A triangle mesh with its acceleration structure.
#[derive(Debug, Clone)]
pub struct MeshSurface {
    mesh: TriangleMesh,
    bvh: Bvh,
}

impl MeshSurface {
    pub fn new(mesh: TriangleMesh) -> Self {
        let bvh = Bvh::build(&mesh);
        MeshSurface { mesh, bvh }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn bvh(&self) -> &Bvh {
        &self.bvh
    }

    /// Per-triangle sample counts of an area-weighted draw, for diagnostics.
    pub fn sample_triangle_ids(&self, n: usize, rng: &mut dyn RngCore) -> Vec<usize> {
        let cdf = self.area_cdf();
        let total = *cdf.last().unwrap_or(&0.0);
        (0..n)
            .map(|_| {
                let x = rng.random::<f64>() * total;
                cdf.partition_point(|&c| c <= x).min(cdf.len() - 1)
            })
            .collect()
    }

    fn area_cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        (0..self.mesh.triangles().len())
            .map(|i| {
                if !self.mesh.is_degenerate(i) {
                    acc += self.mesh.triangle_area(i);
                }
                acc
            })
            .collect()
    }
}

impl Surface for MeshSurface {
    fn stab_axis(&self, origin: &Vec3, direction: Direction) -> RayHitList {
        self.bvh.stab_ray(&self.mesh, origin, &direction.unit())
    }

    fn distance(&self, p: &Vec3) -> f64 {
        self.bvh
            .closest_point(&self.mesh, p)
            .map_or(f64::INFINITY, |(q, _)| (q - p).norm())
    }

    fn area(&self) -> f64 {
        self.mesh.surface_area()
    }

    fn sample_surface(&self, n: usize, rng: &mut dyn RngCore) -> Vec<Vec3> {
        let ids = self.sample_triangle_ids(n, rng);
        ids.into_iter()
            .map(|t| {
                let [a, b, c] = self.mesh.triangle(t);
                uniform_in_triangle(&a, &b, &c, rng)
            })
            .collect()
    }
}

fn uniform_in_triangle(a: &Vec3, b: &Vec3, c: &Vec3, rng: &mut dyn RngCore) -> Vec3 {
    let r1: f64 = rng.random::<f64>().sqrt();
    let r2: f64 = rng.random();
    a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2)
}

/// Closed-form sphere.
#[derive(Debug, Clone, Copy)]
pub struct Sphere {
    pub center: Vec3,
    pub radius: f64,
}

impl Surface for Sphere {
    fn stab_axis(&self, origin: &Vec3, direction: Direction) -> RayHitList {
        let a = direction.axis();
        let (u, v) = direction.plane_axes();
        let du = origin[u] - self.center[u];
        let dv = origin[v] - self.center[v];
        let disc = self.radius * self.radius - (du * du + dv * dv);
        if disc < 0.0 {
            return RayHitList::default();
        }
        let half = disc.sqrt();
        let lo = self.center[a] - half - origin[a];
        let hi = self.center[a] + half - origin[a];
        if half == 0.0 {
            return RayHitList {
                hits: vec![RayHit { t: lo, primitive: 0, kind: HitKind::Touching }],
            };
        }
        RayHitList::from_raw(vec![
            RayHit { t: lo, primitive: 0, kind: HitKind::Entering },
            RayHit { t: hi, primitive: 0, kind: HitKind::Exiting },
        ])
    }

    fn distance(&self, p: &Vec3) -> f64 {
        ((p - self.center).norm() - self.radius).abs()
    }

    fn area(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.radius * self.radius
    }

    fn sample_surface(&self, n: usize, mut rng: &mut dyn RngCore) -> Vec<Vec3> {
        (0..n)
            .map(|_| loop {
                let g = Vec3::new(
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                    StandardNormal.sample(&mut rng),
                );
                let len = g.norm();
                if len > 1e-12 {
                    break self.center + g * (self.radius / len);
                }
            })
            .collect()
    }
}

/// Solid axis-aligned box.
#[derive(Debug, Clone, Copy)]
pub struct AxisBox {
    pub min: Vec3,
    pub max: Vec3,
}

impl AxisBox {
    fn faces(&self) -> [(usize, f64, f64); 6] {
        let e = self.max - self.min;
        [
            (0, self.min[0], e[1] * e[2]),
            (0, self.max[0], e[1] * e[2]),
            (1, self.min[1], e[0] * e[2]),
            (1, self.max[1], e[0] * e[2]),
            (2, self.min[2], e[0] * e[1]),
            (2, self.max[2], e[0] * e[1]),
        ]
    }
}

impl Surface for AxisBox {
    fn stab_axis(&self, origin: &Vec3, direction: Direction) -> RayHitList {
        let a = direction.axis();
        let (u, v) = direction.plane_axes();
        let strictly_inside =
            |k: usize| origin[k] > self.min[k] && origin[k] < self.max[k];
        // lines running inside a face plane are tangent and report nothing
        if !(strictly_inside(u) && strictly_inside(v)) {
            return RayHitList::default();
        }
        RayHitList::from_raw(vec![
            RayHit { t: self.min[a] - origin[a], primitive: 2 * a as u32, kind: HitKind::Entering },
            RayHit { t: self.max[a] - origin[a], primitive: 2 * a as u32 + 1, kind: HitKind::Exiting },
        ])
    }

    fn distance(&self, p: &Vec3) -> f64 {
        let bbox = Aabb { min: self.min, max: self.max };
        let outside = bbox.distance_squared(p);
        if outside > 0.0 {
            return outside.sqrt();
        }
        (0..3)
            .map(|k| (p[k] - self.min[k]).min(self.max[k] - p[k]))
            .fold(f64::INFINITY, f64::min)
    }

    fn area(&self) -> f64 {
        self.faces().iter().map(|f| f.2).sum()
    }

    fn sample_surface(&self, n: usize, rng: &mut dyn RngCore) -> Vec<Vec3> {
        let faces = self.faces();
        let total = self.area();
        (0..n)
            .map(|_| {
                let mut x = rng.random::<f64>() * total;
                let mut face = faces[5];
                for f in faces {
                    if x < f.2 {
                        face = f;
                        break;
                    }
                    x -= f.2;
                }
                let mut p = Vec3::zeros();
                for k in 0..3 {
                    p[k] = if k == face.0 {
                        face.1
                    } else {
                        self.min[k] + rng.random::<f64>() * (self.max[k] - self.min[k])
                    };
                }
                p
            })
            .collect()
    }
}

/// Solid slab `|n·p - offset| <= half_thickness`, restricted to the `[-1,1]^3`
/// domain for area and sampling.
#[derive(Debug, Clone)]
pub struct Slab {
    normal: Vec3,
    offset: f64,
    half_thickness: f64,
    /// Domain-clipped face polygons, used for area and sampling.
    faces: [Vec<Vec3>; 2],
}

impl Slab {
    pub fn new(normal: Vec3, offset: f64, half_thickness: f64) -> Self {
        let normal = normal.normalize();
        let faces = [
            clip_plane_to_domain(&normal, offset - half_thickness),
            clip_plane_to_domain(&normal, offset + half_thickness),
        ];
        Slab {
            normal,
            offset,
            half_thickness,
            faces,
        }
    }

    pub fn signed_distance(&self, p: &Vec3) -> f64 {
        (self.normal.dot(p) - self.offset).abs() - self.half_thickness
    }
}

impl Surface for Slab {
    fn stab_axis(&self, origin: &Vec3, direction: Direction) -> RayHitList {
        let a = direction.axis();
        let na = self.normal[a];
        if na == 0.0 {
            return RayHitList::default();
        }
        let base = self.normal.dot(origin);
        let t0 = (self.offset - self.half_thickness - base) / na;
        let t1 = (self.offset + self.half_thickness - base) / na;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        RayHitList::from_raw(vec![
            RayHit { t: lo, primitive: 0, kind: HitKind::Entering },
            RayHit { t: hi, primitive: 1, kind: HitKind::Exiting },
        ])
    }

    fn distance(&self, p: &Vec3) -> f64 {
        self.signed_distance(p).abs()
    }

    fn area(&self) -> f64 {
        self.faces.iter().map(|f| polygon_area(f)).sum()
    }

    fn sample_surface(&self, n: usize, rng: &mut dyn RngCore) -> Vec<Vec3> {
        // fan-triangulate both face polygons and sample by area
        let tris: Vec<[Vec3; 3]> = self
            .faces
            .iter()
            .flat_map(|f| (1..f.len().saturating_sub(1)).map(move |k| [f[0], f[k], f[k + 1]]))
            .collect();
        let areas: Vec<f64> = tris.iter().map(|t| 0.5 * (t[1] - t[0]).cross(&(t[2] - t[0])).norm()).collect();
        let total: f64 = areas.iter().sum();
        (0..n)
            .map(|_| {
                let mut x = rng.random::<f64>() * total;
                let mut pick = tris.len() - 1;
                for (i, a) in areas.iter().enumerate() {
                    if x < *a {
                        pick = i;
                        break;
                    }
                    x -= a;
                }
                let [a, b, c] = tris[pick];
                uniform_in_triangle(&a, &b, &c, rng)
            })
            .collect()
    }
}

fn polygon_area(poly: &[Vec3]) -> f64 {
    (1..poly.len().saturating_sub(1))
        .map(|k| 0.5 * (poly[k] - poly[0]).cross(&(poly[k + 1] - poly[0])).norm())
        .sum()
}

/// Polygon of the plane `n·p = d` inside the cube `[-1,1]^3`.
fn clip_plane_to_domain(normal: &Vec3, d: f64) -> Vec<Vec3> {
    // a large square in the plane, then Sutherland-Hodgman against six half-spaces
    let helper = if normal.x.abs() < 0.9 { Vec3::x() } else { Vec3::y() };
    let e1 = normal.cross(&helper).normalize();
    let e2 = normal.cross(&e1);
    let c = normal * d;
    let big = 4.0;
    let mut poly = vec![
        c + (e1 + e2) * big,
        c + (-e1 + e2) * big,
        c + (-e1 - e2) * big,
        c + (e1 - e2) * big,
    ];
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            // keep sign * p[axis] <= 1
            let inside = |p: &Vec3| sign * p[axis] <= 1.0;
            let mut out = Vec::new();
            for i in 0..poly.len() {
                let cur = poly[i];
                let next = poly[(i + 1) % poly.len()];
                let (ci, ni) = (inside(&cur), inside(&next));
                if ci {
                    out.push(cur);
                }
                if ci != ni {
                    let s = (1.0 - sign * cur[axis]) / (sign * (next[axis] - cur[axis]));
                    out.push(cur + (next - cur) * s);
                }
            }
            poly = out;
            if poly.is_empty() {
                return poly;
            }
        }
    }
    poly
}

/// Disjoint union of surfaces: crossings are merged, distance is the minimum.
pub struct Union {
    parts: Vec<Box<dyn Surface>>,
}

impl Union {
    pub fn new(parts: Vec<Box<dyn Surface>>) -> Self {
        Union { parts }
    }

    pub fn parts(&self) -> &[Box<dyn Surface>] {
        &self.parts
    }
}

impl Surface for Union {
    fn stab_axis(&self, origin: &Vec3, direction: Direction) -> RayHitList {
        let mut raw = Vec::new();
        for (k, part) in self.parts.iter().enumerate() {
            raw.extend(part.stab_axis(origin, direction).hits.into_iter().map(|mut h| {
                h.primitive += (k as u32) << 24;
                h
            }));
        }
        RayHitList::from_raw(raw)
    }

    fn distance(&self, p: &Vec3) -> f64 {
        self.parts.iter().map(|s| s.distance(p)).fold(f64::INFINITY, f64::min)
    }

    fn area(&self) -> f64 {
        self.parts.iter().map(|s| s.area()).sum()
    }

    fn sample_surface(&self, n: usize, rng: &mut dyn RngCore) -> Vec<Vec3> {
        let areas: Vec<f64> = self.parts.iter().map(|s| s.area()).collect();
        let total: f64 = areas.iter().sum();
        let mut counts = vec![0usize; self.parts.len()];
        for _ in 0..n {
            let mut x = rng.random::<f64>() * total;
            let mut pick = counts.len() - 1;
            for (i, a) in areas.iter().enumerate() {
                if x < *a {
                    pick = i;
                    break;
                }
                x -= a;
            }
            counts[pick] += 1;
        }
        self.parts
            .iter()
            .zip(counts)
            .flat_map(|(s, c)| s.sample_surface(c, rng))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sphere_axis_line_crossings_closed_form() {
        let s = Sphere { center: Vec3::zeros(), radius: 0.9 };
        let hits = s.stab_axis(&Vec3::new(0.2, 0.0, 0.0), Direction::Lr);
        let ts: Vec<f64> = hits.ts().collect();
        assert!((ts[0] + 1.1).abs() < 1e-15);
        assert!((ts[1] - 0.7).abs() < 1e-15);
        assert!(s.stab_axis(&Vec3::new(0.0, 0.95, 0.0), Direction::Lr).is_empty());
    }

    #[test]
    fn box_distance_inside_and_outside() {
        let b = AxisBox { min: Vec3::repeat(-0.5), max: Vec3::repeat(0.5) };
        assert!((b.distance(&Vec3::new(0.1, 0.0, 0.0)) - 0.4).abs() < 1e-15);
        assert!((b.distance(&Vec3::new(1.5, 1.5, 0.0)) - 2f64.sqrt()).abs() < 1e-15);
        assert!((b.area() - 6.0).abs() < 1e-15);
    }

    #[test]
    fn slab_clipped_faces_have_expected_area() {
        // plane z = 0 clipped to the domain is the 2x2 square
        let slab = Slab::new(Vec3::z(), 0.0, 0.25);
        assert!((slab.area() - 8.0).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for p in slab.sample_surface(200, &mut rng) {
            assert!(slab.distance(&p) < 1e-12);
            assert!(p.iter().all(|c| c.abs() <= 1.0 + 1e-12));
        }
    }

    #[test]
    fn sphere_samples_lie_on_surface() {
        let s = Sphere { center: Vec3::new(0.1, 0.0, 0.0), radius: 0.5 };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for p in s.sample_surface(100, &mut rng) {
            assert!(s.distance(&p) < 1e-14);
        }
    }
}
