//! Exact line/triangle intersection and closest-point primitives.

use crate::geometry::Vec3;

/// Hits along one line closer than this (in parametric distance) are the same
/// surface crossing reported by neighbouring triangles.
pub const HIT_MERGE_TOLERANCE: f64 = 1e-9;

/// Orientation of a crossing relative to the ray direction, taken from the
/// triangle's winding normal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HitKind {
    Entering,
    Exiting,
    /// Collapsed hits of opposite orientation: the line grazes the surface.
    Touching,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    /// Signed parametric distance from the ray origin.
    pub t: f64,
    /// Triangle (or analytic primitive) that produced the hit.
    pub primitive: u32,
    pub kind: HitKind,
}

/// All crossings of a full line with a surface, sorted by `t`, with
/// duplicates from shared edges and vertices collapsed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RayHitList {
    pub hits: Vec<RayHit>,
}

impl RayHitList {
    pub fn from_raw(raw: Vec<RayHit>) -> Self {
        RayHitList { hits: dedup_hits(raw) }
    }

    pub fn is_empty(&self) -> bool {
        self.hits.is_empty()
    }

    pub fn len(&self) -> usize {
        self.hits.len()
    }

    pub fn ts(&self) -> impl Iterator<Item = f64> + '_ {
        self.hits.iter().map(|h| h.t)
    }

    /// Number of hits that actually cross the surface (grazing contacts excluded).
    pub fn crossing_count(&self) -> usize {
        self.hits.iter().filter(|h| h.kind != HitKind::Touching).count()
    }
}

/// Sort by `t` and collapse runs of hits whose `t` differ by less than
/// [`HIT_MERGE_TOLERANCE`] into the first hit of the run.
pub fn dedup_hits(mut raw: Vec<RayHit>) -> Vec<RayHit> {
    raw.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.primitive.cmp(&b.primitive)));
    let mut out: Vec<RayHit> = Vec::with_capacity(raw.len());
    for h in raw {
        match out.last_mut() {
            Some(last) if h.t - last.t < HIT_MERGE_TOLERANCE => {
                if last.kind != h.kind {
                    last.kind = HitKind::Touching;
                }
            }
            _ => out.push(h),
        }
    }
    out
}

/// Watertight intersection of the infinite line `origin + t * dir` with a
/// triangle.
///
/// Vertices are sheared into a ray-aligned frame and the three edge functions
/// are evaluated exactly as they would be for the neighbouring triangle, so a
/// line through a shared edge is reported by at least one of the two faces.
/// Lines parallel to the triangle plane report no hit.
pub fn intersect_line_triangle(origin: &Vec3, dir: &Vec3, tri: &[Vec3; 3]) -> Option<(f64, HitKind)> {
    let kz = dir.iamax();
    let mut kx = (kz + 1) % 3;
    let mut ky = (kx + 1) % 3;
    if dir[kz] < 0.0 {
        std::mem::swap(&mut kx, &mut ky);
    }
    let sx = dir[kx] / dir[kz];
    let sy = dir[ky] / dir[kz];
    let sz = 1.0 / dir[kz];

    let a = tri[0] - origin;
    let b = tri[1] - origin;
    let c = tri[2] - origin;

    let ax = a[kx] - sx * a[kz];
    let ay = a[ky] - sy * a[kz];
    let bx = b[kx] - sx * b[kz];
    let by = b[ky] - sy * b[kz];
    let cx = c[kx] - sx * c[kz];
    let cy = c[ky] - sy * c[kz];

    let u = cx * by - cy * bx;
    let v = ax * cy - ay * cx;
    let w = bx * ay - by * ax;

    if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
        return None;
    }
    let det = u + v + w;
    if det == 0.0 {
        return None;
    }
    let az = sz * a[kz];
    let bz = sz * b[kz];
    let cz = sz * c[kz];
    let t = (u * az + v * bz + w * cz) / det;

    let normal = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let kind = if normal.dot(dir) < 0.0 {
        HitKind::Entering
    } else {
        HitKind::Exiting
    };
    Some((t, kind))
}

/// Closest point on triangle `abc` to `p`.
pub fn closest_point_on_triangle(p: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Vec3 {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return a + ab * v;
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return a + ac * w;
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return b + (c - b) * w;
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    a + ab * v + ac * w
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> [Vec3; 3] {
        [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)]
    }

    #[test]
    fn hits_triangle_from_both_sides_of_the_line() {
        let (t, kind) = intersect_line_triangle(&Vec3::new(0.2, 0.2, 1.0), &Vec3::z(), &tri()).unwrap();
        assert_eq!(t, -1.0);
        assert_eq!(kind, HitKind::Exiting);
        let (t, kind) = intersect_line_triangle(&Vec3::new(0.2, 0.2, 1.0), &-Vec3::z(), &tri()).unwrap();
        assert_eq!(t, 1.0);
        assert_eq!(kind, HitKind::Entering);
    }

    #[test]
    fn coplanar_line_reports_nothing() {
        assert!(intersect_line_triangle(&Vec3::new(-1.0, 0.2, 0.0), &Vec3::x(), &tri()).is_none());
    }

    #[test]
    fn shared_edge_is_reported_and_collapses() {
        let t1 = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0)];
        let t2 = [Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 1.0, 0.0), Vec3::new(0.0, 1.0, 0.0)];
        let o = Vec3::new(0.5, 0.5, -1.0);
        let raw: Vec<RayHit> = [t1, t2]
            .iter()
            .enumerate()
            .filter_map(|(i, t)| {
                intersect_line_triangle(&o, &Vec3::z(), t).map(|(t, kind)| RayHit { t, primitive: i as u32, kind })
            })
            .collect();
        assert_eq!(raw.len(), 2);
        let list = RayHitList::from_raw(raw);
        assert_eq!(list.len(), 1);
        // counter-clockwise seen from below: normal +z, along the ray
        assert_eq!(list.hits[0].kind, HitKind::Exiting);
    }

    #[test]
    fn opposite_orientation_duplicates_become_touching() {
        let raw = vec![
            RayHit { t: 0.5, primitive: 0, kind: HitKind::Entering },
            RayHit { t: 0.5 + 1e-12, primitive: 1, kind: HitKind::Exiting },
            RayHit { t: 0.7, primitive: 2, kind: HitKind::Exiting },
        ];
        let d = dedup_hits(raw);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].kind, HitKind::Touching);
    }

    #[test]
    fn closest_point_regions() {
        let [a, b, c] = tri();
        let p = closest_point_on_triangle(&Vec3::new(0.2, 0.2, 3.0), &a, &b, &c);
        assert!((p - Vec3::new(0.2, 0.2, 0.0)).norm() < 1e-15);
        assert_eq!(closest_point_on_triangle(&Vec3::new(-1.0, -1.0, 0.0), &a, &b, &c), a);
        assert_eq!(closest_point_on_triangle(&Vec3::new(0.5, -1.0, 0.0), &a, &b, &c), Vec3::new(0.5, 0.0, 0.0));
        let p = closest_point_on_triangle(&Vec3::new(1.0, 1.0, 0.0), &a, &b, &c);
        assert!((p - Vec3::new(0.5, 0.5, 0.0)).norm() < 1e-15);
    }
}
