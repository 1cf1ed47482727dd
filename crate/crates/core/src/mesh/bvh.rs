use super::intersect::{closest_point_on_triangle, intersect_line_triangle, RayHit, RayHitList};
use super::TriangleMesh;
use crate::geometry::{Aabb, Vec3};

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone)]
pub enum BvhNode {
    Inner { bbox: Aabb, left: u32, right: u32 },
    Leaf { bbox: Aabb, start: u32, count: u32 },
}

impl BvhNode {
    pub fn bbox(&self) -> &Aabb {
        match self {
            BvhNode::Inner { bbox, .. } | BvhNode::Leaf { bbox, .. } => bbox,
        }
    }
}

/// Median-split bounding volume hierarchy over the non-degenerate triangles
/// of a mesh. Immutable once built.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    /// Triangle ids in leaf order; leaves reference contiguous ranges.
    order: Vec<u32>,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Bvh {
        let mut items: Vec<(u32, Aabb, Vec3)> = (0..mesh.triangles().len())
            .filter(|&i| !mesh.is_degenerate(i))
            .map(|i| {
                let tri = mesh.triangle(i);
                let bbox = Aabb::from_points(&tri);
                (i as u32, bbox, bbox.center())
            })
            .collect();
        let mut nodes = Vec::with_capacity(2 * items.len() / LEAF_SIZE + 1);
        if !items.is_empty() {
            let n = items.len();
            build_recursive(&mut items, 0, n, &mut nodes);
        }
        let order = items.iter().map(|it| it.0).collect();
        Bvh { nodes, order }
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    /// Triangle ids in leaf order.
    pub fn triangle_order(&self) -> &[u32] {
        &self.order
    }

    fn leaf_triangles(&self, start: u32, count: u32) -> &[u32] {
        &self.order[start as usize..(start + count) as usize]
    }

    /// Every crossing of the full line `origin + t * direction` with the mesh,
    /// sorted by `t` with shared-edge duplicates collapsed.
    pub fn stab_ray(&self, mesh: &TriangleMesh, origin: &Vec3, direction: &Vec3) -> RayHitList {
        let mut raw = Vec::new();
        if self.nodes.is_empty() {
            return RayHitList::default();
        }
        let mut stack = vec![0u32];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id as usize];
            if !node.bbox().intersects_line(origin, direction) {
                continue;
            }
            match *node {
                BvhNode::Inner { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
                BvhNode::Leaf { start, count, .. } => {
                    for &tri in self.leaf_triangles(start, count) {
                        if let Some((t, kind)) = intersect_line_triangle(origin, direction, &mesh.triangle(tri as usize)) {
                            raw.push(RayHit { t, primitive: tri, kind });
                        }
                    }
                }
            }
        }
        RayHitList::from_raw(raw)
    }

    /// Closest point on the mesh surface to `p`, with its triangle id.
    pub fn closest_point(&self, mesh: &TriangleMesh, p: &Vec3) -> Option<(Vec3, u32)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best_d2 = f64::INFINITY;
        let mut best = None;
        let mut stack = vec![(0u32, self.nodes[0].bbox().distance_squared(p))];
        while let Some((id, lower)) = stack.pop() {
            if lower > best_d2 {
                continue;
            }
            match self.nodes[id as usize] {
                BvhNode::Inner { left, right, .. } => {
                    let dl = self.nodes[left as usize].bbox().distance_squared(p);
                    let dr = self.nodes[right as usize].bbox().distance_squared(p);
                    // visit the nearer child first
                    if dl <= dr {
                        stack.push((right, dr));
                        stack.push((left, dl));
                    } else {
                        stack.push((left, dl));
                        stack.push((right, dr));
                    }
                }
                BvhNode::Leaf { start, count, .. } => {
                    for &tri in self.leaf_triangles(start, count) {
                        let [a, b, c] = mesh.triangle(tri as usize);
                        let q = closest_point_on_triangle(p, &a, &b, &c);
                        let d2 = (q - p).norm_squared();
                        if d2 < best_d2 {
                            best_d2 = d2;
                            best = Some((q, tri));
                        }
                    }
                }
            }
        }
        best
    }
}

fn build_recursive(items: &mut [(u32, Aabb, Vec3)], start: usize, end: usize, nodes: &mut Vec<BvhNode>) -> u32 {
    let slice = &mut items[start..end];
    let bbox = slice.iter().fold(Aabb::empty(), |acc, it| acc.union(&it.1));
    let id = nodes.len() as u32;
    if slice.len() <= LEAF_SIZE {
        nodes.push(BvhNode::Leaf {
            bbox,
            start: start as u32,
            count: slice.len() as u32,
        });
        return id;
    }
    let centroids = Aabb::from_points(slice.iter().map(|it| &it.2));
    let axis = centroids.extent().imax();
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| a.2[axis].total_cmp(&b.2[axis]));
    // placeholder, patched once both children exist
    nodes.push(BvhNode::Leaf { bbox, start: 0, count: 0 });
    let left = build_recursive(items, start, start + mid, nodes);
    let right = build_recursive(items, start + mid, end, nodes);
    nodes[id as usize] = BvhNode::Inner { bbox, left, right };
    id
}
