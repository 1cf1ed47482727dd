use crate::geometry::Vec3;

const LEAF_SIZE: usize = 8;

#[derive(Debug, Clone)]
enum Node {
    Split { axis: u8, value: f64, left: u32, right: u32 },
    Leaf { start: u32, end: u32 },
}

/// Static 3D KD-tree for exact nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    nodes: Vec<Node>,
}

impl KdTree {
    pub fn build(points: &[Vec3]) -> KdTree {
        let mut pts = points.to_vec();
        let mut nodes = Vec::new();
        if !pts.is_empty() {
            let n = pts.len();
            build(&mut pts, 0, n, &mut nodes);
        }
        KdTree { points: pts, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Nearest stored point to `q` and its squared distance.
    pub fn nearest(&self, q: &Vec3) -> Option<(Vec3, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (self.points[0], f64::INFINITY);
        self.search(0, q, &mut best);
        Some(best)
    }

    fn search(&self, id: u32, q: &Vec3, best: &mut (Vec3, f64)) {
        match self.nodes[id as usize] {
            Node::Leaf { start, end } => {
                for p in &self.points[start as usize..end as usize] {
                    let d2 = (p - q).norm_squared();
                    if d2 < best.1 {
                        *best = (*p, d2);
                    }
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis as usize] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, best);
                if diff * diff <= best.1 {
                    self.search(far, q, best);
                }
            }
        }
    }
}

fn build(pts: &mut [Vec3], start: usize, end: usize, nodes: &mut Vec<Node>) -> u32 {
    let id = nodes.len() as u32;
    let slice = &mut pts[start..end];
    if slice.len() <= LEAF_SIZE {
        nodes.push(Node::Leaf {
            start: start as u32,
            end: end as u32,
        });
        return id;
    }
    let mut lo = slice[0];
    let mut hi = slice[0];
    for p in slice.iter() {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let axis = (hi - lo).imax();
    let mid = slice.len() / 2;
    slice.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    let value = slice[mid][axis];
    // left holds coordinates <= value and right >= value, so the plane
    // distance bounds both sides even with repeated coordinates
    nodes.push(Node::Leaf { start: 0, end: 0 });
    let left = build(pts, start, start + mid, nodes);
    let right = build(pts, start + mid, end, nodes);
    nodes[id as usize] = Node::Split {
        axis: axis as u8,
        value,
        left,
        right,
    };
    id
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_linear_scan_with_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        // coarse coordinates produce many ties on every axis
        let pts: Vec<Vec3> = (0..600)
            .map(|_| Vec3::new(rng.random_range(0..5) as f64, rng.random_range(0..5) as f64, rng.random::<f64>()))
            .collect();
        let tree = KdTree::build(&pts);
        for _ in 0..300 {
            let q = Vec3::new(rng.random_range(-1.0..6.0), rng.random_range(-1.0..6.0), rng.random_range(-1.0..2.0));
            let scan = pts.iter().map(|p| (p - q).norm_squared()).fold(f64::INFINITY, f64::min);
            assert_eq!(tree.nearest(&q).unwrap().1, scan);
        }
    }

    #[test]
    fn empty_tree_has_no_neighbour() {
        assert!(KdTree::build(&[]).nearest(&Vec3::zeros()).is_none());
    }
}
