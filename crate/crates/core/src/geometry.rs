//! Small geometric vocabulary shared by every module.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub type Vec3 = nalgebra::Vector3<f64>;

/// One of the three orthogonal ray directions.
///
/// `Lr` runs along x, `Fb` along y and `Ud` along z. Rays of a direction are
/// indexed on the orthogonal plane by the two remaining axes in increasing
/// order, e.g. `(y, z)` for `Lr`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lr,
    Fb,
    Ud,
}

impl Direction {
    pub const ALL: [Direction; 3] = [Direction::Lr, Direction::Fb, Direction::Ud];

    /// Index of the coordinate axis this direction runs along.
    pub fn axis(self) -> usize {
        match self {
            Direction::Lr => 0,
            Direction::Fb => 1,
            Direction::Ud => 2,
        }
    }

    /// The two plane axes `(u, v)` indexing rays of this direction.
    pub fn plane_axes(self) -> (usize, usize) {
        match self {
            Direction::Lr => (1, 2),
            Direction::Fb => (0, 2),
            Direction::Ud => (0, 1),
        }
    }

    pub fn from_axis(axis: usize) -> Option<Direction> {
        Direction::ALL.get(axis).copied()
    }

    pub fn unit(self) -> Vec3 {
        let mut v = Vec3::zeros();
        v[self.axis()] = 1.0;
        v
    }

    /// Binary code used by the field file format.
    pub fn code(self) -> u8 {
        self.axis() as u8
    }

    pub fn from_code(code: u8) -> Option<Direction> {
        Direction::from_axis(code as usize)
    }

    pub fn name(self) -> &'static str {
        match self {
            Direction::Lr => "lr",
            Direction::Fb => "fb",
            Direction::Ud => "ud",
        }
    }

    /// Assemble a 3D point from plane coordinates and the along-ray coordinate.
    pub fn compose(self, u: f64, v: f64, s: f64) -> Vec3 {
        let (a, b) = self.plane_axes();
        let mut p = Vec3::zeros();
        p[a] = u;
        p[b] = v;
        p[self.axis()] = s;
        p
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "x" => Ok(Direction::Lr),
            "fb" | "y" => Ok(Direction::Fb),
            "ud" | "z" => Ok(Direction::Ud),
            other => Err(format!("unknown direction `{other}` (expected lr, fb or ud)")),
        }
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a Vec3>) -> Self {
        let mut b = Aabb::empty();
        for p in points {
            b.grow(p);
        }
        b
    }

    pub fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb {
            min: self.min.inf(&other.min),
            max: self.max.sup(&other.max),
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|i| self.min[i] > self.max[i])
    }

    /// Squared distance from `p` to the box (0 inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let v = if p[i] < self.min[i] {
                self.min[i] - p[i]
            } else if p[i] > self.max[i] {
                p[i] - self.max[i]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2
    }

    /// Whether the infinite line `origin + t * dir` touches the box.
    pub fn intersects_line(&self, origin: &Vec3, dir: &Vec3) -> bool {
        let mut t_lo = f64::NEG_INFINITY;
        let mut t_hi = f64::INFINITY;
        for i in 0..3 {
            if dir[i] == 0.0 {
                if origin[i] < self.min[i] || origin[i] > self.max[i] {
                    return false;
                }
            } else {
                let inv = 1.0 / dir[i];
                let mut t0 = (self.min[i] - origin[i]) * inv;
                let mut t1 = (self.max[i] - origin[i]) * inv;
                if t0 > t1 {
                    std::mem::swap(&mut t0, &mut t1);
                }
                // widen by a relative epsilon so boundary-grazing lines are not culled
                let pad = 1e-12 * (1.0 + t0.abs().max(t1.abs()));
                t_lo = t_lo.max(t0 - pad);
                t_hi = t_hi.min(t1 + pad);
                if t_lo > t_hi {
                    return false;
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_places_coordinates_on_their_axes() {
        let p = Direction::Fb.compose(0.1, 0.2, 0.3);
        assert_eq!(p, Vec3::new(0.1, 0.3, 0.2));
        let p = Direction::Lr.compose(0.1, 0.2, 0.3);
        assert_eq!(p, Vec3::new(0.3, 0.1, 0.2));
    }

    #[test]
    fn axis_aligned_line_box_test_is_inclusive() {
        let b = Aabb {
            min: Vec3::new(0.0, 0.0, 0.0),
            max: Vec3::new(1.0, 1.0, 1.0),
        };
        assert!(b.intersects_line(&Vec3::new(5.0, 1.0, 0.0), &Vec3::x()));
        assert!(!b.intersects_line(&Vec3::new(5.0, 1.0 + 1e-9, 0.0), &Vec3::x()));
    }
}
