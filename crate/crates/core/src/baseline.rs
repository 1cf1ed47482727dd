//! Edge-interpolation baselines on corner grids.
//!
//! Both extract at most one point per lattice edge by assuming the field is
//! linear along the edge, as marching cubes does.
//!
//! * [`mc_gep_from_sdf`]: sign change of the SDF (`value < 0` is inside).
//! * [`udf_gradient_sign_gep`]: a simplified gradient-sign scheme for UDFs.
//!   An edge is crossed when the central-difference gradients at its ends
//!   point away from each other; the crossing is placed by interpolating the
//!   unsigned magnitudes.

use rayon::prelude::*;

use crate::field::{GridSpec, ScalarFieldGrid, ScalarKind};
use crate::geometry::{Direction, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeCrossing {
    /// Lower corner of the edge.
    pub corner: [u32; 3],
    pub axis: u8,
    /// Position along the edge in `[0, 1]`.
    pub t: f64,
    pub point: Vec3,
}

/// Zero of the linear interpolant between `d0` and `d1`.
pub fn edge_crossing_t(d0: f64, d1: f64) -> f64 {
    d0 / (d0 - d1)
}

/// Crossing parameter on unsigned magnitudes; `0.5` when both vanish.
pub fn unsigned_crossing_t(d0: f64, d1: f64) -> f64 {
    let (a, b) = (d0.abs(), d1.abs());
    if a + b == 0.0 {
        0.5
    } else {
        a / (a + b)
    }
}

fn crossing(grid: &GridSpec, c: [usize; 3], axis: usize, t: f64) -> EdgeCrossing {
    let p0 = grid.corner(c[0], c[1], c[2]);
    let mut c1 = c;
    c1[axis] += 1;
    let p1 = grid.corner(c1[0], c1[1], c1[2]);
    let mut point = p0;
    point[axis] = (1.0 - t) * p0[axis] + t * p1[axis];
    EdgeCrossing {
        corner: c.map(|v| v as u32),
        axis: axis as u8,
        t,
        point,
    }
}

/// Visit every lattice edge in parallel, in a fixed order (corner index, then axis).
fn scan_edges<F>(grid: &GridSpec, f: F) -> Vec<EdgeCrossing>
where
    F: Fn([usize; 3], [usize; 3], usize) -> Option<f64> + Sync,
{
    let r = grid.resolution();
    (0..grid.corner_count())
        .into_par_iter()
        .flat_map_iter(|i| {
            let c = [i % r, (i / r) % r, i / (r * r)];
            let f = &f;
            (0..3).filter_map(move |axis| {
                if c[axis] + 1 >= r {
                    return None;
                }
                let mut c1 = c;
                c1[axis] += 1;
                f(c, c1, axis).map(|t| crossing(grid, c, axis, t))
            })
        })
        .collect()
}

/// One point per edge whose endpoint signs differ.
pub fn mc_gep_from_sdf(sdf: &ScalarFieldGrid) -> Vec<EdgeCrossing> {
    assert_eq!(sdf.kind(), ScalarKind::Sdf, "marching-cubes edges need a signed field");
    let grid = sdf.grid();
    scan_edges(&grid, |c0, c1, _| {
        let d0 = sdf.value(c0[0], c0[1], c0[2]);
        let d1 = sdf.value(c1[0], c1[1], c1[2]);
        ((d0 < 0.0) != (d1 < 0.0)).then(|| edge_crossing_t(d0, d1))
    })
}

/// Central-difference gradient at every corner, one-sided on the boundary.
pub fn udf_gradients(udf: &ScalarFieldGrid) -> Vec<Vec3> {
    let grid = udf.grid();
    let r = grid.resolution();
    let h = grid.spacing();
    (0..grid.corner_count())
        .into_par_iter()
        .map(|i| {
            let c = [i % r, (i / r) % r, i / (r * r)];
            let mut g = Vec3::zeros();
            for axis in 0..3 {
                let (mut lo, mut hi) = (c, c);
                lo[axis] = c[axis].saturating_sub(1);
                hi[axis] = (c[axis] + 1).min(r - 1);
                let steps = (hi[axis] - lo[axis]) as f64;
                g[axis] = (udf.value(hi[0], hi[1], hi[2]) - udf.value(lo[0], lo[1], lo[2])) / (steps * h);
            }
            g
        })
        .collect()
}

/// Edges whose endpoint gradients oppose (negative dot product), restricted
/// to edges short enough to contain a surface point (`d0 + d1 <= spacing`).
pub fn udf_gradient_sign_gep(udf: &ScalarFieldGrid) -> Vec<EdgeCrossing> {
    assert_eq!(udf.kind(), ScalarKind::Udf, "gradient-sign edges need an unsigned field");
    let grid = udf.grid();
    assert!(grid.resolution() >= 3, "central differences need at least 3 corners per axis");
    let grads = udf_gradients(udf);
    let reach = grid.spacing() * (1.0 + 1e-9);
    scan_edges(&grid, |c0, c1, _| {
        let d0 = udf.value(c0[0], c0[1], c0[2]);
        let d1 = udf.value(c1[0], c1[1], c1[2]);
        if d0.abs() + d1.abs() > reach {
            return None;
        }
        let g0 = grads[grid.index(c0[0], c0[1], c0[2])];
        let g1 = grads[grid.index(c1[0], c1[1], c1[2])];
        (g0.dot(&g1) < 0.0).then(|| unsigned_crossing_t(d0, d1))
    })
}

pub fn crossing_points(crossings: &[EdgeCrossing]) -> Vec<Vec3> {
    crossings.iter().map(|c| c.point).collect()
}

/// Crossings on the lattice edge of `direction` through plane indices
/// `(iu, iv)` between axis samples `is` and `is + 1`.
pub fn crossings_on_edge(crossings: &[EdgeCrossing], direction: Direction, iu: usize, iv: usize, is: usize) -> usize {
    let (a, b) = direction.plane_axes();
    let axis = direction.axis();
    crossings
        .iter()
        .filter(|c| {
            c.axis as usize == axis
                && c.corner[a] as usize == iu
                && c.corner[b] as usize == iv
                && c.corner[axis] as usize == is
        })
        .count()
}
