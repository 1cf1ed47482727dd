//! Grid-edge-point (GEP) reconstruction from sampled UODFs.
//!
//! Every sample on a ray predicts the position of its nearest crossing as
//! `pos - sign * dist`. Runs of samples with the same derivative sign look at
//! the same crossing, so each run is averaged into one estimate; neighbouring
//! estimates closer than `tau` are merged. The three directions are then
//! fused by dropping points without enough support on nearby grid edges.

mod export;

use std::collections::HashMap;

use rayon::prelude::*;

use crate::field::{DirectionalField, GridSpec};
use crate::geometry::{Direction, Vec3};

pub use export::{estimate_normals, export_points, read_points, PointFormat, PointIoError};

/// Default merge threshold.
pub const DEFAULT_TAU: f64 = 1.0 / 512.0;

/// Minimum number of other points on neighbouring edges for a point to survive fusion.
pub const FUSION_MIN_SUPPORT: u32 = 3;

/// One sample along a ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RaySample {
    pub pos: f64,
    pub dist: f64,
    pub sign: i8,
}

impl RaySample {
    pub fn candidate(&self) -> f64 {
        self.pos - self.sign as f64 * self.dist
    }
}

/// Estimated crossing on a ray with the number of samples behind it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayEstimate {
    pub coord: f64,
    pub count: u32,
}

/// Estimate surface crossings from the ordered samples of one ray.
///
/// A segment is a run of samples with the same derivative sign. A run also
/// ends at a sample lying on a crossing (distance 0), and when it has
/// passed its own crossing by more than `tau / 2`: for a forward-looking run
/// (sign `-1`) the next sample lies beyond the run's mean candidate, for a
/// backward-looking run (sign `+1`) the next sample's candidate lies beyond
/// the run's last sample. Without the last rule a run could straddle two
/// crossings less than one spacing apart.
pub fn estimate_ray_points(samples: &[RaySample], tau: f64) -> Vec<RayEstimate> {
    let mut segments: Vec<RayEstimate> = Vec::new();
    let mut sum = 0.0;
    let mut count = 0u32;
    let mut sign = 0i8;
    let mut last_pos = f64::NEG_INFINITY;
    let margin = 0.5 * tau;
    for s in samples {
        let passed = match sign {
            -1 => s.pos - sum / count as f64 > margin,
            _ => s.candidate() - last_pos > margin,
        };
        if count > 0 && (s.sign != sign || s.dist == 0.0 || passed) {
            segments.push(RayEstimate {
                coord: sum / count as f64,
                count,
            });
            sum = 0.0;
            count = 0;
        }
        sign = s.sign;
        sum += s.candidate();
        count += 1;
        last_pos = s.pos;
    }
    if count > 0 {
        segments.push(RayEstimate {
            coord: sum / count as f64,
            count,
        });
    }
    merge_adjacent(segments, tau)
}

fn merge_adjacent(segments: Vec<RayEstimate>, tau: f64) -> Vec<RayEstimate> {
    let mut merged: Vec<RayEstimate> = Vec::with_capacity(segments.len());
    for seg in segments {
        match merged.last_mut() {
            Some(last) if (seg.coord - last.coord).abs() < tau => {
                let n = last.count + seg.count;
                last.coord = (last.coord * last.count as f64 + seg.coord * seg.count as f64) / n as f64;
                last.count = n;
            }
            _ => merged.push(seg),
        }
    }
    merged
}

/// Samples of ray `ray` of `field`, or `None` if the field is undefined there.
pub fn ray_samples(field: &DirectionalField, ray: usize) -> Option<Vec<RaySample>> {
    let grid = field.grid();
    field.rays()[ray].as_ref().map(|p| {
        p.distances
            .iter()
            .zip(&p.signs)
            .enumerate()
            .map(|(i, (&dist, &sign))| RaySample {
                pos: grid.coord(i),
                dist,
                sign,
            })
            .collect()
    })
}

/// A reconstructed surface point on a lattice ray.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridEdgePoint {
    pub position: Vec3,
    pub direction: Direction,
    /// Ray index `iu + R * iv` within the direction's plane.
    pub ray: u32,
    /// Number of samples averaged into this point.
    pub count: u32,
    /// Orientation guess along the ray axis: crossings alternate between
    /// entering (`-1`) and leaving (`+1`) a closed shape.
    pub axis_vote: i8,
}

/// Points estimated on every defined ray of one direction.
pub fn reconstruct_direction(field: &DirectionalField, tau: f64) -> Vec<GridEdgePoint> {
    let grid = field.grid();
    let direction = field.direction();
    (0..grid.ray_count())
        .into_par_iter()
        .flat_map_iter(|ray| {
            let (iu, iv) = field.ray_plane_indices(ray);
            let (u, v) = (grid.coord(iu), grid.coord(iv));
            let estimates = ray_samples(field, ray)
                .map(|s| estimate_ray_points(&s, tau))
                .unwrap_or_default();
            estimates.into_iter().enumerate().map(move |(k, e)| GridEdgePoint {
                position: direction.compose(u, v, e.coord),
                direction,
                ray: ray as u32,
                count: e.count,
                axis_vote: if k % 2 == 0 { -1 } else { 1 },
            })
        })
        .collect()
}

/// Per-direction and fused reconstructions on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GepSet {
    pub grid: GridSpec,
    pub tau: f64,
    /// Indexed by [`Direction::axis`].
    pub per_direction: [Vec<GridEdgePoint>; 3],
    pub fused: Vec<GridEdgePoint>,
}

impl GepSet {
    pub fn pre_fusion_count(&self) -> usize {
        self.per_direction.iter().map(Vec::len).sum()
    }

    pub fn fused_positions(&self) -> Vec<Vec3> {
        self.fused.iter().map(|p| p.position).collect()
    }
}

type EdgeKey = (u8, [u32; 3]);

/// Lattice edge holding a point: the ray's corner indices plus the edge
/// index along the ray axis.
fn host_edge(p: &GridEdgePoint, grid: &GridSpec) -> EdgeKey {
    let r = grid.resolution();
    let axis = p.direction.axis();
    let (a, b) = p.direction.plane_axes();
    let ray = p.ray as usize;
    let mut corner = [0u32; 3];
    corner[a] = (ray % r) as u32;
    corner[b] = (ray / r) as u32;
    corner[axis] = grid.edge_index(p.position[axis]) as u32;
    (axis as u8, corner)
}

/// Edges of the cells incident to `edge`.
fn neighbourhood(edge: &EdgeKey, grid: &GridSpec) -> Vec<EdgeKey> {
    let cells_max = grid.resolution() as i64 - 2;
    let (axis, corner) = (edge.0 as usize, edge.1);
    let (a, b) = Direction::from_axis(axis).expect("valid axis").plane_axes();
    let mut out = Vec::with_capacity(48);
    for da in [-1i64, 0] {
        for db in [-1i64, 0] {
            let mut cell = [corner[0] as i64, corner[1] as i64, corner[2] as i64];
            cell[a] += da;
            cell[b] += db;
            if cell.iter().any(|&c| c < 0 || c > cells_max) {
                continue;
            }
            for e_axis in 0..3 {
                let (p, q) = Direction::from_axis(e_axis).unwrap().plane_axes();
                for (op, oq) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    let mut c = cell;
                    c[p] += op;
                    c[q] += oq;
                    out.push((e_axis as u8, [c[0] as u32, c[1] as u32, c[2] as u32]));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Keep a point when at least [`FUSION_MIN_SUPPORT`] other points lie on the
/// edges of the cells around its host edge.
pub fn fuse_directions(
    lr: Vec<GridEdgePoint>,
    fb: Vec<GridEdgePoint>,
    ud: Vec<GridEdgePoint>,
    grid: &GridSpec,
    tau: f64,
) -> GepSet {
    let per_direction = [lr, fb, ud];
    let mut counts: HashMap<EdgeKey, u32> = HashMap::new();
    for p in per_direction.iter().flatten() {
        *counts.entry(host_edge(p, grid)).or_default() += 1;
    }
    let fused = per_direction
        .par_iter()
        .flat_map_iter(|points| points.iter())
        .filter(|p| {
            let support: u32 = neighbourhood(&host_edge(p, grid), grid)
                .iter()
                .filter_map(|e| counts.get(e))
                .sum();
            support > FUSION_MIN_SUPPORT
        })
        .copied()
        .collect();
    GepSet {
        grid: *grid,
        tau,
        per_direction,
        fused,
    }
}

/// Reconstruct and fuse all three directions.
pub fn reconstruct(fields: [&DirectionalField; 3], tau: f64) -> GepSet {
    let grid = fields[0].grid();
    let [lr, fb, ud] = fields.map(|f| reconstruct_direction(f, tau));
    fuse_directions(lr, fb, ud, &grid, tau)
}
