//! Chamfer distances, reconstruction reports and resolution sweeps.
//!
//! Chamfer distance here is always the two-sided sum of mean squared
//! nearest-neighbour distances, `mean_a min_b |a-b|^2 + mean_b min_a |a-b|^2`,
//! and is usually quoted multiplied by [`CD_SCALE`].

mod kdtree;

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baseline::{crossing_points, mc_gep_from_sdf, udf_gradient_sign_gep};
use crate::field::{compute_sdf_gt, compute_udf_gt, compute_uodf_gt, GridSpec};
use crate::geometry::{Direction, Vec3};
use crate::gep::{fuse_directions, reconstruct_direction, GepSet};
use crate::surface::Surface;

pub use kdtree::KdTree;

pub const CD_SCALE: f64 = 1e5;
pub const CD_CONVENTION: &str = "two-sided sum of mean squared nearest-neighbour distances";

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("chamfer distance needs non-empty point sets; {0} set is empty")]
    EmptySet(&'static str),
}

/// Squared distance from each point of `from` to its nearest neighbour in `tree`.
pub fn nearest_sq_distances(from: &[Vec3], tree: &KdTree) -> Vec<f64> {
    from.par_iter()
        .map(|p| tree.nearest(p).map_or(f64::INFINITY, |(_, d2)| d2))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn chamfer_l2(a: &[Vec3], b: &[Vec3]) -> Result<f64, MetricsError> {
    if a.is_empty() {
        return Err(MetricsError::EmptySet("first"));
    }
    if b.is_empty() {
        return Err(MetricsError::EmptySet("second"));
    }
    let ta = KdTree::build(a);
    let tb = KdTree::build(b);
    Ok(mean(&nearest_sq_distances(a, &tb)) + mean(&nearest_sq_distances(b, &ta)))
}

/// What reconstructed grid-edge points are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GepReference {
    /// Exact crossings of every lattice ray with the surface at the
    /// reconstruction's own resolution.
    GroundTruthGep,
    /// Area-uniform random surface samples.
    SurfaceSamples { count: usize, seed: u64 },
}

impl fmt::Display for GepReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GepReference::GroundTruthGep => f.write_str("ground-truth grid-edge points"),
            GepReference::SurfaceSamples { count, seed } => write!(f, "{count} surface samples (seed {seed})"),
        }
    }
}

/// Every crossing of every lattice ray (all three directions) inside the domain.
pub fn ground_truth_gep(surface: &dyn Surface, grid: &GridSpec) -> Vec<Vec3> {
    let r = grid.resolution();
    Direction::ALL
        .iter()
        .flat_map(|&direction| {
            (0..grid.ray_count())
                .into_par_iter()
                .flat_map_iter(|ray| {
                    let (u, v) = (grid.coord(ray % r), grid.coord(ray / r));
                    let origin = direction.compose(u, v, 0.0);
                    let ts: Vec<f64> = surface.stab_axis(&origin, direction).ts().collect();
                    ts.into_iter()
                        .filter(|t| (-1.0..=1.0).contains(t))
                        .map(move |t| direction.compose(u, v, t))
                })
                .collect::<Vec<_>>()
        })
        .collect()
}

pub fn reference_points(surface: &dyn Surface, grid: &GridSpec, reference: &GepReference) -> Vec<Vec3> {
    match *reference {
        GepReference::GroundTruthGep => ground_truth_gep(surface, grid),
        GepReference::SurfaceSamples { count, seed } => {
            surface.sample_surface(count, &mut ChaCha8Rng::seed_from_u64(seed))
        }
    }
}

/// Chamfer distance between reconstructed points and a reference set.
pub fn cd_gep(points: &[Vec3], reference: &[Vec3]) -> Result<f64, MetricsError> {
    chamfer_l2(points, reference)
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistanceStats {
    pub count: usize,
    pub mean: f64,
    pub median: f64,
    pub max: f64,
}

impl DistanceStats {
    pub fn from_values(mut values: Vec<f64>) -> Self {
        if values.is_empty() {
            return DistanceStats::default();
        }
        values.sort_by(f64::total_cmp);
        let n = values.len();
        let median = if n % 2 == 1 {
            values[n / 2]
        } else {
            0.5 * (values[n / 2 - 1] + values[n / 2])
        };
        DistanceStats {
            count: n,
            mean: mean(&values),
            median,
            max: values[n - 1],
        }
    }
}

pub fn surface_distances(points: &[Vec3], surface: &dyn Surface) -> Vec<f64> {
    points.par_iter().map(|p| surface.distance(p)).collect()
}

/// Points further than this many grid spacings from the surface are outliers.
pub const OUTLIER_SPACINGS: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub convention: String,
    pub reference: GepReference,
    pub resolution: usize,
    pub tau: f64,
    pub cd_gep: f64,
    pub cd_gep_e5: f64,
    /// Point-to-surface distances per direction before fusion (lr, fb, ud).
    pub per_direction: [DistanceStats; 3],
    pub fused: DistanceStats,
    pub outliers: usize,
    pub points_pre_fusion: usize,
    pub points_post_fusion: usize,
    pub runtime_s: f64,
}

pub fn evaluate(
    gep: &GepSet,
    surface: &dyn Surface,
    reference: &GepReference,
    runtime_s: f64,
) -> Result<EvalReport, MetricsError> {
    let fused = gep.fused_positions();
    let reference_set = reference_points(surface, &gep.grid, reference);
    let cd = cd_gep(&fused, &reference_set)?;
    let per_direction = gep.per_direction.each_ref().map(|pts| {
        let pos: Vec<Vec3> = pts.iter().map(|p| p.position).collect();
        DistanceStats::from_values(surface_distances(&pos, surface))
    });
    let fused_d = surface_distances(&fused, surface);
    let limit = OUTLIER_SPACINGS * gep.grid.spacing();
    let outliers = fused_d.iter().filter(|&&d| d > limit).count();
    Ok(EvalReport {
        convention: CD_CONVENTION.to_string(),
        reference: *reference,
        resolution: gep.grid.resolution(),
        tau: gep.tau,
        cd_gep: cd,
        cd_gep_e5: cd * CD_SCALE,
        per_direction,
        fused: DistanceStats::from_values(fused_d),
        outliers,
        points_pre_fusion: gep.pre_fusion_count(),
        points_post_fusion: fused.len(),
        runtime_s,
    })
}

/// Reconstruction methods compared in a sweep; all start from exact fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "uodf_exact")]
    UodfExact,
    #[serde(rename = "mc_sdf_exact")]
    McSdfExact,
    #[serde(rename = "udf_gradsign_exact")]
    UdfGradsignExact,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::UodfExact, Method::McSdfExact, Method::UdfGradsignExact];

    pub fn name(self) -> &'static str {
        match self {
            Method::UodfExact => "uodf_exact",
            Method::McSdfExact => "mc_sdf_exact",
            Method::UdfGradsignExact => "udf_gradsign_exact",
        }
    }

    /// Reconstructed points of this method on `grid`.
    pub fn points(self, surface: &dyn Surface, grid: &GridSpec, tau: f64) -> Vec<Vec3> {
        match self {
            Method::UodfExact => exact_uodf_gep(surface, grid, tau).fused_positions(),
            Method::McSdfExact => crossing_points(&mc_gep_from_sdf(&compute_sdf_gt(surface, grid))),
            Method::UdfGradsignExact => crossing_points(&udf_gradient_sign_gep(&compute_udf_gt(surface, grid))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method `{s}` (expected one of uodf_exact, mc_sdf_exact, udf_gradsign_exact)"))
    }
}

/// Reconstruct from exact UODFs, one direction at a time to bound memory.
pub fn exact_uodf_gep(surface: &dyn Surface, grid: &GridSpec, tau: f64) -> GepSet {
    let [lr, fb, ud] = Direction::ALL.map(|d| reconstruct_direction(&compute_uodf_gt(surface, grid, d), tau));
    fuse_directions(lr, fb, ud, grid, tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fixture: String,
    pub method: Method,
    pub resolution: usize,
    pub points: usize,
    /// `None` when the method produced no points.
    pub cd_gep: Option<f64>,
    pub cd_gep_e5: Option<f64>,
    pub max_surface_distance: Option<f64>,
    pub runtime_s: f64,
}

/// CD-GEP of every method at every resolution, one row per pair.
pub fn resolution_sweep(
    fixture: &str,
    surface: &dyn Surface,
    methods: &[Method],
    resolutions: &[usize],
    tau: f64,
    reference: &GepReference,
) -> Vec<SweepRow> {
    let mut rows = Vec::with_capacity(methods.len() * resolutions.len());
    for &r in resolutions {
        let grid = GridSpec::new(r).expect("sweep resolutions are validated by the caller");
        let reference_set = reference_points(surface, &grid, reference);
        for &method in methods {
            let start = Instant::now();
            let points = method.points(surface, &grid, tau);
            let cd = cd_gep(&points, &reference_set).ok();
            let max_d = surface_distances(&points, surface).into_iter().reduce(f64::max);
            rows.push(SweepRow {
                fixture: fixture.to_string(),
                method,
                resolution: r,
                points: points.len(),
                cd_gep: cd,
                cd_gep_e5: cd.map(|c| c * CD_SCALE),
                max_surface_distance: max_d,
                runtime_s: start.elapsed().as_secs_f64(),
            });
            log::info!("{fixture} {method} R={r}: {} points, cd_gep x1e5 = {:?}", points.len(), cd.map(|c| c * CD_SCALE));
        }
    }
    rows
}

/// Resolutions at which `uodf_exact` is not strictly below every other method.
pub fn uodf_dominance_violations(rows: &[SweepRow]) -> Vec<usize> {
    let mut bad: Vec<usize> = rows
        .iter()
        .filter(|row| row.method == Method::UodfExact)
        .filter(|u| {
            let ucd = u.cd_gep.unwrap_or(f64::INFINITY);
            rows.iter()
                .filter(|o| o.resolution == u.resolution && o.method != Method::UodfExact)
                .any(|o| ucd >= o.cd_gep.unwrap_or(f64::INFINITY))
        })
        .map(|u| u.resolution)
        .collect();
    bad.dedup();
    bad
}

/// CSV columns: fixture, method, resolution, points, cd_gep, cd_gep_e5,
/// max_surface_distance, runtime_s. Missing values are empty cells.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
