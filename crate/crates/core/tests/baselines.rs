use std::collections::HashSet;

use uodf::baseline::{crossings_on_edge, mc_gep_from_sdf, udf_gradient_sign_gep, EdgeCrossing};
use uodf::field::{compute_sdf_gt, compute_udf_gt};
use uodf::fixtures::{self, Fixture, PLATES_GAP_CENTER};
use uodf::gep::DEFAULT_TAU;
use uodf::metrics::exact_uodf_gep;
use uodf::{Direction, GridSpec, ScalarFieldGrid, ScalarKind, Vec3};

fn one_per_edge(c: &[EdgeCrossing]) -> bool {
    let edges: HashSet<([u32; 3], u8)> = c.iter().map(|e| (e.corner, e.axis)).collect();
    edges.len() == c.len()
}

#[test]
fn baselines_place_at_most_one_point_per_edge() {
    for f in [Fixture::Sphere, Fixture::Plates, Fixture::Blob] {
        let grid = GridSpec::new(33).unwrap();
        let s = f.surface();
        let mc = mc_gep_from_sdf(&compute_sdf_gt(s.as_ref(), &grid));
        let gs = udf_gradient_sign_gep(&compute_udf_gt(s.as_ref(), &grid));
        assert!(one_per_edge(&mc) && one_per_edge(&gs), "{f}");
        assert!(mc.iter().chain(&gs).all(|c| (0.0..=1.0).contains(&c.t)));
    }
}

#[test]
fn plates_gap_holds_two_uodf_points_and_at_most_one_baseline_point() {
    let s = Fixture::Plates.surface();
    for r in [33, 65, 129] {
        let grid = GridSpec::new(r).unwrap();
        // the z edge through the plates' centre line that contains the gap
        let mid = (r - 1) / 2;
        let is = grid.edge_index(PLATES_GAP_CENTER);
        let uodf = exact_uodf_gep(s.as_ref(), &grid, DEFAULT_TAU);
        let on_edge = uodf
            .fused
            .iter()
            .filter(|p| {
                p.direction == Direction::Ud
                    && p.ray as usize == mid + r * mid
                    && grid.edge_index(p.position.z) == is
            })
            .count();
        assert_eq!(on_edge, 2, "R={r}");
        let mc = mc_gep_from_sdf(&compute_sdf_gt(s.as_ref(), &grid));
        let gs = udf_gradient_sign_gep(&compute_udf_gt(s.as_ref(), &grid));
        assert!(crossings_on_edge(&mc, Direction::Ud, mid, mid, is) <= 1);
        assert!(crossings_on_edge(&gs, Direction::Ud, mid, mid, is) <= 1);
    }
}

#[test]
fn marching_cubes_is_exact_on_the_tilted_slab() {
    let slab = fixtures::tilted_slab();
    let grid = GridSpec::new(33).unwrap();
    let sdf = ScalarFieldGrid::from_fn(ScalarKind::Sdf, grid, |p| slab.signed_distance(&p));
    let pts = mc_gep_from_sdf(&sdf);
    assert!(!pts.is_empty());
    for c in &pts {
        assert!(slab.signed_distance(&c.point).abs() < 1e-12);
    }
}

#[test]
fn gradient_sign_is_exact_on_an_offset_plane() {
    let c = 0.0123;
    let grid = GridSpec::new(17).unwrap();
    let udf = ScalarFieldGrid::from_fn(ScalarKind::Udf, grid, |p| (p.z - c).abs());
    let pts = udf_gradient_sign_gep(&udf);
    assert_eq!(pts.len(), 17 * 17);
    for e in &pts {
        assert!((e.point.z - c).abs() < 1e-12);
    }
}

#[test]
fn marching_cubes_on_sphere_stays_near_surface() {
    let s = fixtures::sphere();
    let grid = GridSpec::new(33).unwrap();
    let pts = mc_gep_from_sdf(&compute_sdf_gt(&s, &grid));
    let h = grid.spacing();
    for c in &pts {
        // interpolation error is second order in the spacing
        assert!((c.point.norm() - 0.9).abs() < h * h);
        assert!(c.point != Vec3::zeros());
    }
}
