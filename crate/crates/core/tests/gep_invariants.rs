use proptest::prelude::*;
use uodf::field::{compute_uodf_gt, ray_distance};
use uodf::fixtures::{self, Fixture};
use uodf::gep::{
    estimate_normals, estimate_ray_points, export_points, fuse_directions, read_points, reconstruct, PointFormat,
    RaySample, DEFAULT_TAU,
};
use uodf::metrics::exact_uodf_gep;
use uodf::surface::MeshSurface;
use uodf::{Direction, GridEdgePoint, GridSpec, Surface};

fn lattice_samples(hits: &[f64], grid: &GridSpec) -> Vec<RaySample> {
    (0..grid.resolution())
        .map(|i| {
            let pos = grid.coord(i);
            let (dist, sign) = ray_distance(hits, pos).unwrap();
            RaySample { pos, dist, sign }
        })
        .collect()
}

#[test]
fn exact_sphere_points_lie_on_sphere_at_every_resolution() {
    let s = fixtures::sphere();
    for r in [9, 17, 33, 65, 129] {
        let set = exact_uodf_gep(&s, &GridSpec::new(r).unwrap(), DEFAULT_TAU);
        assert!(!set.fused.is_empty());
        for p in set.per_direction.iter().flatten() {
            assert!((p.position.norm() - 0.9).abs() < 1e-7, "R={r}: {:?}", p.position);
        }
    }
}

#[test]
fn exact_mesh_points_lie_on_mesh() {
    // tau below every crossing gap on the mesh, so nothing is merged
    let s = MeshSurface::new(fixtures::scanned_blob(3));
    let set = exact_uodf_gep(&s, &GridSpec::new(65).unwrap(), 1e-9);
    for p in set.per_direction.iter().flatten() {
        assert!(s.distance(&p.position) < 1e-7);
    }
}

#[test]
fn fusion_keeps_a_clean_sphere() {
    let set = exact_uodf_gep(&fixtures::sphere(), &GridSpec::new(65).unwrap(), DEFAULT_TAU);
    let kept = set.fused.len() as f64 / set.pre_fusion_count() as f64;
    assert!(kept > 0.99, "kept {kept}");
}

#[test]
fn fusion_removes_isolated_outliers_only() {
    let grid = GridSpec::new(65).unwrap();
    let set = exact_uodf_gep(&fixtures::sphere(), &grid, DEFAULT_TAU);
    let [mut lr, fb, ud] = set.per_direction.clone();
    let before = lr.len() + fb.len() + ud.len();
    // points at the domain centre, far from the sphere
    for (k, s) in [(32usize, 0.01), (33, -0.2), (31, 0.3)] {
        let ray = (k + 65 * 32) as u32;
        lr.push(GridEdgePoint {
            position: Direction::Lr.compose(grid.coord(k), grid.coord(32), s),
            direction: Direction::Lr,
            ray,
            count: 1,
            axis_vote: 1,
        });
    }
    let fused = fuse_directions(lr, fb, ud, &grid, DEFAULT_TAU);
    assert_eq!(fused.pre_fusion_count(), before + 3);
    assert!(fused.fused.iter().all(|p| (p.position.norm() - 0.9).abs() < 1e-7));
    assert_eq!(fused.fused.len(), set.fused.len());
}

#[test]
fn fusion_keeps_a_small_planar_patch() {
    let plate = MeshSurface::new(fixtures::plate_mesh(0.0123, 0.2));
    let grid = GridSpec::new(33).unwrap();
    let fields = Direction::ALL.map(|d| compute_uodf_gt(&plate, &grid, d));
    let set = reconstruct([&fields[0], &fields[1], &fields[2]], DEFAULT_TAU);
    assert!(set.pre_fusion_count() > 0);
    assert_eq!(set.fused.len(), set.pre_fusion_count());
}

#[test]
fn sphere_normals_point_outward() {
    let set = exact_uodf_gep(&fixtures::sphere(), &GridSpec::new(33).unwrap(), DEFAULT_TAU);
    let normals = estimate_normals(&set.fused, 3.0 * set.grid.spacing());
    let outward = set
        .fused
        .iter()
        .zip(&normals)
        .filter(|(p, n)| n.dot(&p.position) > 0.0)
        .count();
    assert!(outward as f64 > 0.99 * set.fused.len() as f64);
    assert!(normals.iter().all(|n| (n.norm() - 1.0).abs() < 1e-12));
}

#[test]
fn exported_points_read_back() {
    let set = exact_uodf_gep(&fixtures::sphere(), &GridSpec::new(9).unwrap(), DEFAULT_TAU);
    let pts = set.fused_positions();
    let normals = estimate_normals(&set.fused, 0.5);
    let dir = tempfile::tempdir().unwrap();
    for name in ["p.ply", "p.xyz"] {
        let path = dir.path().join(name);
        export_points(&pts, &normals, &path, PointFormat::from_path(&path).unwrap()).unwrap();
        let back = read_points(&path).unwrap();
        assert_eq!(back.len(), pts.len());
        for (a, b) in pts.iter().zip(&back) {
            assert!((a - b).norm() < 1e-6);
        }
    }
    assert!(PointFormat::from_path(std::path::Path::new("p.obj")).is_err());
}

fn separated_hits(min_gap: f64) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(0.0f64..1.0, 1..8).prop_map(move |raw| {
        let mut hits = Vec::new();
        let mut x = -1.0;
        for r in raw {
            x += min_gap + r * 0.4;
            if x > 1.0 {
                break;
            }
            hits.push(x);
        }
        if hits.is_empty() {
            hits.push(0.0);
        }
        hits
    })
}

proptest! {
    #[test]
    fn estimates_coincide_with_crossings(hits in separated_hits(DEFAULT_TAU), r in 5usize..70) {
        let grid = GridSpec::new(r).unwrap();
        let samples = lattice_samples(&hits, &grid);
        let est = estimate_ray_points(&samples, DEFAULT_TAU);
        prop_assert!(!est.is_empty());
        prop_assert!(est.len() <= hits.len());
        prop_assert_eq!(est.iter().map(|e| e.count as usize).sum::<usize>(), r);
        for e in &est {
            let nearest = hits.iter().map(|h| (h - e.coord).abs()).fold(f64::INFINITY, f64::min);
            prop_assert!(nearest < 1e-12, "estimate {} not on a crossing of {:?}", e.coord, hits);
        }
        for w in est.windows(2) {
            prop_assert!(w[1].coord - w[0].coord >= DEFAULT_TAU);
        }
    }

    #[test]
    fn well_separated_crossings_are_all_recovered(hits in separated_hits(0.1), r in 41usize..70) {
        // spacing <= 0.05, so every gap holds at least one sample
        let grid = GridSpec::new(r).unwrap();
        let est = estimate_ray_points(&lattice_samples(&hits, &grid), DEFAULT_TAU);
        prop_assert_eq!(est.len(), hits.len());
    }

    #[test]
    fn estimates_are_invariant_to_reversing_the_ray(hits in separated_hits(DEFAULT_TAU), r in 5usize..40) {
        let grid = GridSpec::new(r).unwrap();
        let fwd = estimate_ray_points(&lattice_samples(&hits, &grid), DEFAULT_TAU);
        let mirrored: Vec<f64> = hits.iter().rev().map(|h| -h).collect();
        let bwd = estimate_ray_points(&lattice_samples(&mirrored, &grid), DEFAULT_TAU);
        let mut b: Vec<f64> = bwd.iter().map(|e| -e.coord).collect();
        b.reverse();
        let a: Vec<f64> = fwd.iter().map(|e| e.coord).collect();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn merging_is_count_weighted(offsets in proptest::collection::vec(-1e-4f64..1e-4, 2..6)) {
        // samples on a crossing each end their segment; all land within tau
        let samples: Vec<RaySample> = offsets.iter().map(|o| RaySample { pos: 0.3 + o, dist: 0.0, sign: 1 }).collect();
        let est = estimate_ray_points(&samples, DEFAULT_TAU);
        prop_assert_eq!(est.len(), 1);
        let mean = offsets.iter().map(|o| 0.3 + o).sum::<f64>() / offsets.len() as f64;
        prop_assert!((est[0].coord - mean).abs() < 1e-12);
    }
}

#[test]
fn blob_fixture_survives_fusion() {
    let s = Fixture::Blob.surface();
    let set = exact_uodf_gep(s.as_ref(), &GridSpec::new(65).unwrap(), DEFAULT_TAU);
    assert!(set.fused.len() as f64 > 0.99 * set.pre_fusion_count() as f64);
    let far = set.fused.iter().filter(|p| s.distance(&p.position) > 1e-3).count();
    assert_eq!(far, 0);
}

#[test]
fn empty_surface_gives_no_points() {
    let s = uodf::surface::Union::new(vec![]);
    let grid = GridSpec::new(9).unwrap();
    let set = exact_uodf_gep(&s, &grid, DEFAULT_TAU);
    assert_eq!(set.pre_fusion_count(), 0);
}
