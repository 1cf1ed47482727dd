use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uodf::field::{
    compute_sdf_gt, compute_udf_gt, compute_uodf_gt, directional_from_bytes, directional_to_bytes, scalar_from_bytes,
    scalar_to_bytes, FieldSource, RayProfile,
};
use uodf::fixtures;
use uodf::mesh::intersect_line_triangle;
use uodf::surface::MeshSurface;
use uodf::{Direction, DirectionalField, GridSpec, ScalarFieldGrid, ScalarKind, TriangleMesh, Vec3};

/// Nearest crossing distance along the line through `p` by scanning every triangle.
fn scan_distance(mesh: &TriangleMesh, p: &Vec3, d: Direction) -> Option<f64> {
    let axis = d.axis();
    let origin = d.compose(p[d.plane_axes().0], p[d.plane_axes().1], 0.0);
    (0..mesh.triangles().len())
        .filter_map(|i| intersect_line_triangle(&origin, &d.unit(), &mesh.triangle(i)))
        .map(|(t, _)| (t - p[axis]).abs())
        .min_by(f64::total_cmp)
}

/// Closed-form crossing distance for the sphere of radius 0.9 at the origin.
fn sphere_distance(p: &Vec3, d: Direction) -> Option<(f64, i8)> {
    let (a, b) = d.plane_axes();
    let rho2 = p[a] * p[a] + p[b] * p[b];
    if rho2 > 0.81 {
        return None;
    }
    let h = (0.81 - rho2).sqrt();
    let s = p[d.axis()];
    let (lo, hi) = ((s + h).abs(), (s - h).abs());
    // nearer crossing behind the sample means the distance grows with s
    Some(if s == -h || s == h {
        (0.0, 1)
    } else if hi <= lo {
        (hi, if s < h { -1 } else { 1 })
    } else {
        (lo, if s < -h { -1 } else { 1 })
    })
}

#[test]
fn sphere_samples_match_closed_form_on_random_corners() {
    let grid = GridSpec::new(129).unwrap();
    let s = fixtures::sphere();
    let fields: Vec<DirectionalField> = Direction::ALL.iter().map(|&d| compute_uodf_gt(&s, &grid, d)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let c = [0; 3].map(|_| rng.random_range(0..129usize));
        let p = grid.corner(c[0], c[1], c[2]);
        for f in &fields {
            match (f.sample(c[0], c[1], c[2]), sphere_distance(&p, f.direction())) {
                (Some((d, sg)), Some((d_ref, sg_ref))) => {
                    assert!((d - d_ref).abs() < 1e-12, "{p:?} {}", f.direction());
                    assert_eq!(sg, sg_ref, "{p:?} {}", f.direction());
                }
                (None, None) => {}
                (a, b) => panic!("definedness differs at {p:?}: {a:?} vs {b:?}"),
            }
        }
    }
}

#[test]
fn mesh_samples_match_triangle_scan_on_random_corners() {
    let mesh = fixtures::scanned_blob(3);
    let surface = MeshSurface::new(mesh.clone());
    let grid = GridSpec::new(65).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for d in Direction::ALL {
        let f = compute_uodf_gt(&surface, &grid, d);
        for _ in 0..1000 {
            let c = [0; 3].map(|_| rng.random_range(0..65usize));
            let p = grid.corner(c[0], c[1], c[2]);
            let got = f.distance(c[0], c[1], c[2]);
            let want = scan_distance(&mesh, &p, d);
            match (got, want) {
                (Some(a), Some(b)) => assert!((a - b).abs() < 1e-12),
                (None, None) => {}
                _ => panic!("definedness differs at {p:?}"),
            }
        }
    }
}

#[test]
fn unit_derivative_between_crossings() {
    let grid = GridSpec::new(129).unwrap();
    let h = grid.spacing();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let surfaces = [fixtures::Fixture::Sphere.surface(), fixtures::Fixture::Blob.surface()];
    let fields: Vec<DirectionalField> = surfaces
        .iter()
        .flat_map(|s| Direction::ALL.map(|d| compute_uodf_gt(s.as_ref(), &grid, d)))
        .collect();
    let mut checked = 0;
    while checked < 100_000 {
        let f = &fields[rng.random_range(0..fields.len())];
        let Some(p) = f.rays()[rng.random_range(0..grid.ray_count())].as_ref() else {
            continue;
        };
        let i = rng.random_range(0..128usize);
        let (s0, s1) = (grid.coord(i), grid.coord(i + 1));
        if p.hits.iter().any(|&x| x >= s0 && x <= s1) || p.signs[i] != p.signs[i + 1] {
            continue;
        }
        assert!(((p.distances[i + 1] - p.distances[i]).abs() - h).abs() < 1e-9);
        // the sign is the derivative's
        assert_eq!((p.distances[i + 1] - p.distances[i]).signum() as i8, p.signs[i]);
        checked += 1;
    }
}

#[test]
fn sdf_magnitude_is_udf_and_sign_is_inside() {
    let grid = GridSpec::new(33).unwrap();
    let s = fixtures::sphere();
    let udf = compute_udf_gt(&s, &grid);
    let sdf = compute_sdf_gt(&s, &grid);
    assert!(sdf.warning().is_none());
    for (i, (&a, &b)) in sdf.values().iter().zip(udf.values()).enumerate() {
        assert_eq!(a.abs(), b);
        let r = grid.resolution();
        let p = grid.corner(i % r, (i / r) % r, i / (r * r));
        assert_eq!(a < 0.0, p.norm() < 0.9, "{p:?}");
    }
    let mesh_sdf = compute_sdf_gt(fixtures::Fixture::Shells.surface().as_ref(), &grid);
    let mesh_udf = compute_udf_gt(fixtures::Fixture::Shells.surface().as_ref(), &grid);
    for (a, b) in mesh_sdf.values().iter().zip(mesh_udf.values()) {
        assert_eq!(a.abs(), *b);
    }
}

#[test]
fn union_field_is_min_of_components() {
    let (outer, inner, both) = fixtures::nested_shells(3);
    let grid = GridSpec::new(33).unwrap();
    let [o, i, u] = [outer, inner, both].map(MeshSurface::new);
    for d in Direction::ALL {
        let (fo, fi, fu) = (compute_uodf_gt(&o, &grid, d), compute_uodf_gt(&i, &grid, d), compute_uodf_gt(&u, &grid, d));
        for ix in 0..33 {
            for iy in 0..33 {
                for iz in 0..33 {
                    let parts = [fo.distance(ix, iy, iz), fi.distance(ix, iy, iz)];
                    let min = parts.iter().flatten().copied().min_by(f64::total_cmp);
                    assert_eq!(fu.distance(ix, iy, iz), min);
                }
            }
        }
    }
    let (uo, ui, uu) = (compute_udf_gt(&o, &grid), compute_udf_gt(&i, &grid), compute_udf_gt(&u, &grid));
    for k in 0..grid.corner_count() {
        assert_eq!(uu.values()[k], uo.values()[k].min(ui.values()[k]));
    }
}

#[test]
fn open_plate_is_defined_only_across_its_face() {
    let plate = MeshSurface::new(fixtures::plate_mesh(0.05, 0.5));
    let grid = GridSpec::new(17).unwrap();
    let ud = compute_uodf_gt(&plate, &grid, Direction::Ud);
    // rays through the plate are defined along z only
    assert!(ud.masked_ray_count() > 0);
    assert_eq!(compute_uodf_gt(&plate, &grid, Direction::Lr).masked_ray_count(), 0);
}

fn predicted_field(seed: u64, r: usize) -> DirectionalField {
    let grid = GridSpec::new(r).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rays = (0..grid.ray_count())
        .map(|ray| {
            // at least one defined ray, or the file reads back as ground truth
            (ray == 0 || rng.random_bool(0.6)).then(|| RayProfile {
                hits: vec![],
                distances: (0..r).map(|_| rng.random_range(0.0..2.0)).collect(),
                signs: (0..r).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect(),
            })
        })
        .collect();
    DirectionalField::new(Direction::Fb, grid, FieldSource::Predicted, rays)
}

proptest! {
    #[test]
    fn predicted_field_round_trips_at_f32(seed in any::<u64>(), r in 2usize..9) {
        let f = predicted_field(seed, r);
        let bytes = directional_to_bytes(&f);
        let back = directional_from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.direction(), f.direction());
        prop_assert_eq!(back.source(), FieldSource::Predicted);
        for (a, b) in f.rays().iter().zip(back.rays()) {
            match (a, b) {
                (Some(a), Some(b)) => {
                    prop_assert_eq!(&a.signs, &b.signs);
                    for (x, y) in a.distances.iter().zip(&b.distances) {
                        prop_assert_eq!(*x as f32 as f64, *y);
                    }
                }
                (None, None) => {}
                _ => prop_assert!(false, "mask differs"),
            }
        }
        prop_assert_eq!(directional_to_bytes(&back), bytes);
    }

    #[test]
    fn truncated_files_are_rejected(seed in any::<u64>(), cut in 1usize..40) {
        let bytes = directional_to_bytes(&predicted_field(seed, 4));
        prop_assert!(directional_from_bytes(&bytes[..bytes.len() - cut]).is_err());
    }

    #[test]
    fn scalar_round_trip(vals in proptest::collection::vec(-2.0f64..2.0, 27)) {
        let f = ScalarFieldGrid::new(ScalarKind::Udf, GridSpec::new(3).unwrap(), vals.clone());
        let back = scalar_from_bytes(&scalar_to_bytes(&f)).unwrap();
        prop_assert_eq!(back.kind(), ScalarKind::Udf);
        for (a, b) in vals.iter().zip(back.values()) {
            prop_assert_eq!(*a as f32 as f64, *b);
        }
    }
}

#[test]
fn ground_truth_field_round_trips_with_hits() {
    let grid = GridSpec::new(17).unwrap();
    let f = compute_uodf_gt(&fixtures::sphere(), &grid, Direction::Ud);
    let back = directional_from_bytes(&directional_to_bytes(&f)).unwrap();
    assert_eq!(back.source(), FieldSource::GroundTruth);
    assert_eq!(back.masked_ray_count(), f.masked_ray_count());
    for (a, b) in f.rays().iter().flatten().zip(back.rays().iter().flatten()) {
        assert_eq!(a.hits.len(), b.hits.len());
    }
}
