use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use uodf::baseline::{crossing_points, mc_gep_from_sdf, udf_gradient_sign_gep};
use uodf::field::{read_field_file, write_directional, write_scalar, FieldFile};
use uodf::field::{compute_sdf_gt, compute_udf_gt, compute_uodf_gt};
use uodf::fixtures::Fixture;
use uodf::gep::{estimate_normals, export_points, read_points, PointFormat};
use uodf::gep::reconstruct;
use uodf::mesh::load_mesh;
use uodf::mesh::normalize_mesh;
use uodf::metrics::{
    cd_gep, evaluate, reference_points, resolution_sweep, surface_distances, write_sweep_csv, DistanceStats,
    GepReference, Method, CD_CONVENTION, CD_SCALE, OUTLIER_SPACINGS,
};
use uodf::neural::{load_checkpoint, predict_field, save_checkpoint, train_direction, TrainConfig, TrainError};
use uodf::surface::MeshSurface;
use uodf::{Direction, DirectionalField, GridSpec, ScalarKind, Surface, Vec3};

use crate::error::{config_error, input_error, Classify, CliResult};
use crate::{BaselineArgs, BenchArgs, EvalArgs, FitArgs, GtArgs, PredictArgs, ReconArgs, ReferenceArgs, ShapeArgs};

/// What a command read, wrote and decided; turned into the run manifest.
#[derive(Debug, Default)]
pub struct RunRecord {
    pub config: serde_json::Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
    pub manifest: PathBuf,
}

impl RunRecord {
    fn warn(&mut self, msg: String) {
        log::warn!("{msg}");
        self.warnings.push(msg);
    }
}

struct Shape {
    surface: Box<dyn Surface>,
    watertight: bool,
}

fn load_shape(args: &ShapeArgs, rec: &mut RunRecord) -> CliResult<Option<Shape>> {
    match (&args.mesh, &args.fixture) {
        (Some(_), Some(_)) => Err(config_error("give either --mesh or --fixture, not both")),
        (Some(path), None) => {
            let mesh = load_mesh(path, None).input()?;
            let mesh = normalize_mesh(&mesh).input()?;
            if mesh.degenerate_count() > 0 {
                rec.warn(format!("{} degenerate triangles ignored", mesh.degenerate_count()));
            }
            rec.inputs.push(path.clone());
            Ok(Some(Shape {
                surface: Box::new(MeshSurface::new(mesh)),
                watertight: args.watertight,
            }))
        }
        (None, Some(name)) => {
            let f: Fixture = name.parse().map_err(config_error)?;
            Ok(Some(Shape {
                surface: f.surface(),
                watertight: f.is_watertight(),
            }))
        }
        (None, None) => Ok(None),
    }
}

fn require_shape(args: &ShapeArgs, rec: &mut RunRecord, why: &str) -> CliResult<Shape> {
    load_shape(args, rec)?.ok_or_else(|| config_error(format!("{why} needs --mesh or --fixture")))
}

fn grid(resolution: usize) -> CliResult<GridSpec> {
    GridSpec::new(resolution).config()
}

fn check_tau(tau: f64) -> CliResult<f64> {
    if tau.is_finite() && tau > 0.0 {
        Ok(tau)
    } else {
        Err(config_error(format!("tau must be positive and finite, got {tau}")))
    }
}

fn reference(args: &ReferenceArgs) -> CliResult<GepReference> {
    match args.reference.as_str() {
        "ground-truth" => Ok(GepReference::GroundTruthGep),
        "samples" if args.samples > 0 => Ok(GepReference::SurfaceSamples {
            count: args.samples,
            seed: args.sample_seed,
        }),
        "samples" => Err(config_error("--samples must be positive")),
        other => Err(config_error(format!("unknown reference `{other}` (expected ground-truth or samples)"))),
    }
}

fn default_manifest(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> CliResult<()> {
    let mut json = serde_json::to_vec_pretty(value).internal()?;
    json.push(b'\n');
    crate::manifest::write_atomic(path, &json)
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
        .internal()
}

fn point_format(path: &Path) -> CliResult<PointFormat> {
    PointFormat::from_path(path).config()
}

pub fn gt(args: &GtArgs, rec: &mut RunRecord) -> CliResult<()> {
    let g = grid(args.resolution)?;
    let shape = require_shape(&args.shape, rec, "gt")?;
    rec.config = serde_json::json!({
        "resolution": args.resolution,
        "fixture": args.shape.fixture,
        "watertight": shape.watertight,
    });
    fs::create_dir_all(&args.out)
        .map_err(|e| anyhow::anyhow!("cannot create {}: {e}", args.out.display()))
        .internal()?;
    for d in Direction::ALL {
        let t = Instant::now();
        let field = compute_uodf_gt(shape.surface.as_ref(), &g, d);
        let path = args.out.join(format!("{}.uodf", d.name()));
        write_directional(&field, &path).internal()?;
        log::info!("{d}: {} of {} rays hit, {:.2}s", field.masked_ray_count(), g.ray_count(), t.elapsed().as_secs_f64());
        rec.outputs.push(path);
    }
    let udf = compute_udf_gt(shape.surface.as_ref(), &g);
    let path = args.out.join("udf.grid");
    write_scalar(&udf, &path).internal()?;
    rec.outputs.push(path);
    if shape.watertight {
        let sdf = compute_sdf_gt(shape.surface.as_ref(), &g);
        if let Some(w) = sdf.warning() {
            rec.warn(w.to_string());
        }
        let path = args.out.join("sdf.grid");
        write_scalar(&sdf, &path).internal()?;
        rec.outputs.push(path);
    }
    rec.manifest = args.manifest.clone().unwrap_or_else(|| args.out.join("manifest.json"));
    Ok(())
}

fn read_directional(path: &Path, rec: &mut RunRecord) -> CliResult<DirectionalField> {
    rec.inputs.push(path.to_path_buf());
    match read_field_file(path).input()? {
        FieldFile::Directional(f) => Ok(f),
        FieldFile::Scalar(_) => Err(input_error(format!("{} is a scalar grid, expected a UODF file", path.display()))),
    }
}

/// Training configuration from an optional JSON file with flag overrides.
fn train_config(args: &FitArgs, field_resolution: usize, rec: &mut RunRecord) -> CliResult<TrainConfig> {
    let (mut cfg, has_lattice) = match &args.config {
        Some(path) => {
            rec.inputs.push(path.clone());
            let text = fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read {}: {e}", path.display()))
                .input()?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
                .config()?;
            let has_lattice = value.get("lattice").is_some();
            let cfg: TrainConfig = serde_json::from_value(value)
                .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
                .config()?;
            (cfg, has_lattice)
        }
        None => (TrainConfig::default(), false),
    };
    if !has_lattice {
        cfg.lattice = field_resolution;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.lattice {
        cfg.lattice = v;
    }
    if let Some(v) = args.slice {
        cfg.slice = Some(v);
    }
    Ok(cfg)
}

pub fn fit(args: &FitArgs, rec: &mut RunRecord) -> CliResult<()> {
    let field = read_directional(&args.field, rec)?;
    if let Some(d) = args.direction {
        if d != field.direction() {
            return Err(config_error(format!(
                "--direction {d} but {} holds the {} field",
                args.field.display(),
                field.direction()
            )));
        }
    }
    let cfg = train_config(args, field.grid().resolution(), rec)?;
    rec.config = serde_json::to_value(&cfg).internal()?;
    rec.seed = Some(cfg.seed);
    let outcome = match train_direction(&field, &cfg) {
        Ok(o) => o,
        Err(e @ (TrainError::InvalidConfig(_) | TrainError::LatticeMismatch { .. })) => return Err(e).config(),
        Err(e @ TrainError::NotGroundTruth) => return Err(e).input(),
        Err(e) => return Err(e).internal(),
    };
    save_checkpoint(&outcome.model, &args.out).internal()?;
    rec.outputs.push(args.out.clone());
    rec.outputs.push(uodf::neural::sidecar_path(&args.out));
    let log_path = args.out.with_extension("log.json");
    write_json(&outcome.log, &log_path)?;
    rec.outputs.push(log_path);
    if let Some(last) = outcome.log.last() {
        log::info!("final loss {:.4e} after {} epochs", last.terms.total, outcome.log.len());
    }
    rec.manifest = args.manifest.clone().unwrap_or_else(|| default_manifest(&args.out));
    Ok(())
}

fn check_threshold(threshold: f64) -> CliResult<f64> {
    if (0.0..=1.0).contains(&threshold) {
        Ok(threshold)
    } else {
        Err(config_error(format!("mask threshold must lie in [0, 1], got {threshold}")))
    }
}

fn predict_from_checkpoint(
    path: &Path,
    g: &GridSpec,
    threshold: f64,
    slice: Option<f64>,
    rec: &mut RunRecord,
) -> CliResult<DirectionalField> {
    rec.inputs.push(path.to_path_buf());
    let model = load_checkpoint(path).input()?;
    Ok(predict_field(&model, g, threshold, slice))
}

pub fn predict(args: &PredictArgs, rec: &mut RunRecord) -> CliResult<()> {
    let g = grid(args.resolution)?;
    let threshold = check_threshold(args.threshold)?;
    rec.config = serde_json::json!({ "resolution": args.resolution, "threshold": threshold, "slice": args.slice });
    let field = predict_from_checkpoint(&args.checkpoint, &g, threshold, args.slice, rec)?;
    write_directional(&field, &args.out).internal()?;
    rec.outputs.push(args.out.clone());
    rec.manifest = args.manifest.clone().unwrap_or_else(|| default_manifest(&args.out));
    Ok(())
}

/// One field per direction, in axis order, all on the same lattice.
fn order_fields(fields: Vec<DirectionalField>) -> CliResult<[DirectionalField; 3]> {
    let r = fields[0].grid().resolution();
    if let Some(f) = fields.iter().find(|f| f.grid().resolution() != r) {
        return Err(config_error(format!(
            "mixed grid resolutions: {r} and {} corners per axis",
            f.grid().resolution()
        )));
    }
    let mut slots: [Option<DirectionalField>; 3] = [None, None, None];
    for f in fields {
        let axis = f.direction().axis();
        if slots[axis].is_some() {
            return Err(config_error(format!("two inputs hold the {} field", f.direction())));
        }
        slots[axis] = Some(f);
    }
    Ok(slots.map(|s| s.expect("three distinct directions fill three slots")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconSummary {
    pub resolution: usize,
    pub tau: f64,
    pub points_pre_fusion: usize,
    pub points_post_fusion: usize,
    pub runtime_s: f64,
}

pub fn recon(args: &ReconArgs, rec: &mut RunRecord) -> CliResult<()> {
    let tau = check_tau(args.tau)?;
    let format = point_format(&args.out)?;
    let threshold = check_threshold(args.threshold)?;
    let fields = match (args.fields.is_empty(), args.checkpoints.is_empty()) {
        (false, true) => args
            .fields
            .iter()
            .map(|p| read_directional(p, rec))
            .collect::<CliResult<Vec<_>>>()?,
        (true, false) => {
            let r = args
                .resolution
                .ok_or_else(|| config_error("--checkpoints needs --resolution"))?;
            let g = grid(r)?;
            args.checkpoints
                .iter()
                .map(|p| predict_from_checkpoint(p, &g, threshold, None, rec))
                .collect::<CliResult<Vec<_>>>()?
        }
        _ => return Err(config_error("give exactly one of --fields or --checkpoints (three files)")),
    };
    let [lr, fb, ud] = order_fields(fields)?;
    let shape = load_shape(&args.shape, rec)?;
    if args.report.is_some() && shape.is_none() {
        return Err(config_error("--report needs --mesh or --fixture to evaluate against"));
    }
    let reference = reference(&args.reference)?;
    rec.config = serde_json::json!({
        "tau": tau,
        "threshold": threshold,
        "resolution": lr.grid().resolution(),
        "reference": reference,
        "fixture": args.shape.fixture,
    });
    let t = Instant::now();
    let set = reconstruct([&lr, &fb, &ud], tau);
    let runtime = t.elapsed().as_secs_f64();
    let normals = estimate_normals(&set.fused, 3.0 * set.grid.spacing());
    export_points(&set.fused_positions(), &normals, &args.out, format).internal()?;
    rec.outputs.push(args.out.clone());
    log::info!("{} points before fusion, {} after", set.pre_fusion_count(), set.fused.len());
    if let Some(path) = &args.report {
        let shape = shape.expect("checked above");
        let report = evaluate(&set, shape.surface.as_ref(), &reference, runtime)
            .map_err(|e| anyhow::anyhow!("{e}"))
            .input()?;
        log::info!("cd_gep x1e5 = {:.4e}", report.cd_gep_e5);
        write_json(&report, path)?;
        rec.outputs.push(path.clone());
    } else if let Some(path) = &args.summary {
        let summary = ReconSummary {
            resolution: set.grid.resolution(),
            tau,
            points_pre_fusion: set.pre_fusion_count(),
            points_post_fusion: set.fused.len(),
            runtime_s: runtime,
        };
        write_json(&summary, path)?;
        rec.outputs.push(path.clone());
    }
    rec.manifest = args.manifest.clone().unwrap_or_else(|| default_manifest(&args.out));
    Ok(())
}

pub fn baseline(args: &BaselineArgs, rec: &mut RunRecord) -> CliResult<()> {
    let format = point_format(&args.out)?;
    rec.inputs.push(args.grid.clone());
    let scalar = match read_field_file(&args.grid).input()? {
        FieldFile::Scalar(s) => s,
        FieldFile::Directional(_) => {
            return Err(input_error(format!("{} is a UODF file, expected an SDF or UDF grid", args.grid.display())))
        }
    };
    let (method, crossings) = match scalar.kind() {
        ScalarKind::Sdf => (Method::McSdfExact, mc_gep_from_sdf(&scalar)),
        ScalarKind::Udf => (Method::UdfGradsignExact, udf_gradient_sign_gep(&scalar)),
    };
    rec.config = serde_json::json!({ "method": method, "resolution": scalar.grid().resolution() });
    let points = crossing_points(&crossings);
    // interpolated edge points carry no orientation
    let normals = vec![Vec3::zeros(); points.len()];
    export_points(&points, &normals, &args.out, format).internal()?;
    log::info!("{method}: {} points", points.len());
    rec.outputs.push(args.out.clone());
    rec.manifest = args.manifest.clone().unwrap_or_else(|| default_manifest(&args.out));
    Ok(())
}

/// Evaluation of an arbitrary point set, without per-direction detail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsReport {
    pub convention: String,
    pub reference: GepReference,
    pub resolution: usize,
    pub points: usize,
    pub cd_gep: f64,
    pub cd_gep_e5: f64,
    pub surface_distance: DistanceStats,
    pub outliers: usize,
}

pub fn eval(args: &EvalArgs, rec: &mut RunRecord) -> CliResult<()> {
    let g = grid(args.resolution)?;
    let reference = reference(&args.reference)?;
    let shape = require_shape(&args.shape, rec, "eval")?;
    rec.inputs.push(args.points.clone());
    let points = read_points(&args.points).input()?;
    rec.config = serde_json::json!({
        "resolution": args.resolution,
        "reference": reference,
        "fixture": args.shape.fixture,
    });
    let reference_set = reference_points(shape.surface.as_ref(), &g, &reference);
    let cd = cd_gep(&points, &reference_set)
        .map_err(|e| anyhow::anyhow!("{}: {e}", args.points.display()))
        .input()?;
    let distances = surface_distances(&points, shape.surface.as_ref());
    let limit = OUTLIER_SPACINGS * g.spacing();
    let report = PointsReport {
        convention: CD_CONVENTION.to_string(),
        reference,
        resolution: args.resolution,
        points: points.len(),
        cd_gep: cd,
        cd_gep_e5: cd * CD_SCALE,
        outliers: distances.iter().filter(|&&d| d > limit).count(),
        surface_distance: DistanceStats::from_values(distances),
    };
    log::info!("cd_gep x1e5 = {:.4e}", report.cd_gep_e5);
    write_json(&report, &args.out)?;
    rec.outputs.push(args.out.clone());
    rec.manifest = args.manifest.clone().unwrap_or_else(|| default_manifest(&args.out));
    Ok(())
}

fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> CliResult<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    let items: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|e| config_error(format!("bad {what} `{s}`: {e}"))))
        .collect::<CliResult<_>>()?;
    if items.is_empty() {
        return Err(config_error(format!("empty {what} list")));
    }
    Ok(items)
}

pub fn bench(args: &BenchArgs, rec: &mut RunRecord) -> CliResult<()> {
    let methods: Vec<Method> = match &args.methods {
        Some(text) => parse_list(text, "method")?,
        None => Method::ALL.to_vec(),
    };
    let resolutions: Vec<usize> = parse_list(&args.resolutions, "resolution")?;
    for &r in &resolutions {
        grid(r)?;
    }
    let tau = check_tau(args.tau)?;
    let reference = reference(&args.reference)?;
    let shape = require_shape(&args.shape, rec, "bench")?;
    let name = match (&args.shape.fixture, &args.shape.mesh) {
        (Some(f), _) => f.clone(),
        (None, Some(p)) => p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        (None, None) => unreachable!("require_shape checked"),
    };
    rec.config = serde_json::json!({
        "fixture": name,
        "methods": methods,
        "resolutions": resolutions,
        "tau": tau,
        "reference": reference,
    });
    let rows = resolution_sweep(&name, shape.surface.as_ref(), &methods, &resolutions, tau, &reference);
    for row in &rows {
        match row.cd_gep_e5 {
            Some(cd) => log::info!("{} R={}: {} points, cd x1e5 {cd:.4e}", row.method, row.resolution, row.points),
            None => rec.warn(format!("{} R={}: no points", row.method, row.resolution)),
        }
    }
    let mut out = Vec::new();
    write_sweep_csv(&rows, &mut out).internal()?;
    crate::manifest::write_atomic(&args.out, &out)
        .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", args.out.display()))
        .internal()?;
    rec.outputs.push(args.out.clone());
    rec.manifest = args.manifest.clone().unwrap_or_else(|| default_manifest(&args.out));
    Ok(())
}
