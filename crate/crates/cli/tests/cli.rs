use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn uodf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uodf"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("UODF_THREADS")
        .output()
        .expect("spawn uodf")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = uodf(dir, args);
    assert_eq!(code(&out), 0, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

#[test]
fn gt_writes_fields_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), &["gt", "--fixture", "sphere", "-r", "17", "-o", "gt"]);
    for name in ["lr.uodf", "fb.uodf", "ud.uodf", "udf.grid", "sdf.grid"] {
        assert!(dir.path().join("gt").join(name).is_file(), "{name}");
    }
    let m = json(&dir.path().join("gt/manifest.json"));
    assert_eq!(m["command"], "gt");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 5);
    assert_eq!(m["config"]["resolution"], 17);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert!(m["versions"]["uodf"].is_string());
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
}

#[test]
fn gt_on_a_mesh_file_hashes_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let obj = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
               f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\n\
               f 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";
    fs::write(dir.path().join("cube.obj"), obj).unwrap();
    ok(dir.path(), &["gt", "--mesh", "cube.obj", "-r", "9", "-o", "open"]);
    assert!(!dir.path().join("open/sdf.grid").exists());
    ok(dir.path(), &["gt", "--mesh", "cube.obj", "--watertight", "-r", "9", "-o", "closed"]);
    assert!(dir.path().join("closed/sdf.grid").is_file());
    let m = json(&dir.path().join("closed/manifest.json"));
    let input = &m["inputs"][0];
    assert_eq!(input["path"], "cube.obj");
    assert_eq!(input["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn exit_codes_follow_error_classes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&uodf(d, &["gt", "--fixture", "sphere", "-r", "1", "-o", "x"])), 3);
    assert_eq!(code(&uodf(d, &["gt", "--mesh", "missing.obj", "-r", "9", "-o", "x"])), 2);
    assert_eq!(code(&uodf(d, &["gt", "--fixture", "teapot", "-r", "9", "-o", "x"])), 3);
    assert_eq!(code(&uodf(d, &["frobnicate"])), 3);
    assert_eq!(code(&uodf(d, &["--help"])), 0);
    fs::write(d.join("junk.uodf"), b"not a field").unwrap();
    let out = uodf(d, &["recon", "--fields", "junk.uodf", "junk.uodf", "junk.uodf", "-o", "p.ply"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn thread_cap_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_uodf"))
            .args(["gt", "--fixture", "sphere", "-r", "9", "-o", "gt"])
            .current_dir(dir.path())
            .env("UODF_THREADS", value)
            .output()
            .unwrap()
    };
    assert_eq!(code(&run("zero")), 3);
    assert_eq!(code(&run("0")), 3);
    let out = run("1");
    assert_eq!(code(&out), 0);
    assert_eq!(json(&dir.path().join("gt/manifest.json"))["threads"], 1);
}

#[test]
fn recon_reports_tau_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gt", "--fixture", "sphere", "-r", "33", "-o", "gt"]);
    let recon = |out: &str| {
        ok(
            d,
            &[
                "recon", "--fields", "gt/ud.uodf", "gt/lr.uodf", "gt/fb.uodf", "--tau", "0.00390625", "-o", out,
                "--fixture", "sphere", "--report", "report.json",
            ],
        )
    };
    recon("a.ply");
    recon("b.ply");
    assert_eq!(fs::read(d.join("a.ply")).unwrap(), fs::read(d.join("b.ply")).unwrap());
    let report = json(&d.join("report.json"));
    assert_eq!(report["tau"], 0.00390625);
    assert_eq!(report["resolution"], 33);
    assert!(report["cd_gep_e5"].as_f64().unwrap() < 0.5);
    let m = json(&d.join("a.ply.manifest.json"));
    assert_eq!(m["config"]["tau"], 0.00390625);
    assert_eq!(m["inputs"].as_array().unwrap().len(), 3);
}

#[test]
fn recon_rejects_mixed_resolutions_and_missing_directions() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gt", "--fixture", "sphere", "-r", "9", "-o", "a"]);
    ok(d, &["gt", "--fixture", "sphere", "-r", "17", "-o", "b"]);
    let out = uodf(d, &["recon", "--fields", "a/lr.uodf", "a/fb.uodf", "b/ud.uodf", "-o", "p.ply"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("mixed grid resolutions"));
    let out = uodf(d, &["recon", "--fields", "a/lr.uodf", "a/lr.uodf", "a/ud.uodf", "-o", "p.ply"]);
    assert_eq!(code(&out), 3);
    let out = uodf(d, &["recon", "--fields", "a/lr.uodf", "a/fb.uodf", "a/ud.uodf", "--tau", "0", "-o", "p.ply"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn baseline_and_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gt", "--fixture", "sphere", "-r", "17", "-o", "gt"]);
    ok(d, &["baseline", "--grid", "gt/sdf.grid", "-o", "mc.xyz"]);
    ok(d, &["baseline", "--grid", "gt/udf.grid", "-o", "gs.ply"]);
    assert_eq!(json(&d.join("mc.xyz.manifest.json"))["config"]["method"], "mc_sdf_exact");
    assert_eq!(json(&d.join("gs.ply.manifest.json"))["config"]["method"], "udf_gradsign_exact");
    ok(d, &["eval", "--points", "mc.xyz", "--fixture", "sphere", "-r", "17", "-o", "mc.json"]);
    let report = json(&d.join("mc.json"));
    let cd = report["cd_gep_e5"].as_f64().unwrap();
    assert!(cd > 0.0 && cd.is_finite());
    assert!(report["points"].as_u64().unwrap() > 0);
    ok(
        d,
        &["eval", "--points", "gs.ply", "--fixture", "sphere", "-r", "17", "--reference", "samples", "--samples", "2000", "-o", "gs.json"],
    );
    assert_eq!(json(&d.join("gs.json"))["reference"]["kind"], "surface_samples");
    assert_eq!(code(&uodf(d, &["baseline", "--grid", "gt/lr.uodf", "-o", "x.ply"])), 2);
}

#[test]
fn bench_writes_csv_and_rejects_bad_lists() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["bench", "--fixture", "plates", "--resolutions", "9,17", "-o", "t.csv"]);
    let text = fs::read_to_string(d.join("t.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "fixture,method,resolution,points,cd_gep,cd_gep_e5,max_surface_distance,runtime_s"
    );
    assert_eq!(lines.count(), 6);
    assert_eq!(code(&uodf(d, &["bench", "--fixture", "plates", "--methods", "mc,uodf_exact", "--resolutions", "9", "-o", "t.csv"])), 3);
    assert_eq!(code(&uodf(d, &["bench", "--fixture", "plates", "--resolutions", "", "-o", "t.csv"])), 3);
    assert_eq!(code(&uodf(d, &["bench", "--fixture", "plates", "--resolutions", " , ", "-o", "t.csv"])), 3);
}

#[test]
fn fit_predict_recon_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["gt", "--fixture", "sphere", "-r", "9", "-o", "gt"]);
    let cfg = r#"{"epochs": 50, "batch_size": 64, "points_per_ray": 16, "resample_every": 5,
                  "arch": {"width": 16, "uodf_layers": 3, "mask_width": 8, "mask_layers": 2, "frequencies": 2}}"#;
    fs::write(d.join("cfg.json"), cfg).unwrap();
    for dir in ["lr", "fb", "ud"] {
        let field = format!("gt/{dir}.uodf");
        let out = format!("{dir}.bin");
        ok(d, &["fit", "--field", &field, "--direction", dir, "--config", "cfg.json", "--epochs", "2", "--seed", "7", "-o", &out]);
    }
    let m = json(&d.join("lr.bin.manifest.json"));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["epochs"], 2);
    assert_eq!(m["config"]["lattice"], 9);
    assert_eq!(m["config"]["arch"]["width"], 16);
    assert_eq!(json(&d.join("lr.log.json")).as_array().unwrap().len(), 2);

    ok(d, &["predict", "--checkpoint", "lr.bin", "-r", "9", "-o", "lr_pred.uodf"]);
    assert!(d.join("lr_pred.uodf").is_file());
    ok(d, &["recon", "--checkpoints", "lr.bin", "fb.bin", "ud.bin", "-r", "9", "-o", "p.xyz", "--summary", "s.json"]);
    assert_eq!(json(&d.join("s.json"))["resolution"], 9);

    let wrong = uodf(d, &["fit", "--field", "gt/lr.uodf", "--direction", "ud", "--epochs", "1", "-o", "w.bin"]);
    assert_eq!(code(&wrong), 3);
    let bad = uodf(d, &["fit", "--field", "gt/lr.uodf", "--config", "cfg.json", "--learning-rate", "0", "-o", "w.bin"]);
    assert_eq!(code(&bad), 3);
    let predicted = uodf(d, &["fit", "--field", "lr_pred.uodf", "--config", "cfg.json", "-o", "w.bin"]);
    assert_eq!(code(&predicted), 2);
    let no_res = uodf(d, &["recon", "--checkpoints", "lr.bin", "fb.bin", "ud.bin", "-o", "p.xyz"]);
    assert_eq!(code(&no_res), 3);
}
