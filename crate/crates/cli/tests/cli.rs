use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const CUBE_OBJ: &str = "v -0.5 -0.5 -0.5\nv 0.5 -0.5 -0.5\nv 0.5 0.5 -0.5\nv -0.5 0.5 -0.5\n\
v -0.5 -0.5 0.5\nv 0.5 -0.5 0.5\nv 0.5 0.5 0.5\nv -0.5 0.5 0.5\n\
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\nf 2 3 7\nf 2 7 6\nf 3 4 8\nf 3 8 7\nf 4 1 5\nf 4 5 8\n";

fn cube(dir: &Path) -> PathBuf {
    let p = dir.join("cube.obj");
    fs::write(&p, CUBE_OBJ).unwrap();
    p
}

fn run(bin: &str, args: &[&str]) -> Output {
    Command::new(bin).args(args).output().unwrap()
}

fn json_ok(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn sdf_bake_writes_a_grid() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = cube(dir.path());
    let out = dir.path().join("cube.sdf");
    let v = json_ok(&run(
        env!("CARGO_BIN_EXE_sdf-bake"),
        &["--mesh", mesh.to_str().unwrap(), "--voxel", "0.1", "--out", out.to_str().unwrap()],
    ));
    assert_eq!(v["voxel_size"], 0.1);
    assert!(v["dims"].as_array().unwrap().iter().all(|d| d.as_u64().unwrap() >= 10));
    let grid = assemblykit::geometry::SdfGrid::load(&out).unwrap();
    assert!((grid.distance(&assemblykit::Vec3::zeros()) + 0.5).abs() < 0.2);
}

#[test]
fn ip_check_reports_depth() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = cube(dir.path());
    let m = mesh.to_str().unwrap();
    let check = |x: &str| {
        json_ok(&run(
            env!("CARGO_BIN_EXE_ip-check"),
            &["--plug", m, "--socket", m, "--plug-pose", x, "0", "0", "1", "0", "0", "0", "--socket-pose", "0", "0", "0", "1", "0", "0", "0"],
        ))
    };
    assert_eq!(check("2.0")["max_depth"], 0.0);
    let d = check("-0.5")["max_depth"].as_f64().unwrap();
    assert!(d > 0.4 && d <= 0.5, "{d}");
}

#[test]
fn eval_reward_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    cube(dir.path());
    let scenario = |name: &str, body: &str| {
        let p = dir.path().join(name);
        fs::write(&p, body).unwrap();
        json_ok(&run(env!("CARGO_BIN_EXE_eval-reward"), &[p.to_str().unwrap()]))
    };
    let v = scenario(
        "sixdof.json",
        r#"{"reward": "sixdof", "plug": "cube.obj", "plug_pose": [0.1, 0, 0, 1, 0, 0, 0], "goal_pose": [0, 0, 0, 1, 0, 0, 0]}"#,
    );
    assert!((v["reward"].as_f64().unwrap() + 0.01).abs() < 1e-12);
    let v = scenario(
        "chamfer.json",
        r#"{"reward": "chamfer", "plug": "cube.obj", "socket": "cube.obj", "plug_pose": [0, 0, 0, 1, 0, 0, 0], "socket_pose": [0, 0, 0, 1, 0, 0, 0]}"#,
    );
    assert_eq!(v["reward"], 0.0);
    let v = scenario(
        "sdf.json",
        r#"{"reward": "sdf", "plug": "cube.obj", "plug_pose": [0.2, 0, 0, 1, 0, 0, 0], "goal_pose": [0, 0, 0, 1, 0, 0, 0], "n": 50, "breakdown": true}"#,
    );
    let r = v["reward"].as_f64().unwrap();
    assert!(r < -(1e-4f64).ln() && r > -(1.0f64).ln() - 1.0, "{r}");
    assert_eq!(v["per_point_breakdown"].as_array().unwrap().len(), 50);
}

#[test]
fn run_control_writes_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let v = json_ok(&run(
        env!("CARGO_BIN_EXE_run-control"),
        &["--scheme", "leaky-plai", "--disturbance", "gravity", "--trials", "1", "--out", out.to_str().unwrap()],
    ));
    assert_eq!(v["trials"], 3);
    assert!(v["mean_steady_state_error"].as_f64().unwrap() < 0.01);
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("trial,step,err_x,err_y,err_z,err_ang,setpoint_x"));
    // 3 goals × 600 control steps, plus the header.
    assert_eq!(text.lines().count(), 1801);
}

#[test]
fn run_experiment_reports_config_paths() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"name": "x", "experiment": "reward_ablation", "trainer": {"cem": {"pop": "many"}}}"#).unwrap();
    let out = run(env!("CARGO_BIN_EXE_run-experiment"), &["--config", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("trainer.cem.pop"), "{err}");
}

#[test]
fn run_experiment_writes_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("control.json");
    fs::write(
        &cfg,
        r#"{"name": "ctl", "experiment": "control_ablation", "control": {
            "schemes": ["nominal", "plai"], "disturbances": ["ideal", "gravity"],
            "evaluation": {"trials_per_goal": 1}}}"#,
    )
    .unwrap();
    let results = dir.path().join("results");
    let out = run(
        env!("CARGO_BIN_EXE_run-experiment"),
        &["--config", cfg.to_str().unwrap(), "--out", results.to_str().unwrap(), "--threads", "1"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: Value = serde_json::from_str(&fs::read_to_string(results.join("ctl/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["cells"].as_array().unwrap().len(), 4);
    assert!(results.join("ctl/records.csv").exists());
}
