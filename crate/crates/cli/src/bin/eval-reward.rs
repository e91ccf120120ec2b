//! Evaluates one dense reward for a scenario file and prints a JSON record.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use assemblykit::geometry::sdf::default_voxel_size;
use assemblykit::geometry::{bake_sdf, load_mesh, sample_points, SampleMode, TriangleMesh};
use assemblykit::rewards::sdf::sdf_reward_breakdown;
use assemblykit::rewards::{chamfer_reward, keypoint_reward, KeypointLayout, KeypointSet, DEFAULT_SDF_FLOOR};
use assemblykit::Pose6D;
use clap::Parser;
use serde::Deserialize;

#[derive(Parser)]
#[command(about = "Evaluate a dense reward (sdf, sixdof, collinear, chamfer) for a scenario JSON")]
struct Args {
    scenario: PathBuf,
}

/// Mesh paths are relative to the scenario file. Poses are
/// `[x, y, z, qw, qx, qy, qz]`.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Scenario {
    reward: String,
    plug: PathBuf,
    socket: Option<PathBuf>,
    plug_pose: [f64; 7],
    goal_pose: Option<[f64; 7]>,
    socket_pose: Option<[f64; 7]>,
    #[serde(default = "default_n")]
    n: usize,
    #[serde(default)]
    seed: u64,
    voxel: Option<f64>,
    #[serde(default = "default_floor")]
    floor: f64,
    #[serde(default)]
    breakdown: bool,
}

fn default_n() -> usize {
    1000
}

fn default_floor() -> f64 {
    DEFAULT_SDF_FLOOR
}

fn mesh(base: &Path, p: &Path) -> Result<TriangleMesh> {
    let path = base.join(p);
    Ok(load_mesh(&path, None).with_context(|| format!("loading {}", path.display()))?.0)
}

fn pose(v: Option<[f64; 7]>, name: &str) -> Result<Pose6D> {
    Ok(Pose6D::from_array7(v.with_context(|| format!("reward needs `{name}`"))?)?)
}

fn main() -> Result<()> {
    let args = Args::parse();
    let text = std::fs::read_to_string(&args.scenario).with_context(|| format!("reading {}", args.scenario.display()))?;
    let sc: Scenario = serde_json::from_str(&text).with_context(|| format!("parsing {}", args.scenario.display()))?;
    let base = args.scenario.parent().unwrap_or(Path::new("."));
    let plug = mesh(base, &sc.plug)?;
    let current = Pose6D::from_array7(sc.plug_pose)?;
    let record = match sc.reward.as_str() {
        "sdf" => {
            let goal = pose(sc.goal_pose, "goal_pose")?;
            let grid = bake_sdf(&plug, sc.voxel.unwrap_or_else(|| default_voxel_size(&plug)))?;
            let points = sample_points(&plug, sc.n, SampleMode::Surface, sc.seed)?.points;
            let b = sdf_reward_breakdown(&points, &current, &grid, &goal, sc.floor);
            let mut r = serde_json::json!({ "reward": b.reward, "mean_abs_distance": b.mean_abs_distance });
            if sc.breakdown {
                r["per_point_breakdown"] = serde_json::json!(b.per_point);
            }
            r
        }
        "sixdof" | "collinear" => {
            let goal = pose(sc.goal_pose, "goal_pose")?;
            let layout = if sc.reward == "sixdof" { KeypointLayout::Sixdof13 } else { KeypointLayout::Collinear4 };
            let set = KeypointSet::new(layout, plug.bbox());
            serde_json::json!({ "reward": keypoint_reward(&set, &current, &goal) })
        }
        "chamfer" => {
            let socket = mesh(base, sc.socket.as_deref().context("chamfer needs `socket`")?)?;
            let socket_pose = pose(sc.socket_pose, "socket_pose")?;
            let a: Vec<_> = plug.vertices().iter().map(|p| current.transform_point(p)).collect();
            let b: Vec<_> = socket.vertices().iter().map(|p| socket_pose.transform_point(p)).collect();
            serde_json::json!({ "reward": chamfer_reward(&a, &b)? })
        }
        other => bail!("unknown reward '{other}' (sdf|sixdof|collinear|chamfer)"),
    };
    println!("{record}");
    Ok(())
}
