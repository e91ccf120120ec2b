//! Bakes a mesh's signed distance field to an SDFG grid file.

use std::path::PathBuf;

use anyhow::{Context, Result};
use assemblykit::geometry::{bake_sdf, load_mesh};
use clap::Parser;

#[derive(Parser)]
#[command(about = "Bake a signed distance grid from an STL or OBJ mesh")]
struct Args {
    #[arg(long)]
    mesh: PathBuf,
    /// Voxel edge length (m).
    #[arg(long)]
    voxel: f64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let (mesh, warnings) = load_mesh(&args.mesh, None).with_context(|| format!("loading {}", args.mesh.display()))?;
    for w in &warnings {
        eprintln!("warning: {w:?}");
    }
    let grid = bake_sdf(&mesh, args.voxel)?;
    grid.save(&args.out)?;
    let summary = serde_json::json!({
        "out": args.out,
        "dims": grid.dims,
        "origin": [grid.origin.x, grid.origin.y, grid.origin.z],
        "voxel_size": grid.voxel_size,
    });
    println!("{summary}");
    Ok(())
}
