//! Maximum interpenetration of a posed plug mesh into a posed socket mesh.

use std::path::PathBuf;

use anyhow::{Context, Result};
use assemblykit::geometry::{interpenetration, load_mesh, IpOptions};
use assemblykit::Pose6D;
use clap::Parser;

#[derive(Parser)]
#[command(about = "Report the interpenetration depth of a plug into a socket")]
struct Args {
    #[arg(long)]
    plug: PathBuf,
    #[arg(long)]
    socket: PathBuf,
    /// x y z qw qx qy qz
    #[arg(long, num_args = 7, allow_negative_numbers = true, required = true)]
    plug_pose: Vec<f64>,
    /// x y z qw qx qy qz
    #[arg(long, num_args = 7, allow_negative_numbers = true, required = true)]
    socket_pose: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn pose(v: &[f64]) -> Result<Pose6D> {
    let a: [f64; 7] = v.try_into().context("a pose takes 7 numbers")?;
    Ok(Pose6D::from_array7(a)?)
}

fn main() -> Result<()> {
    let args = Args::parse();
    let (plug, _) = load_mesh(&args.plug, None).with_context(|| format!("loading {}", args.plug.display()))?;
    let (socket, _) = load_mesh(&args.socket, None).with_context(|| format!("loading {}", args.socket.display()))?;
    let opts = IpOptions { n: args.n, seed: args.seed, ..IpOptions::default() };
    let report = interpenetration(&plug, &socket, &pose(&args.plug_pose)?, &pose(&args.socket_pose)?, &opts)?;
    println!("{}", serde_json::to_string(&report)?);
    Ok(())
}
