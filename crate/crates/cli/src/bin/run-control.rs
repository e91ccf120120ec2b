//! Simulated reach trials for one action scheme under one disturbance.

use std::path::PathBuf;

use anyhow::Result;
use assemblykit::control::reach::{ablation_cell_config, mean};
use assemblykit::control::{run_reach_episode, AblationConfig, DisturbanceKind, Scheme, TrialSet};
use clap::{Parser, ValueEnum};
use serde::Serialize;

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Nominal,
    Pid,
    Plai,
    LeakyPlai,
}

#[derive(Clone, Copy, ValueEnum)]
enum DisturbanceArg {
    Ideal,
    Friction,
    Gravity,
}

#[derive(Parser)]
#[command(about = "Run reach trials and write per-step errors and setpoints")]
struct Args {
    #[arg(long, value_enum)]
    scheme: SchemeArg,
    #[arg(long, value_enum)]
    disturbance: DisturbanceArg,
    /// Trials per goal (three goals).
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Row {
    trial: usize,
    step: usize,
    err_x: f64,
    err_y: f64,
    err_z: f64,
    err_ang: f64,
    setpoint_x: f64,
    setpoint_y: f64,
    setpoint_z: f64,
    setpoint_qw: f64,
    setpoint_qx: f64,
    setpoint_qy: f64,
    setpoint_qz: f64,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let scheme = match args.scheme {
        SchemeArg::Nominal => Scheme::Nominal,
        SchemeArg::Pid => Scheme::Pid,
        SchemeArg::Plai => Scheme::Plai,
        SchemeArg::LeakyPlai => Scheme::LeakyPlai,
    };
    let kind = match args.disturbance {
        DisturbanceArg::Ideal => DisturbanceKind::Ideal,
        DisturbanceArg::Friction => DisturbanceKind::Friction,
        DisturbanceArg::Gravity => DisturbanceKind::Gravity,
    };
    // PID gains come from the default tuning set.
    let (cfg, tuning) = ablation_cell_config(&AblationConfig::default(), scheme, kind)?;
    let set = TrialSet { trials_per_goal: args.trials, seed: args.seed, ..TrialSet::default() };
    let mut w = csv::Writer::from_path(&args.out)?;
    let mut errors = Vec::new();
    for (trial, (g, _, start, seed)) in set.trials().into_iter().enumerate() {
        let r = run_reach_episode(&cfg, &start, &set.goals[g], seed)?;
        errors.push(r.steady_state_error);
        for rec in &r.records {
            let [x, y, z, qw, qx, qy, qz] = rec.setpoint.to_array7();
            w.serialize(Row {
                trial,
                step: rec.step,
                err_x: rec.error.x,
                err_y: rec.error.y,
                err_z: rec.error.z,
                err_ang: rec.error_angle,
                setpoint_x: x,
                setpoint_y: y,
                setpoint_z: z,
                setpoint_qw: qw,
                setpoint_qx: qx,
                setpoint_qy: qy,
                setpoint_qz: qz,
            })?;
        }
    }
    w.flush()?;
    let summary = serde_json::json!({
        "scheme": scheme.name(),
        "disturbance": kind,
        "trials": errors.len(),
        "mean_steady_state_error": mean(&errors),
        "pid": tuning.map(|t| serde_json::json!({ "ki": t.ki, "clamp": t.clamp })),
    });
    println!("{summary}");
    Ok(())
}
