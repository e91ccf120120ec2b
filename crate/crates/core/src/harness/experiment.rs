//! Config-driven ablations. Each run writes `records.csv` and
//! `summary.json` under `<out>/<name>/`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{run_control_ablation, AblationConfig, AblationRow, DisturbanceKind, Scheme};
use crate::curriculum::{CurriculumMode, CurriculumState};
use crate::error::{Error, Result};
use crate::harness::assets::{build_assets, AssetSpec, ToyAssets};
use crate::harness::cem::{cem_train, CemConfig, TrainResult, TrainSetup};
use crate::harness::env::{EnvConfig, RewardKind};
use crate::harness::randomization::RandomizationSpec;
use crate::sapu::{SapuConfig, SapuStrategy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    RewardAblation,
    SapuAblation,
    CurriculumAblation,
    ControlAblation,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::RewardAblation => "reward_ablation",
            ExperimentKind::SapuAblation => "sapu_ablation",
            ExperimentKind::CurriculumAblation => "curriculum_ablation",
            ExperimentKind::ControlAblation => "control_ablation",
        }
    }
}

/// `kind` is used when another component is ablated; `variants` when this
/// one is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardSection {
    pub kind: RewardKind,
    pub variants: Vec<RewardKind>,
}

impl Default for RewardSection {
    fn default() -> Self {
        Self { kind: RewardKind::Sdf, variants: RewardKind::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SapuSection {
    pub config: SapuConfig,
    pub variants: Vec<SapuStrategy>,
}

impl Default for SapuSection {
    fn default() -> Self {
        Self { config: SapuConfig::default(), variants: SapuStrategy::ALL.to_vec() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurriculumSection {
    pub state: CurriculumState,
    pub variants: Vec<CurriculumMode>,
}

impl Default for CurriculumSection {
    fn default() -> Self {
        Self {
            state: CurriculumState::default(),
            variants: vec![CurriculumMode::None, CurriculumMode::Standard, CurriculumMode::Sampling],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainerSection {
    pub cem: CemConfig,
    /// `env.reward` is overridden by the reward section.
    pub env: EnvConfig,
    pub randomization: RandomizationSpec,
}

fn default_seeds() -> Vec<u64> {
    (0..5).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub assets: AssetSpec,
    #[serde(default)]
    pub reward: RewardSection,
    #[serde(default)]
    pub sapu: SapuSection,
    #[serde(default)]
    pub curriculum: CurriculumSection,
    #[serde(default)]
    pub control: AblationConfig,
    #[serde(default)]
    pub trainer: TrainerSection,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| Error::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, m: &str| Err(Error::Config { path: path.into(), message: m.into() });
        let ok_name = !self.name.is_empty()
            && self.name.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            && self.name != "."
            && self.name != "..";
        if !ok_name {
            return bad("name", "must be non-empty and use only [A-Za-z0-9._-]");
        }
        if self.seeds.is_empty() {
            return bad("seeds", "at least one seed required");
        }
        let empty = match self.experiment {
            ExperimentKind::RewardAblation => self.reward.variants.is_empty().then_some("reward.variants"),
            ExperimentKind::SapuAblation => self.sapu.variants.is_empty().then_some("sapu.variants"),
            ExperimentKind::CurriculumAblation => self.curriculum.variants.is_empty().then_some("curriculum.variants"),
            ExperimentKind::ControlAblation => {
                (self.control.schemes.is_empty() || self.control.disturbances.is_empty()).then_some("control")
            }
        };
        if let Some(path) = empty {
            return bad(path, "nothing to ablate");
        }
        Ok(())
    }

    /// Training setup for one variant of the ablated component.
    fn setup(&self, assets: &Arc<ToyAssets>, variant: Variant, seed: u64) -> TrainSetup {
        let mut env = EnvConfig { reward: self.reward.kind, ..self.trainer.env };
        let mut sapu = self.sapu.config;
        let mut curriculum = self.curriculum.state;
        match variant {
            Variant::Reward(k) => env.reward = k,
            Variant::Sapu(s) => sapu.strategy = s,
            Variant::Curriculum(m) => curriculum.mode = m,
        }
        TrainSetup {
            assets: assets.clone(),
            env,
            randomization: self.trainer.randomization,
            sapu,
            curriculum,
            cem: CemConfig { seed, ..self.trainer.cem },
        }
    }

    fn variants(&self) -> Vec<Variant> {
        match self.experiment {
            ExperimentKind::RewardAblation => self.reward.variants.iter().map(|&k| Variant::Reward(k)).collect(),
            ExperimentKind::SapuAblation => self.sapu.variants.iter().map(|&s| Variant::Sapu(s)).collect(),
            ExperimentKind::CurriculumAblation => self.curriculum.variants.iter().map(|&m| Variant::Curriculum(m)).collect(),
            ExperimentKind::ControlAblation => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Variant {
    Reward(RewardKind),
    Sapu(SapuStrategy),
    Curriculum(CurriculumMode),
}

impl Variant {
    fn name(self) -> String {
        match self {
            Variant::Reward(k) => k.name().to_string(),
            Variant::Sapu(s) => serde_json::to_value(s).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default(),
            Variant::Curriculum(m) => m.name().to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub success_rate: f64,
    pub engagement_rate: f64,
    pub mean_position_error: f64,
    pub mean_d_ip: f64,
    pub final_z_low: f64,
    pub variance_diverged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub variant: String,
    pub runs: Vec<RunSummary>,
    pub mean_success_rate: f64,
    pub mean_engagement_rate: f64,
    pub mean_position_error: f64,
}

/// Directional ordering of the reward ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardOrdering {
    /// sdf ≥ sixdof ≥ collinear ≥ chamfer, each within `ORDER_SLACK`.
    pub order_holds: bool,
    pub sdf_minus_collinear: f64,
    pub pass: bool,
}

/// A lower-ranked variant may exceed a higher one by this much.
pub const ORDER_SLACK: f64 = 0.05;
/// Required margin of the SDF reward over collinear keypoints.
pub const SDF_MARGIN: f64 = 0.10;

pub fn reward_ordering(success: &BTreeMap<String, f64>) -> Option<RewardOrdering> {
    let order = ["sdf", "sixdof", "collinear", "chamfer"];
    let v: Vec<f64> = order.iter().map(|k| success.get(*k).copied()).collect::<Option<_>>()?;
    let order_holds = v.windows(2).all(|w| w[0] >= w[1] - ORDER_SLACK);
    let margin = v[0] - v[2];
    Some(RewardOrdering { order_holds, sdf_minus_collinear: margin, pass: order_holds && margin >= SDF_MARGIN })
}

/// Sampling-based curriculum at least as successful as both baselines.
pub fn sampling_not_worse(success: &BTreeMap<String, f64>) -> Option<bool> {
    let s = *success.get("sampling")?;
    Some(s >= *success.get("standard")? && s >= *success.get("none")?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub name: String,
    pub experiment: ExperimentKind,
    pub seeds: Vec<u64>,
    pub eps_k: f64,
    pub eps_k_scaling: String,
    pub eps_h: f64,
    pub variants: Vec<VariantSummary>,
    pub reward_ordering: Option<RewardOrdering>,
    pub sampling_not_worse: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCheck {
    pub disturbance: DisturbanceKind,
    pub plai: f64,
    pub pid: f64,
    pub nominal: f64,
    pub plai_ideal: f64,
    /// plai ≤ pid ≤ nominal.
    pub ordering: bool,
    /// plai < nominal / 3.
    pub plai_beats_nominal: bool,
    /// plai ≤ 2 × its ideal-condition error.
    pub plai_near_ideal: bool,
}

impl ControlCheck {
    pub fn pass(&self) -> bool {
        self.ordering && self.plai_beats_nominal && self.plai_near_ideal
    }
}

/// Checks every non-ideal disturbance whose PLAI, PID and nominal cells and
/// ideal PLAI cell are present.
pub fn control_checks(rows: &[AblationRow]) -> Vec<ControlCheck> {
    let cell = |s: Scheme, d: DisturbanceKind| rows.iter().find(|r| r.scheme == s && r.disturbance == d).map(|r| r.mean_error);
    let Some(plai_ideal) = cell(Scheme::Plai, DisturbanceKind::Ideal) else {
        return Vec::new();
    };
    DisturbanceKind::ALL
        .into_iter()
        .filter(|&d| d != DisturbanceKind::Ideal)
        .filter_map(|d| {
            let (plai, pid, nominal) = (cell(Scheme::Plai, d)?, cell(Scheme::Pid, d)?, cell(Scheme::Nominal, d)?);
            Some(ControlCheck {
                disturbance: d,
                plai,
                pid,
                nominal,
                plai_ideal,
                ordering: plai <= pid && pid <= nominal,
                plai_beats_nominal: plai < nominal / 3.0,
                plai_near_ideal: plai <= 2.0 * plai_ideal,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSummary {
    pub name: String,
    pub experiment: ExperimentKind,
    pub cells: Vec<ControlCell>,
    pub checks: Vec<ControlCheck>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlCell {
    pub scheme: Scheme,
    pub disturbance: DisturbanceKind,
    pub mean_error: f64,
    pub pid_ki: Option<f64>,
    pub pid_clamp: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RecordRow {
    variant: String,
    seed: u64,
    iteration: usize,
    mean_return: f64,
    success_rate: f64,
    engagement_rate: f64,
    p_n: f64,
    z_low: f64,
    stage: u32,
    sapu_inclusion: f64,
    mean_d_ip: f64,
    policy_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrialRow {
    scheme: Scheme,
    disturbance: DisturbanceKind,
    trial: usize,
    steady_state_error: f64,
}

/// Every training run of one ablation, keyed by variant name.
pub struct TrainingRuns {
    pub summary: TrainingSummary,
    pub results: Vec<(String, u64, TrainResult)>,
}

pub fn run_training_ablation(cfg: &ExperimentConfig) -> Result<TrainingRuns> {
    cfg.validate()?;
    if cfg.experiment == ExperimentKind::ControlAblation {
        return Err(Error::Config { path: "experiment".into(), message: "control_ablation has no training runs".into() });
    }
    let assets = Arc::new(build_assets(&cfg.assets)?);
    let mut results = Vec::new();
    let mut variants = Vec::new();
    for variant in cfg.variants() {
        let mut runs = Vec::new();
        for &seed in &cfg.seeds {
            let r = cem_train(&cfg.setup(&assets, variant, seed))?;
            runs.push(RunSummary {
                seed,
                success_rate: r.evaluation.success_rate,
                engagement_rate: r.evaluation.engagement_rate,
                mean_position_error: r.evaluation.mean_position_error,
                mean_d_ip: r.evaluation.mean_d_ip,
                final_z_low: r.records.last().map_or(cfg.curriculum.state.z_low, |x| x.z_low),
                variance_diverged: r.variance_diverged,
            });
            results.push((variant.name(), seed, r));
        }
        let n = runs.len() as f64;
        variants.push(VariantSummary {
            variant: variant.name(),
            mean_success_rate: runs.iter().map(|r| r.success_rate).sum::<f64>() / n,
            mean_engagement_rate: runs.iter().map(|r| r.engagement_rate).sum::<f64>() / n,
            mean_position_error: runs.iter().map(|r| r.mean_position_error).sum::<f64>() / n,
            runs,
        });
    }
    let success: BTreeMap<String, f64> = variants.iter().map(|v| (v.variant.clone(), v.mean_success_rate)).collect();
    let summary = TrainingSummary {
        name: cfg.name.clone(),
        experiment: cfg.experiment,
        seeds: cfg.seeds.clone(),
        eps_k: assets.eps_k,
        eps_k_scaling: format!(
            "eps_k scaled from 0.10 m to the plug bbox diagonal ({:.4} m); 0.10 m exceeds the toy's extent",
            assets.eps_k
        ),
        eps_h: cfg.trainer.env.eps_h,
        reward_ordering: (cfg.experiment == ExperimentKind::RewardAblation).then(|| reward_ordering(&success)).flatten(),
        sampling_not_worse: (cfg.experiment == ExperimentKind::CurriculumAblation).then(|| sampling_not_worse(&success)).flatten(),
        variants,
    };
    Ok(TrainingRuns { summary, results })
}

pub fn run_control_experiment(cfg: &ExperimentConfig) -> Result<(ControlSummary, Vec<AblationRow>)> {
    cfg.validate()?;
    let rows = run_control_ablation(&cfg.control)?;
    let checks = control_checks(&rows);
    let cells = rows
        .iter()
        .map(|r| ControlCell {
            scheme: r.scheme,
            disturbance: r.disturbance,
            mean_error: r.mean_error,
            pid_ki: r.pid.map(|p| p.0),
            pid_clamp: r.pid.map(|p| p.1),
        })
        .collect();
    let pass = !checks.is_empty() && checks.iter().all(ControlCheck::pass);
    let summary = ControlSummary { name: cfg.name.clone(), experiment: cfg.experiment, cells, checks, pass };
    Ok((summary, rows))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Runs the configured experiment and returns the output directory.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    cfg.validate()?;
    let dir = out.join(&cfg.name);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    if cfg.experiment == ExperimentKind::ControlAblation {
        let (summary, rows) = run_control_experiment(cfg)?;
        let trials = rows.iter().flat_map(|r| {
            r.trial_errors.iter().enumerate().map(move |(trial, &e)| TrialRow {
                scheme: r.scheme,
                disturbance: r.disturbance,
                trial,
                steady_state_error: e,
            })
        });
        write_csv(&dir.join("records.csv"), trials)?;
        write_json(&dir.join("summary.json"), &summary)?;
    } else {
        let runs = run_training_ablation(cfg)?;
        let records = runs.results.iter().flat_map(|(variant, seed, r)| {
            r.records.iter().map(move |x| RecordRow {
                variant: variant.clone(),
                seed: *seed,
                iteration: x.iteration,
                mean_return: x.mean_return,
                success_rate: x.success_rate,
                engagement_rate: x.engagement_rate,
                p_n: x.p_n,
                z_low: x.z_low,
                stage: x.stage,
                sapu_inclusion: x.sapu_inclusion,
                mean_d_ip: x.mean_d_ip,
                policy_std: x.policy_std,
            })
        });
        write_csv(&dir.join("records.csv"), records)?;
        write_json(&dir.join("summary.json"), &runs.summary)?;
    }
    Ok(dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config_error(text: &str) -> (String, String) {
        match ExperimentConfig::from_json(text) {
            Err(Error::Config { path, message }) => (path, message),
            other => panic!("expected a config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let cfg = ExperimentConfig::from_json(r#"{"name": "r", "experiment": "reward_ablation"}"#).unwrap();
        assert_eq!(cfg.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!(cfg.reward.variants.len(), 4);
        assert_eq!(cfg.sapu.config.strategy, SapuStrategy::FilterAndWeight);
        assert_eq!(cfg.curriculum.state.mode, CurriculumMode::Sampling);
    }

    #[test]
    fn unknown_experiment_names_its_path() {
        let (path, message) = config_error(r#"{"name": "r", "experiment": "gear_ablation"}"#);
        assert_eq!(path, "experiment");
        assert!(message.contains("gear_ablation"), "{message}");
    }

    #[test]
    fn nested_schema_errors_name_their_path() {
        let (path, _) = config_error(r#"{"name": "r", "experiment": "sapu_ablation", "trainer": {"cem": {"iters": "many"}}}"#);
        assert_eq!(path, "trainer.cem.iters");
        let (path, message) = config_error(r#"{"name": "r", "experiment": "sapu_ablation", "sapu": {"config": {"eps": 1}}}"#);
        assert_eq!(path, "sapu.config.eps");
        assert!(message.contains("unknown field"), "{message}");
    }

    #[test]
    fn semantic_errors_name_their_path() {
        let (path, _) = config_error(r#"{"name": "r", "experiment": "reward_ablation", "seeds": []}"#);
        assert_eq!(path, "seeds");
        let (path, _) = config_error(r#"{"name": "../x", "experiment": "reward_ablation"}"#);
        assert_eq!(path, "name");
    }

    #[test]
    fn reward_ordering_slack() {
        let m = |v: [f64; 4]| -> BTreeMap<String, f64> {
            ["sdf", "sixdof", "collinear", "chamfer"].iter().zip(v).map(|(k, x)| (k.to_string(), x)).collect()
        };
        assert!(reward_ordering(&m([0.9, 0.5, 0.2, 0.0])).unwrap().pass);
        // Within the slack a lower variant may edge ahead.
        assert!(reward_ordering(&m([0.61, 0.64, 0.5, 0.54])).unwrap().pass);
        assert!(!reward_ordering(&m([0.6, 0.66, 0.5, 0.5])).unwrap().order_holds);
        let narrow = reward_ordering(&m([0.59, 0.55, 0.5, 0.5])).unwrap();
        assert!(narrow.order_holds && !narrow.pass);
        assert!(reward_ordering(&BTreeMap::new()).is_none());
    }

    #[test]
    fn sampling_check() {
        let m = |s: f64, st: f64, n: f64| -> BTreeMap<String, f64> {
            [("sampling", s), ("standard", st), ("none", n)].iter().map(|(k, x)| (k.to_string(), *x)).collect()
        };
        assert_eq!(sampling_not_worse(&m(0.5, 0.5, 0.4)), Some(true));
        assert_eq!(sampling_not_worse(&m(0.5, 0.6, 0.4)), Some(false));
    }

    #[test]
    fn control_experiment_writes_outputs() {
        let text = r#"{"name": "ctl", "experiment": "control_ablation", "control": {
            "disturbances": ["ideal", "gravity"],
            "evaluation": {"trials_per_goal": 1},
            "tuning": {"trials_per_goal": 1, "seed": 5},
            "pid_grid": {"ki": [0, 500], "clamp": [0.001]}}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        let out = tempfile::tempdir().unwrap();
        let dir = run_experiment(&cfg, out.path()).unwrap();
        let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
        assert_eq!(summary["cells"].as_array().unwrap().len(), 8);
        assert_eq!(summary["checks"].as_array().unwrap().len(), 1);
        let csv = fs::read_to_string(dir.join("records.csv")).unwrap();
        assert!(csv.starts_with("scheme,disturbance,trial,steady_state_error"));
        // 8 cells × 3 goals × 1 trial, plus the header.
        assert_eq!(csv.lines().count(), 25);
    }
}
