//! Cross-entropy method over a linear feature policy, with returns passed
//! through the return composition, SAPU and the curriculum.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curriculum::{curriculum_update, CurriculumState};
use crate::error::{Error, Result};
use crate::harness::assets::ToyAssets;
use crate::harness::env::{EnvConfig, ToyEnv};
use crate::harness::randomization::{EpisodeStart, RandomizationSpec};
use crate::pose::Vec3;
use crate::rewards::composition::SUCCESS_BONUS;
use crate::rewards::{bonus_scale, compose_return, HorizonFactor, RewardSpec};
use crate::sapu::{apply_sapu, included_mean, EpisodeInput, SapuConfig};

pub const FEATURES: usize = 6;
pub const OUTPUTS: usize = 3;
pub const PARAMS: usize = FEATURES * OUTPUTS;

/// Weights the search varies; the rest stay 0. Each lateral axis sees its
/// own error and a bias; z sees its error, `|e_xy|`, engagement and a bias.
/// Cross-axis couplings only slowed the search down.
pub const SEARCHED: [usize; 8] = [0, 5, FEATURES + 1, FEATURES + 5, 2 * FEATURES + 2, 2 * FEATURES + 3, 2 * FEATURES + 4, 2 * FEATURES + 5];

/// Socket-frame translation `action_scale · clamp(W f, -1, 1)` over the
/// features `[e_x, e_y, e_z, |e_xy|, engaged, 1]`, errors divided by
/// `feature_scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearPolicy {
    pub weights: [f64; PARAMS],
    pub feature_scale: f64,
}

impl LinearPolicy {
    pub const DEFAULT_FEATURE_SCALE: f64 = 0.01;

    pub fn from_slice(w: &[f64]) -> Self {
        let mut weights = [0.0; PARAMS];
        weights.copy_from_slice(w);
        Self { weights, feature_scale: Self::DEFAULT_FEATURE_SCALE }
    }

    pub fn features(&self, error: &Vec3, engaged: bool) -> [f64; FEATURES] {
        let s = self.feature_scale;
        [error.x / s, error.y / s, error.z / s, error.xy().norm() / s, f64::from(u8::from(engaged)), 1.0]
    }

    pub fn act(&self, error: &Vec3, engaged: bool, action_scale: f64) -> Vec3 {
        let f = self.features(error, engaged);
        Vec3::from_fn(|i, _| {
            let row = &self.weights[i * FEATURES..(i + 1) * FEATURES];
            let u: f64 = row.iter().zip(&f).map(|(w, x)| w * x).sum();
            action_scale * u.clamp(-1.0, 1.0)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub raw_return: f64,
    pub d_ip_max: f64,
    pub success: bool,
    pub engaged: bool,
    /// Final plug-to-goal distance (m).
    pub position_error: f64,
}

/// Runs one episode. `noise_seed` drives the observation noise.
pub fn rollout(
    assets: &Arc<ToyAssets>,
    env_cfg: &EnvConfig,
    randomization: &RandomizationSpec,
    policy: &LinearPolicy,
    start: &EpisodeStart,
    noise_seed: u64,
) -> Result<EpisodeStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(noise_seed);
    let mut env = ToyEnv::new(assets.clone(), *env_cfg, start)?;
    let mut dense = Vec::with_capacity(env_cfg.horizon);
    let mut d_ip_max: f64 = 0.0;
    let mut outcome = env.outcome();
    while !env.done {
        let observed = env.plug.position + randomization.noise(&mut rng);
        let error = env.socket.inverse_transform_point(&env.goal.position)
            - env.socket.inverse_transform_point(&observed);
        let a = policy.act(&error, outcome.engaged, env_cfg.action_scale);
        let (next, r) = env.env_step(&env.socket_action(&a));
        dense.push(vec![r.dense_reward]);
        d_ip_max = d_ip_max.max(r.d_ip);
        outcome = r.outcome;
        env = next;
    }
    let dh = env.task_state().delta_h.unwrap_or(0.0);
    let spec = RewardSpec {
        dense_weights: vec![env_cfg.reward.default_weight()],
        bonus_weights: vec![SUCCESS_BONUS],
        horizon_factors: vec![HorizonFactor::BonusScale(bonus_scale(dh))],
        horizon: env_cfg.horizon,
    };
    Ok(EpisodeStats {
        raw_return: compose_return(&spec, &dense, &[outcome.success])?,
        d_ip_max,
        success: outcome.success,
        engaged: outcome.engaged,
        position_error: (env.plug.position - env.goal.position).norm(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CemConfig {
    pub iters: usize,
    pub pop: usize,
    pub elite_frac: f64,
    /// Episodes per candidate; every candidate sees the same starts.
    pub episodes: usize,
    pub init_std: f64,
    /// Extra exploration std added to the elite std, decaying linearly to 0.
    pub extra_std: f64,
    pub eval_episodes: usize,
    pub seed: u64,
}

impl Default for CemConfig {
    fn default() -> Self {
        Self { iters: 30, pop: 24, elite_frac: 0.25, episodes: 6, init_std: 2.0, extra_std: 0.5, eval_episodes: 100, seed: 0 }
    }
}

impl CemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pop < 10 {
            return Err(Error::InvalidArgument("cem: pop must be at least 10".into()));
        }
        if !(self.elite_frac > 0.0 && self.elite_frac <= 0.5) {
            return Err(Error::InvalidArgument("cem: elite_frac must lie in (0, 0.5]".into()));
        }
        if self.episodes == 0 || !(self.init_std > 0.0) || !(self.extra_std >= 0.0) {
            return Err(Error::InvalidArgument("cem: episodes and init_std must be positive".into()));
        }
        Ok(())
    }

    pub fn elite_count(&self) -> usize {
        ((self.elite_frac * self.pop as f64).ceil() as usize).clamp(1, self.pop)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iteration: usize,
    pub mean_return: f64,
    pub success_rate: f64,
    pub engagement_rate: f64,
    /// Success fraction of the updated mean policy on this iteration's
    /// starts; drives the curriculum update.
    pub p_n: f64,
    /// Curriculum lower bound after this iteration's update (m).
    pub z_low: f64,
    pub stage: u32,
    pub sapu_inclusion: f64,
    pub mean_d_ip: f64,
    pub policy_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub success_rate: f64,
    pub engagement_rate: f64,
    pub mean_position_error: f64,
    pub mean_d_ip: f64,
    pub episodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainResult {
    pub records: Vec<TrainRecord>,
    pub policy: LinearPolicy,
    pub evaluation: Evaluation,
    /// The search std stopped being finite at some iteration and was reset.
    pub variance_diverged: bool,
    pub initial_curriculum: CurriculumState,
}

/// Everything a training run depends on besides the seed.
#[derive(Debug, Clone)]
pub struct TrainSetup {
    pub assets: Arc<ToyAssets>,
    pub env: EnvConfig,
    pub randomization: RandomizationSpec,
    pub sapu: SapuConfig,
    pub curriculum: CurriculumState,
    pub cem: CemConfig,
}

fn sub_seed(seed: u64, tag: u64, i: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(tag.wrapping_mul(0xBF58_476D_1CE4_E5B9))
        .wrapping_add(i.wrapping_mul(0x94D0_49BB_1331_11EB))
}

fn starts(setup: &TrainSetup, state: &CurriculumState, n: usize, seed: u64) -> Vec<(EpisodeStart, u64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| (setup.randomization.sample_with_curriculum(state, &mut rng), sub_seed(seed, 7, k as u64)))
        .collect()
}

fn evaluate(setup: &TrainSetup, policy: &LinearPolicy, starts: &[(EpisodeStart, u64)]) -> Result<Vec<EpisodeStats>> {
    starts
        .par_iter()
        .map(|(s, ns)| rollout(&setup.assets, &setup.env, &setup.randomization, policy, s, *ns))
        .collect()
}

fn rate(stats: &[EpisodeStats], f: impl Fn(&EpisodeStats) -> bool) -> f64 {
    if stats.is_empty() {
        0.0
    } else {
        stats.iter().filter(|s| f(s)).count() as f64 / stats.len() as f64
    }
}

fn mean_of(stats: &[EpisodeStats], f: impl Fn(&EpisodeStats) -> f64) -> f64 {
    if stats.is_empty() {
        0.0
    } else {
        stats.iter().map(f).sum::<f64>() / stats.len() as f64
    }
}

/// Final evaluation starts: heights over the full initial curriculum range
/// `[z_low, z_high]`, independent of the training seed's episode stream.
pub fn evaluation_starts(setup: &TrainSetup, n: usize, seed: u64) -> Vec<(EpisodeStart, u64)> {
    let eval_state = CurriculumState { mode: crate::curriculum::CurriculumMode::Sampling, ..setup.curriculum };
    starts(setup, &eval_state, n, sub_seed(seed, 3, 0))
}

pub fn evaluate_policy(setup: &TrainSetup, policy: &LinearPolicy, n: usize, seed: u64) -> Result<Evaluation> {
    let stats = evaluate(setup, policy, &evaluation_starts(setup, n, seed))?;
    Ok(Evaluation {
        success_rate: rate(&stats, |s| s.success),
        engagement_rate: rate(&stats, |s| s.engaged),
        mean_position_error: mean_of(&stats, |s| s.position_error),
        mean_d_ip: mean_of(&stats, |s| s.d_ip_max),
        episodes: n,
    })
}

fn record(
    iteration: usize,
    stats: &[EpisodeStats],
    p_n: f64,
    sapu: &SapuConfig,
    curriculum: &CurriculumState,
    std: &[f64],
) -> (TrainRecord, CurriculumState) {
    let inputs: Vec<EpisodeInput> =
        stats.iter().map(|s| EpisodeInput { raw_return: s.raw_return, d_ip_max: s.d_ip_max }).collect();
    let processed = apply_sapu(&inputs, sapu);
    let (kept, _) = included_mean(&processed);
    let next = curriculum_update(curriculum, p_n);
    let rec = TrainRecord {
        iteration,
        mean_return: mean_of(stats, |s| s.raw_return),
        success_rate: rate(stats, |s| s.success),
        engagement_rate: rate(stats, |s| s.engaged),
        p_n,
        z_low: next.z_low,
        stage: next.stage,
        sapu_inclusion: if stats.is_empty() { 0.0 } else { kept as f64 / stats.len() as f64 },
        mean_d_ip: mean_of(stats, |s| s.d_ip_max),
        policy_std: (std.iter().map(|s| s * s).sum::<f64>() / std.len() as f64).sqrt(),
    };
    (rec, next)
}

/// Record 0 evaluates the initial mean policy; each later record covers one
/// population. Every record's `p_n` drives one curriculum update.
pub fn cem_train(setup: &TrainSetup) -> Result<TrainResult> {
    let cfg = setup.cem;
    cfg.validate()?;
    setup.env.validate()?;
    setup.sapu.validate()?;
    setup.curriculum.validate()?;
    setup.randomization.validate()?;
    let mut mean = vec![0.0; PARAMS];
    let mask: Vec<f64> = (0..PARAMS).map(|i| f64::from(u8::from(SEARCHED.contains(&i)))).collect();
    let mut std: Vec<f64> = mask.iter().map(|m| m * cfg.init_std).collect();
    let mut curriculum = setup.curriculum;
    let mut records = Vec::with_capacity(cfg.iters + 1);
    let mut diverged = false;

    let initial = evaluate(setup, &LinearPolicy::from_slice(&mean), &starts(setup, &curriculum, cfg.episodes, sub_seed(cfg.seed, 1, 0)))?;
    let p_n = rate(&initial, |s| s.success);
    let (rec, next) = record(0, &initial, p_n, &setup.sapu, &curriculum, &std);
    records.push(rec);
    curriculum = next;

    let n_elite = cfg.elite_count();
    for it in 1..=cfg.iters {
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(cfg.seed, 2, it as u64));
        let candidates: Vec<Vec<f64>> = (0..cfg.pop)
            .map(|_| {
                (0..PARAMS)
                    .map(|i| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        mean[i] + std[i] * z
                    })
                    .collect()
            })
            .collect();
        let episode_starts = starts(setup, &curriculum, cfg.episodes, sub_seed(cfg.seed, 1, it as u64));
        let jobs: Vec<(usize, usize)> =
            (0..cfg.pop).flat_map(|c| (0..cfg.episodes).map(move |e| (c, e))).collect();
        let stats: Vec<EpisodeStats> = jobs
            .par_iter()
            .map(|&(c, e)| {
                let (s, ns) = &episode_starts[e];
                rollout(&setup.assets, &setup.env, &setup.randomization, &LinearPolicy::from_slice(&candidates[c]), s, *ns)
            })
            .collect::<Result<_>>()?;

        let mut fitness: Vec<(usize, f64)> = stats
            .chunks(cfg.episodes)
            .enumerate()
            .map(|(c, chunk)| {
                let inputs: Vec<EpisodeInput> =
                    chunk.iter().map(|s| EpisodeInput { raw_return: s.raw_return, d_ip_max: s.d_ip_max }).collect();
                let (_, m) = included_mean(&apply_sapu(&inputs, &setup.sapu));
                (c, m.unwrap_or(f64::NEG_INFINITY))
            })
            .collect();
        fitness.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let elites: Vec<&Vec<f64>> = fitness[..n_elite].iter().map(|(c, _)| &candidates[*c]).collect();

        let extra = cfg.extra_std * (1.0 - it as f64 / cfg.iters as f64);
        for i in 0..PARAMS {
            let m = elites.iter().map(|e| e[i]).sum::<f64>() / n_elite as f64;
            let v = elites.iter().map(|e| (e[i] - m).powi(2)).sum::<f64>() / n_elite as f64;
            mean[i] = m;
            std[i] = mask[i] * (v + extra * extra).sqrt();
        }
        if std.iter().chain(&mean).any(|x| !x.is_finite()) {
            diverged = true;
            mean.iter_mut().filter(|x| !x.is_finite()).for_each(|x| *x = 0.0);
            std.iter_mut().zip(&mask).for_each(|(s, m)| *s = m * cfg.init_std);
        }

        // The curriculum sees the updated mean policy, not the exploration noise.
        let check = evaluate(setup, &LinearPolicy::from_slice(&mean), &episode_starts)?;
        let (rec, next) = record(it, &stats, rate(&check, |s| s.success), &setup.sapu, &curriculum, &std);
        records.push(rec);
        curriculum = next;
    }

    let policy = LinearPolicy::from_slice(&mean);
    let evaluation = evaluate_policy(setup, &policy, cfg.eval_episodes, cfg.seed)?;
    Ok(TrainResult { records, policy, evaluation, variance_diverged: diverged, initial_curriculum: setup.curriculum })
}
