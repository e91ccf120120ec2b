use std::sync::{Arc, OnceLock};

use assemblykit::curriculum::{run_schedule, CurriculumMode, CurriculumState};
use assemblykit::geometry::{contains_point, max_interpenetration};
use assemblykit::harness::*;
use assemblykit::rewards::chamfer_reward;
use assemblykit::sapu::SapuConfig;
use assemblykit::{Pose6D, PoseDelta, Vec3};
use nalgebra::UnitQuaternion;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assets() -> Arc<ToyAssets> {
    static A: OnceLock<Arc<ToyAssets>> = OnceLock::new();
    A.get_or_init(|| Arc::new(build_assets(&AssetSpec::default()).unwrap())).clone()
}

fn socket() -> Pose6D {
    Pose6D::from_parts(Vec3::new(0.5, 0.02, 0.03), UnitQuaternion::from_euler_angles(0.0, 0.0, 0.05))
}

fn env_at(offset: Vec3, reward: RewardKind) -> ToyEnv {
    let cfg = EnvConfig { reward, ..EnvConfig::default() };
    ToyEnv::new(assets(), cfg, &EpisodeStart { socket: socket(), plug_offset: offset }).unwrap()
}

fn setup(mode: CurriculumMode, iters: usize, seed: u64) -> TrainSetup {
    TrainSetup {
        assets: assets(),
        env: EnvConfig::default(),
        randomization: RandomizationSpec::default(),
        sapu: SapuConfig::default(),
        curriculum: CurriculumState::new(mode),
        cem: CemConfig { iters, pop: 10, episodes: 2, eval_episodes: 4, seed, ..CemConfig::default() },
    }
}

#[test]
fn small_round_peg_assets() {
    let a = make_toy_assets(AssetKind::Round, 0.008, 0.0005).unwrap();
    assert!((a.spec.hole_profile().max_dimension() - 0.0085).abs() < 1e-15);
    // The 32-gon hole: points just inside the chord radius are open, points
    // past the vertex radius are wall.
    let chord = 0.00425 * (std::f64::consts::PI / 32.0).cos();
    for k in 0..16 {
        let t = k as f64 * 0.39;
        let dir = Vec3::new(t.cos(), t.sin(), 0.0);
        let open = dir * (chord - 1e-5) + Vec3::new(0.0, 0.0, -0.007);
        let wall = dir * (0.00425 + 1e-5) + Vec3::new(0.0, 0.0, -0.007);
        assert!(!contains_point(&a.socket, &open).unwrap());
        assert!(contains_point(&a.socket, &wall).unwrap());
    }
    let s = Pose6D::identity();
    let seated = a.goal_pose(&s);
    assert_eq!(max_interpenetration(&a.plug, &a.socket, &seated, &s, 2000, 0).unwrap(), 0.0);
    let shifted = Pose6D::from_translation(seated.position + Vec3::new(0.001, 0.0, 0.0));
    assert!(max_interpenetration(&a.plug, &a.socket, &shifted, &s, 2000, 0).unwrap() > 0.0);
}

#[test]
fn free_space_step_applies_everything() {
    let env = env_at(Vec3::new(0.004, -0.003, 0.012), RewardKind::Sdf);
    let a = env.socket_action(&Vec3::new(0.0003, -0.0002, -0.0005));
    let (next, r) = env.env_step(&a);
    assert_eq!(r.d_ip, 0.0);
    assert_eq!(r.applied, 1.0);
    assert!((next.plug.position - (env.plug.position + a.translation)).norm() < 1e-15);
    assert_eq!(next.step, 1);
}

#[test]
fn step_into_wall_stops_at_contact() {
    // Tip 0.2 mm above the block top, well off the hole axis.
    let env = env_at(Vec3::new(0.003, 0.0, 0.0002), RewardKind::Sdf);
    let (next, r) = env.env_step(&env.socket_action(&Vec3::new(0.0, 0.0, -0.0005)));
    assert!(r.d_ip > env.config.contact_tolerance, "{}", r.d_ip);
    assert!(r.applied < 1.0);
    let rel = next.relative(&next.plug);
    // Contact with the top face at z = 0, within tolerance plus bracket.
    assert!(rel.position.z >= -env.config.contact_tolerance - 2e-5, "{}", rel.position.z);
    assert!(rel.position.z <= 0.0002 - 0.0001, "{}", rel.position.z);
    assert!((rel.position.x - 0.003).abs() < 1e-9);
    assert!(next.penetration(&next.plug) <= env.config.contact_tolerance);
}

#[test]
fn identity_action_changes_nothing() {
    let env = env_at(Vec3::new(0.0, 0.0, -0.005), RewardKind::Sixdof);
    let (next, r) = env.env_step(&PoseDelta::identity());
    assert_eq!(next.plug, env.plug);
    assert_eq!(next.done, env.done);
    assert_eq!(r.applied, 1.0);
}

#[test]
fn random_walks_stay_feasible() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let spec = RandomizationSpec::default();
    let state = CurriculumState::default();
    for _ in 0..6 {
        let start = spec.sample_with_curriculum(&state, &mut rng);
        let mut env = ToyEnv::new(assets(), EnvConfig::default(), &start).unwrap();
        let mut steps = 0;
        while !env.done {
            // Biased toward the hole so walks press into walls and edges.
            let rel = env.relative(&env.plug).position;
            let bias = Vec3::new(-0.3 * rel.x.signum(), -0.3 * rel.y.signum(), -0.6);
            let u = bias + Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
            let u = u.map(|v| v.clamp(-1.0, 1.0)) * env.config.action_scale;
            env = env.env_step(&env.socket_action(&u)).0;
            steps += 1;
            assert!(env.penetration(&env.plug) <= env.config.contact_tolerance);
        }
        assert_eq!(steps, env.config.horizon);
    }
}

#[test]
fn randomization_draws_stay_in_range() {
    let spec = RandomizationSpec::default();
    let state = CurriculumState::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let within = |v: f64, r: [f64; 2]| r[0] <= v && v <= r[1];
    for i in 0..100_000 {
        let s = if i % 2 == 0 { spec.sample(&mut rng) } else { spec.sample_with_curriculum(&state, &mut rng) };
        let p = s.socket.position;
        assert!(within(p.x, spec.socket_x) && within(p.y, spec.socket_y) && within(p.z, spec.socket_z));
        let (_, _, yaw) = s.socket.orientation.euler_angles();
        assert!(within(yaw.to_degrees(), [spec.socket_yaw_deg[0] - 1e-9, spec.socket_yaw_deg[1] + 1e-9]));
        assert!(s.plug_offset.x.abs() <= spec.plug_xy && s.plug_offset.y.abs() <= spec.plug_xy);
        let z = if i % 2 == 0 { spec.plug_dz } else { [state.z_low, state.z_high] };
        assert!(within(s.plug_offset.z, z));
        let n = spec.noise(&mut rng);
        assert!(n.iter().all(|v| v.abs() <= spec.obs_noise));
    }
}

#[test]
fn chamfer_env_reward_matches_direct_computation() {
    let env = env_at(Vec3::new(0.002, 0.001, 0.004), RewardKind::Chamfer);
    let a = assets();
    let plug: Vec<Vec3> = a.plug_vertices.iter().map(|p| env.plug.transform_point(p)).collect();
    let sock: Vec<Vec3> = a.socket_vertices.iter().map(|p| env.socket.transform_point(p)).collect();
    let direct = chamfer_reward(&plug, &sock).unwrap();
    assert!((env.dense_reward() - direct).abs() <= 1e-12 * direct.abs().max(1e-6), "{} vs {direct}", env.dense_reward());
}

#[test]
fn training_is_deterministic() {
    let a = cem_train(&setup(CurriculumMode::Sampling, 2, 3)).unwrap();
    let b = cem_train(&setup(CurriculumMode::Sampling, 2, 3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.records.len(), 3);
    for r in &a.records {
        for v in [r.success_rate, r.engagement_rate, r.p_n, r.sapu_inclusion] {
            assert!((0.0..=1.0).contains(&v));
        }
    }
}

#[test]
fn zero_iterations_is_initial_evaluation() {
    let r = cem_train(&setup(CurriculumMode::Sampling, 0, 1)).unwrap();
    assert_eq!(r.records.len(), 1);
    assert_eq!(r.records[0].iteration, 0);
    assert!(r.policy.weights.iter().all(|&w| w == 0.0));
}

#[test]
fn logged_curriculum_replays() {
    for mode in [CurriculumMode::Standard, CurriculumMode::Sampling] {
        let s = setup(mode, 4, 7);
        let r = cem_train(&s).unwrap();
        let trace: Vec<f64> = r.records.iter().map(|x| x.p_n).collect();
        let replay = run_schedule(&trace, &s.curriculum);
        for (rec, st) in r.records.iter().zip(&replay) {
            assert_eq!(rec.z_low, st.z_low);
            assert_eq!(rec.stage, st.stage);
        }
    }
}

#[test]
fn training_experiment_writes_outputs() {
    let text = r#"{"name": "tiny", "experiment": "reward_ablation", "seeds": [0],
        "reward": {"variants": ["sdf", "collinear"]},
        "trainer": {"cem": {"iters": 1, "pop": 10, "episodes": 1, "eval_episodes": 2}}}"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    let out = tempfile::tempdir().unwrap();
    let dir = run_experiment(&cfg, out.path()).unwrap();
    let csv = std::fs::read_to_string(dir.join("records.csv")).unwrap();
    assert!(csv.starts_with("variant,seed,iteration,mean_return,success_rate"));
    // Two variants × two records, plus the header.
    assert_eq!(csv.lines().count(), 5);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["variants"].as_array().unwrap().len(), 2);
    assert!(summary["eps_k_scaling"].as_str().unwrap().contains("bbox diagonal"));
    // Two of the four rewards cannot be ordered.
    assert!(summary["reward_ordering"].is_null());
}
