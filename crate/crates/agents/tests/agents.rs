use arstage_agents::bc::{bc_train, mean_action_error, BcConfig};
use arstage_agents::checkpoint;
use arstage_agents::demos::{DemoEpisode, DemonstrationSet, ScriptedExpert};
use arstage_agents::env::CONTACT_EPS;
use arstage_agents::ppo::{ppo_loss, ppo_loss_and_grad, ppo_train, stats_csv, Minibatch, PpoConfig};
use arstage_agents::rollout::{rollout, UniformRandom};
use arstage_agents::select::{keep_count, select_models};
use arstage_agents::{episode_reward_oracle, AgentAction, AgentError, CorridorEnv, EnvConfig, PolicyNetwork};
use arstage_core::geom::Vec2;
use arstage_core::rng;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn random_action(r: &mut impl Rng) -> AgentAction {
    AgentAction::new(r.random_range(-0.2..1.2), r.random_range(-1.2..1.2), r.random_range(0..4))
}

#[test]
fn env_reward_matches_oracle_on_random_scripted_traces() {
    let cfg = EnvConfig::default();
    let mut env = CorridorEnv::new(cfg.clone()).unwrap();
    for seed in 0..100u64 {
        let mut r = rng::seeded(1000 + seed);
        env.reset(seed);
        // Piecewise-constant action scripts with some long holds.
        let mut total = 0.0;
        let mut action = random_action(&mut r);
        while env.is_running() {
            if r.random_bool(0.1) {
                action = random_action(&mut r);
            }
            total += env.step(action).unwrap().reward;
        }
        let oracle = episode_reward_oracle(env.trace(), &cfg.layout, cfg.agent_radius, &cfg.rewards);
        assert!((total - oracle.total()).abs() < 1e-6, "seed {seed}: env {total} oracle {}", oracle.total());
    }
}

#[test]
fn expert_run_matches_oracle_and_earns_full_schedule() {
    let cfg = EnvConfig::default();
    let mut env = CorridorEnv::new(cfg.clone()).unwrap();
    let mut ex = ScriptedExpert::new(18.0);
    env.reset(4);
    let mut total = 0.0;
    let mut staying = 0.0;
    while env.is_running() {
        let a = ex.act(&env);
        let s = env.step(a).unwrap();
        total += s.reward;
        staying += s.breakdown.staying;
    }
    let oracle = episode_reward_oracle(env.trace(), &cfg.layout, cfg.agent_radius, &cfg.rewards);
    assert!((total - oracle.total()).abs() < 1e-6);
    assert_eq!(oracle.entry, 48.2 + 63.7 + 85.5);
    assert_eq!(oracle.bonus, 41.0);
    // Lingering 18 s in each zone saturates the 17 s cap three times.
    assert!((staying - 3.0 * 17.0 * cfg.rewards.staying_rate).abs() < 1e-9);
}

#[test]
fn trace_far_from_zones_and_walls_earns_nothing() {
    let cfg = EnvConfig::default();
    let mut env = CorridorEnv::new(cfg.clone()).unwrap();
    // More than the 4 m proximity radius from the first zone at x = 6.
    env.reset_to(Vec2::new(1.5, 2.0), std::f64::consts::FRAC_PI_2);
    for _ in 0..100 {
        env.step(AgentAction::new(0.0, 0.5, 0)).unwrap();
    }
    let oracle = episode_reward_oracle(env.trace(), &cfg.layout, cfg.agent_radius, &cfg.rewards);
    assert_eq!(oracle.total(), 0.0);
}

#[test]
fn spawns_stay_in_disc_and_walkable() {
    let cfg = EnvConfig::default();
    let mut env = CorridorEnv::new(cfg.clone()).unwrap();
    let scene = cfg.layout.scene().unwrap();
    for seed in 0..10_000u64 {
        env.reset(seed);
        let p = env.position().unwrap();
        assert!(p.distance(cfg.layout.booth) <= cfg.layout.spawn_radius + 1e-12);
        assert!(scene.point_in_walkable(p));
        assert!(scene.clearance(p) >= cfg.agent_radius - CONTACT_EPS);
    }
}

fn frozen_minibatch(net: &PolicyNetwork, n: usize, seed: u64) -> Minibatch {
    let cfg = EnvConfig::default();
    let mut env = CorridorEnv::new(cfg).unwrap();
    let mut r = rng::seeded(seed);
    let mut obs = env.reset(seed);
    let mut mb = Minibatch {
        obs: Vec::new(),
        raw: Vec::new(),
        gesture: Vec::new(),
        old_logp: Vec::new(),
        advantage: Vec::new(),
        returns: Vec::new(),
    };
    for _ in 0..n {
        let s = net.sample(&obs, &mut r);
        mb.obs.extend_from_slice(&obs);
        mb.raw.extend_from_slice(&s.raw);
        mb.gesture.push(s.gesture);
        let jitter: f64 = r.sample(StandardNormal);
        mb.old_logp.push(s.logp + 0.3 * jitter);
        mb.advantage.push(r.sample(StandardNormal));
        mb.returns.push(s.value + r.random_range(-1.0..1.0));
        obs = env.step(s.action()).unwrap().obs;
    }
    mb
}

#[test]
fn ppo_gradient_matches_central_differences() {
    let mut net = PolicyNetwork::new(11);
    // Move off the initialization so the heads carry signal.
    let mut r = rng::seeded(5);
    for p in &mut net.params {
        *p += 0.05 * r.random_range(-1.0..1.0);
    }
    let cfg = PpoConfig { entropy_coef: 0.01, ..Default::default() };
    let mb = frozen_minibatch(&net, 64, 3);
    let (_, grad) = ppo_loss_and_grad(&net, &mb, &cfg);
    let n = net.param_count();
    let mut idx: Vec<usize> = (0..400).map(|_| r.random_range(0..n)).collect();
    // Every head and the log-std.
    let heads_from = net.layers()[net.hidden.len()].offset;
    idx.extend((heads_from..n).step_by(7));
    idx.extend(net.log_std_offset()..n);
    let h = 1e-6;
    let (mut num, mut den) = (0.0, 0.0);
    for &i in &idx {
        let mut plus = net.clone();
        plus.params[i] += h;
        let mut minus = net.clone();
        minus.params[i] -= h;
        let fd = (ppo_loss(&plus, &mb, &cfg).total - ppo_loss(&minus, &mb, &cfg).total) / (2.0 * h);
        num += (fd - grad[i]).powi(2);
        den += fd.powi(2).max(grad[i].powi(2));
    }
    let rel = (num / den).sqrt();
    assert!(rel <= 1e-4, "relative gradient error {rel}");
}

#[test]
fn ppo_zero_budget_returns_input() {
    let net = PolicyNetwork::new(2);
    let (out, stats) = ppo_train(&EnvConfig::default(), &net, &PpoConfig { total_steps: 0, ..Default::default() }).unwrap();
    assert_eq!(out, net);
    assert!(stats.is_empty());
}

#[test]
fn ppo_is_deterministic_given_seed() {
    let cfg = PpoConfig { seed: 8, total_steps: 2 * 18 * 32, horizon: 32, minibatch: 64, ..Default::default() };
    let net = PolicyNetwork::new(2);
    let (a, sa) = ppo_train(&EnvConfig::default(), &net, &cfg).unwrap();
    let (b, sb) = ppo_train(&EnvConfig::default(), &net, &cfg).unwrap();
    assert_eq!(sa, sb);
    assert_eq!(a, b);
    assert_eq!(sa.len(), 2);
    assert_eq!(stats_csv(&sa), stats_csv(&sb));
    assert_ne!(a, net);
}

#[test]
fn ppo_detects_divergence() {
    let mut net = PolicyNetwork::new(2);
    net.params[0] = f64::NAN;
    let cfg = PpoConfig { total_steps: 18 * 8, horizon: 8, ..Default::default() };
    assert!(matches!(
        ppo_train(&EnvConfig::default(), &net, &cfg),
        Err(AgentError::DivergenceDetected { iteration: 0 })
    ));
}

fn straight_line_demos() -> DemonstrationSet {
    let cfg = EnvConfig::default();
    let traces: Vec<_> = (0..4)
        .map(|k| {
            let mut env = CorridorEnv::new(cfg.clone()).unwrap();
            env.reset_to(Vec2::new(1.0, 1.0 + 0.6 * k as f64), 0.0);
            for _ in 0..40 {
                env.step(AgentAction::new(0.7, 0.0, 0)).unwrap();
            }
            env.trace().clone()
        })
        .collect();
    DemonstrationSet::from_traces(&traces, &cfg).unwrap()
}

#[test]
fn bc_clones_straight_line_expert() {
    let demos = straight_line_demos();
    let net = PolicyNetwork::new(6);
    let cfg = BcConfig { epochs: 200, batch: 32, ..Default::default() };
    let (cloned, losses) = bc_train(&demos, &net, &cfg).unwrap();
    assert_eq!(losses.len(), 201);
    assert!(losses[200] <= losses[0]);
    let err = mean_action_error(&cloned, &demos);
    assert!(err < 0.05, "mean action error {err}");
}

#[test]
fn bc_zero_epochs_leaves_policy_unchanged() {
    let net = PolicyNetwork::new(6);
    let (out, losses) = bc_train(&straight_line_demos(), &net, &BcConfig { epochs: 0, ..Default::default() }).unwrap();
    assert_eq!(out, net);
    assert_eq!(losses.len(), 1);
}

#[test]
fn bc_rejects_empty_demos() {
    let empty = DemonstrationSet { episodes: vec![DemoEpisode { observations: vec![], actions: vec![] }] };
    assert!(matches!(
        bc_train(&empty, &PolicyNetwork::new(0), &BcConfig::default()),
        Err(AgentError::EmptyDemos)
    ));
}

#[test]
fn checkpoint_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("policy.bin");
    let mut net = PolicyNetwork::new(3);
    net.round_to_f32();
    let side = serde_json::json!({"seed": 3});
    checkpoint::save(&net, &path, &side).unwrap();
    assert_eq!(checkpoint::load(&path).unwrap(), net);
    assert_eq!(checkpoint::load_sidecar(&path).unwrap(), side);
}

#[test]
fn rollouts_are_deterministic() {
    let cfg = EnvConfig::default();
    let a = rollout(&mut UniformRandom, &cfg, 5, 12).unwrap();
    let b = rollout(&mut UniformRandom, &cfg, 5, 12).unwrap();
    assert_eq!(a, b);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn select_keeps_ceil_fraction_of_distinct(n in 1usize..60, keep in 0.05f64..1.0, salt in 0u64..1000) {
        let c: Vec<(usize, f64)> = (0..n).map(|i| (i, ((i as u64 * 7919 + salt) % 100_003) as f64 + i as f64 * 1e-3)).collect();
        let kept = select_models(&c, keep).unwrap();
        prop_assert_eq!(kept.len(), keep_count(n, keep).max(1));
        prop_assert_eq!(kept.len(), ((keep * n as f64) - 1e-9).ceil().max(1.0) as usize);
        prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn staying_never_exceeds_cap(seed in 0u64..500, hold in 0usize..200) {
        let cfg = EnvConfig::default();
        let mut env = CorridorEnv::new(cfg.clone()).unwrap();
        let mut r = rng::seeded(seed);
        env.reset(seed);
        let mut per_zone = [0.0f64; 3];
        let mut k = 0;
        while env.is_running() {
            let a = if k < hold { AgentAction::new(1.0, r.random_range(-0.3..0.3), 0) } else { AgentAction::new(0.0, 0.0, 0) };
            let s = env.step(a).unwrap();
            let p = env.position().unwrap();
            if let Some(z) = cfg.layout.zones.iter().position(|z| p.distance(z.center) <= z.radius) {
                per_zone[z] += s.breakdown.staying;
            }
            k += 1;
        }
        for v in per_zone {
            prop_assert!(v <= cfg.rewards.staying_cap * cfg.rewards.staying_rate + 1e-9);
        }
    }

    #[test]
    fn entry_rewards_follow_ordinal(start_x in 1.0f64..19.0, dir in prop::bool::ANY) {
        let cfg = EnvConfig::default();
        let mut env = CorridorEnv::new(cfg.clone()).unwrap();
        env.reset_to(Vec2::new(start_x, 2.0), if dir { 0.0 } else { std::f64::consts::PI });
        let mut got = Vec::new();
        let mut turned = false;
        while env.is_running() {
            let x = env.position().unwrap().x;
            let turn = if !turned && (x < 1.0 || x > 19.0) { turned = true; 1.0 } else { 0.0 };
            let s = env.step(AgentAction::new(1.0, turn, 0)).unwrap();
            if s.entered.is_some() {
                got.push(s.breakdown.entry);
            }
        }
        prop_assert!(got.len() <= 3);
        for (i, v) in got.iter().enumerate() {
            prop_assert_eq!(*v, cfg.rewards.zone_entry[i]);
        }
    }
}
