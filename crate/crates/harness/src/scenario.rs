use std::path::Path;

use arstage_agents::bc::bc_train;
use arstage_agents::checkpoint;
use arstage_agents::demos::{DemonstrationSet, ScriptedExpert};
use arstage_agents::ppo::{ppo_train, stats_csv, PpoConfig};
use arstage_agents::rollout::{rollout, rollout_shared, summarize, PolicyController, RolloutEpisode};
use arstage_agents::select::select_models;
use arstage_agents::{EnvConfig, PolicyNetwork};
use arstage_core::bubbles::{note_events, note_on_time, notes_to_csv, notes_to_jsonl, BubbleField, PlaySpace};
use arstage_core::distortion::{
    density_map, geometry_at_extent, trial_metrics, DistortionTreatment, RoomModel, TreatmentTimeline,
};
use arstage_core::guidance::{arrow_pose, ArrowGuideState, ParticleConfig, ParticleGuideState};
use arstage_core::rng::derive_seed;
use arstage_core::stage::{
    events_to_jsonl, stage_timing_report, CueSheet, EventKind, GuidanceMode, StageEvent, StageState,
    CORRIDOR_ENTRY, CORRIDOR_LENGTH, CORRIDOR_WIDTH, SPIRAL_SUBJECT_PREFIX,
};
use arstage_core::trace::DEFAULT_HEAD_HEIGHT;
use arstage_core::twin::{export_obj, is_watertight, mesh_volume, MeshSource, OcclusionScene, SceneFile};
use arstage_core::{Aabb2, LocomotionTrace, Pose, Vec2};
use serde::Serialize;

use crate::bundle::Bundle;
use crate::config::{ScenarioConfig, ScenarioKind, WalkerSpec};
use crate::error::HarnessError;
use crate::records::{locomotion_trace, trace_to_csv, TraceRecord};
use crate::walker::{GuideInput, Walker};

/// Runs a validated scenario and returns its artifact bundle.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Bundle, HarnessError> {
    cfg.validate()?;
    let mut b = Bundle::new(&cfg.name, cfg.scenario.name(), cfg.seed);
    b.add("config.json", cfg.to_json() + "\n");
    match &cfg.scenario {
        ScenarioKind::Theater { cue_sheet } => run_theater(cfg, cue_sheet.as_deref(), &mut b)?,
        ScenarioKind::Distortion { treatment, room, timeline } => {
            let timeline = timeline.clone().unwrap_or_default();
            run_distortion(cfg, treatment, room, &timeline, &mut b)?
        }
        ScenarioKind::Bubbles { altitude, space } => run_bubbles(cfg, *altitude, space, &mut b)?,
        ScenarioKind::Rollout { episodes, deterministic, env } => {
            run_rollout(cfg, *episodes, *deterministic, env, &mut b)?
        }
        ScenarioKind::Train { .. } => run_train(cfg, &mut b)?,
    }
    Ok(b)
}

fn step_count(cfg: &ScenarioConfig) -> usize {
    (cfg.duration / cfg.dt - 1e-9).ceil() as usize
}

fn walker_spec(cfg: &ScenarioConfig) -> &WalkerSpec {
    cfg.walker.as_ref().expect("validated: walker present")
}

fn read_text(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))
}

/// Loads a traced venue. Parse and geometry failures are scene errors.
pub fn load_scene(path: &Path) -> Result<(SceneFile, OcclusionScene), HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::SceneLoad(format!("{}: {e}", path.display())))?;
    let file = SceneFile::from_json(&text).map_err(|e| HarnessError::SceneLoad(format!("{}: {e}", path.display())))?;
    let (_, scene) = file.build().map_err(|e| HarnessError::SceneLoad(format!("{}: {e}", path.display())))?;
    Ok((file, scene))
}

pub fn corridor_scene() -> OcclusionScene {
    let bounds = Aabb2::new(Vec2::ZERO, Vec2::new(CORRIDOR_LENGTH, CORRIDOR_WIDTH));
    OcclusionScene::new(vec![], vec![], bounds).expect("corridor bounds are valid")
}

fn mode_name(mode: GuidanceMode) -> &'static str {
    match mode {
        GuidanceMode::Particle => "particle",
        GuidanceMode::Arrow => "arrow",
        GuidanceMode::None => "none",
    }
}

/// Route through every zone and spiral of a sheet, in order.
pub fn cue_sheet_route(sheet: &CueSheet) -> Vec<Vec2> {
    let mut route = vec![CORRIDOR_ENTRY];
    for s in &sheet.stages {
        route.extend(s.zones.iter().map(|z| z.center));
        route.push(s.spiral.center);
    }
    route
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheaterSummary {
    pub completed: bool,
    pub end_time: f64,
    pub zones: usize,
    pub zones_triggered: usize,
    /// Time the last content zone fired, when all of them did.
    pub time_to_all_zones: Option<f64>,
    pub clips_started: usize,
    pub clips_ended: usize,
    pub spirals_spawned: usize,
    pub path_length: f64,
}

pub fn theater_summary(sheet: &CueSheet, events: &[StageEvent], trace: &LocomotionTrace, end_time: f64) -> TheaterSummary {
    let count = |k: EventKind| events.iter().filter(|e| e.kind == k).count();
    let zone_fires: Vec<f64> = events
        .iter()
        .filter(|e| e.kind == EventKind::TriggerFired && !e.subject.starts_with(SPIRAL_SUBJECT_PREFIX))
        .map(|e| e.time)
        .collect();
    let zones = sheet.zone_count();
    TheaterSummary {
        completed: count(EventKind::PlayEnded) == 1,
        end_time,
        zones,
        zones_triggered: zone_fires.len(),
        time_to_all_zones: (zone_fires.len() == zones).then(|| zone_fires[zones - 1]),
        clips_started: count(EventKind::ClipStarted),
        clips_ended: count(EventKind::ClipEnded),
        spirals_spawned: count(EventKind::SpiralSpawned),
        path_length: trace.path_length(),
    }
}

/// Output of a theater run before serialization.
pub struct TheaterRun {
    pub records: Vec<TraceRecord>,
    pub events: Vec<StageEvent>,
    pub trace: LocomotionTrace,
    pub summary: TheaterSummary,
}

/// Plays a cue sheet with one walker. Every walker stands still while a
/// clip plays in the zone it is standing in.
pub fn simulate_theater(
    sheet: &CueSheet,
    scene: &OcclusionScene,
    spec: &WalkerSpec,
    seed: u64,
    dt: f64,
    steps: usize,
) -> Result<TheaterRun, HarnessError> {
    let route = cue_sheet_route(sheet);
    let (mut walker, mut pose) = Walker::from_spec(spec, CORRIDOR_ENTRY, &route, seed);
    let mut state = StageState::new(sheet);
    let first_target = state.next_target(sheet).unwrap_or(pose.position);
    let mut particles = ParticleGuideState::new(
        ParticleConfig::default(),
        &pose,
        first_target.extend(DEFAULT_HEAD_HEIGHT),
        derive_seed(seed, 1),
    )
    .map_err(|e| HarnessError::Simulation(e.to_string()))?;
    let mut arrow: Option<ArrowGuideState> = None;
    let mut events = Vec::new();
    let mut records = Vec::with_capacity(steps + 1);
    let record = |state: &StageState, pose: &Pose, t: f64| {
        let target = state.next_target(sheet);
        TraceRecord {
            t,
            x: pose.position.x,
            y: pose.position.y,
            heading: pose.heading,
            stage: Some(state.stage),
            guidance: mode_name(sheet.stages[state.stage].guidance).into(),
            target_distance: target.map(|tg| tg.distance(pose.position)),
        }
    };
    records.push(record(&state, &pose, 0.0));
    for _ in 0..steps {
        if state.ended {
            break;
        }
        let hold = state.playing_zone_at(sheet, &pose).is_some();
        let bearing = state.next_target(sheet).and_then(|target| {
            let direct = (target - pose.position).normalized();
            match sheet.stages[state.stage].guidance {
                GuidanceMode::Particle => {
                    particles.step(&pose, target.extend(DEFAULT_HEAD_HEIGHT), dt);
                    particles.mean_direction().and_then(|d| d.xy().normalized()).or(direct)
                }
                GuidanceMode::Arrow => {
                    let a = arrow_pose(arrow.as_ref(), &pose, target.extend(0.0), state.performance_active(), dt);
                    let pointing = a.pointing.xy().normalized();
                    arrow = Some(a);
                    pointing.or(direct)
                }
                GuidanceMode::None => direct,
            }
        });
        pose = walker.step(&pose, &GuideInput { bearing, hold }, dt, &scene.bounds, Some(scene));
        events.extend(state.advance(sheet, &pose, dt));
        records.push(record(&state, &pose, state.clock));
    }
    let trace = locomotion_trace(&records)?;
    let summary = theater_summary(sheet, &events, &trace, state.clock);
    Ok(TheaterRun { records, events, trace, summary })
}

fn run_theater(cfg: &ScenarioConfig, cue_sheet: Option<&Path>, b: &mut Bundle) -> Result<(), HarnessError> {
    let sheet = match cue_sheet {
        Some(p) => CueSheet::from_json(&read_text(p)?).map_err(|e| HarnessError::Config(e.to_string()))?,
        None => CueSheet::corridor(),
    };
    let scene = match &cfg.scene {
        Some(p) => load_scene(p)?.1,
        None => corridor_scene(),
    };
    let run = simulate_theater(&sheet, &scene, walker_spec(cfg), cfg.seed, cfg.dt, step_count(cfg))?;
    let timing =
        stage_timing_report(&run.events, Some(&run.trace)).map_err(|e| HarnessError::Simulation(e.to_string()))?;
    b.add("cue_sheet.json", sheet.to_json() + "\n");
    b.add("trace.csv", trace_to_csv(&run.records));
    b.add("events.jsonl", events_to_jsonl(&run.events));
    b.add_json("timing.json", &timing);
    b.add_json("summary.json", &run.summary);
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct RoomSample {
    t: f64,
    segment: usize,
    extent: f64,
    max_deviation: f64,
    volume_ratio: f64,
}

fn run_distortion(
    cfg: &ScenarioConfig,
    treatment: &DistortionTreatment,
    room: &RoomModel,
    timeline: &TreatmentTimeline,
    b: &mut Bundle,
) -> Result<(), HarnessError> {
    let sim = |e: arstage_core::distortion::DistortionError| HarnessError::Simulation(e.to_string());
    let bounds = Aabb2::new(Vec2::ZERO, Vec2::new(room.width, room.length));
    let (mut walker, mut pose) = Walker::from_spec(walker_spec(cfg), room.center(), &[], cfg.seed);
    let total = timeline.total();
    let record = |pose: &Pose, t: f64| TraceRecord {
        t,
        x: pose.position.x,
        y: pose.position.y,
        heading: pose.heading,
        stage: (t <= total + 1e-9).then(|| timeline.timeline_step(t.min(total)).map(|p| p.segment).ok()).flatten(),
        guidance: "none".into(),
        target_distance: Some(pose.position.distance(room.center())),
    };
    let mut records = vec![record(&pose, 0.0)];
    for k in 1..=step_count(cfg) {
        pose = walker.step(&pose, &GuideInput::default(), cfg.dt, &bounds, None);
        records.push(record(&pose, k as f64 * cfg.dt));
    }
    let trace = locomotion_trace(&records)?;
    let metrics = trial_metrics(&trace, room, timeline).map_err(sim)?;
    let density = density_map(std::slice::from_ref(&trace), room, timeline);

    let base = geometry_at_extent(room, treatment, 0.0);
    let base_volume = base.bounds().volume();
    let mut room_csv = csv::Writer::from_writer(Vec::new());
    let mut t = 0.0;
    let mut k = 0;
    while t <= total + 1e-9 {
        let p = timeline.timeline_step(t.min(total)).map_err(sim)?;
        let g = geometry_at_extent(room, treatment, p.extent);
        room_csv
            .serialize(RoomSample {
                t,
                segment: p.segment,
                extent: p.extent,
                max_deviation: g.max_deviation(&base),
                volume_ratio: g.bounds().volume() / base_volume,
            })
            .expect("in-memory write");
        k += 1;
        t = k as f64;
    }
    let mut metrics_json = serde_json::to_value(&metrics).expect("metrics serialize");
    if density.total() > 0 {
        metrics_json["density_uniformity"] =
            serde_json::to_value(density.chi_square_uniformity(room, 0.05)).expect("result serializes");
    }
    b.add("trace.csv", trace_to_csv(&records));
    b.add_json("timeline.json", timeline);
    b.add_json("metrics.json", &metrics_json);
    b.add("metrics.csv", arstage_core::distortion::metrics_csv([("trace", &metrics)]));
    b.add("room.csv", room_csv.into_inner().expect("flush"));
    b.add("density.pgm", density.to_pgm());
    b.add_json("density.json", &density.metadata_json());
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct BubbleRow {
    t: f64,
    bubble: usize,
    chord: arstage_core::bubbles::Chord,
    x: f64,
    y: f64,
    z: f64,
}

fn run_bubbles(cfg: &ScenarioConfig, altitude: f64, space: &PlaySpace, b: &mut Bundle) -> Result<(), HarnessError> {
    let sim = |e: arstage_core::bubbles::BubbleError| HarnessError::Simulation(e.to_string());
    let half = Vec2::new(space.side / 2.0, space.side / 2.0);
    let bounds = Aabb2::new(space.center - half, space.center + half);
    let (mut walker, mut pose) = Walker::from_spec(walker_spec(cfg), space.center, &[], cfg.seed);
    let mut field = BubbleField::new(*space, altitude, derive_seed(cfg.seed, 2)).map_err(sim)?;
    let steps = step_count(cfg);
    let stride = ((0.5 / cfg.dt).round() as usize).max(1);
    let mut heads = Vec::with_capacity(steps + 1);
    let mut frames = Vec::with_capacity(steps + 1);
    let mut records = Vec::with_capacity(steps + 1);
    let mut rows = csv::Writer::from_writer(Vec::new());
    for k in 0..=steps {
        if k > 0 {
            pose = walker.step(&pose, &GuideInput::default(), cfg.dt, &bounds, None);
            field.step(cfg.dt);
        }
        let t = k as f64 * cfg.dt;
        let head = pose.head();
        let nearest = field.bubbles.iter().map(|bb| bb.center.distance(head)).fold(f64::INFINITY, f64::min);
        records.push(TraceRecord {
            t,
            x: pose.position.x,
            y: pose.position.y,
            heading: pose.heading,
            stage: None,
            guidance: "none".into(),
            target_distance: nearest.is_finite().then_some(nearest),
        });
        if k % stride == 0 {
            for bb in &field.bubbles {
                let c = bb.center;
                rows.serialize(BubbleRow { t, bubble: bb.id, chord: bb.chord, x: c.x, y: c.y, z: c.z })
                    .expect("in-memory write");
            }
        }
        heads.push(head);
        frames.push(field.bubbles.clone());
    }
    let notes = note_events(&heads, &frames, 0.0, cfg.dt).map_err(sim)?;
    let end = steps as f64 * cfg.dt;
    let summary = serde_json::json!({
        "notes_on": notes.iter().filter(|n| n.kind == arstage_core::bubbles::NoteKind::On).count(),
        "note_on_seconds": note_on_time(&notes, end),
        "duration": end,
        "altitude": altitude,
    });
    b.add("trace.csv", trace_to_csv(&records));
    b.add("notes.jsonl", notes_to_jsonl(&notes));
    b.add("notes.csv", notes_to_csv(&notes));
    b.add("bubbles.csv", rows.into_inner().expect("flush"));
    b.add_json("summary.json", &summary);
    Ok(())
}

/// Env config with the scenario's step and episode length.
fn scenario_env(cfg: &ScenarioConfig, env: &EnvConfig) -> EnvConfig {
    EnvConfig { dt: cfg.dt, episode_seconds: cfg.duration, ..env.clone() }
}

/// Trace records for an agent episode: `stage` counts zones entered so far
/// and `target_distance` is the distance to the nearest zone not yet entered.
pub fn episode_records(ep: &RolloutEpisode, env: &EnvConfig) -> Vec<TraceRecord> {
    let fires: Vec<(f64, &str)> = ep
        .events
        .iter()
        .filter(|e| e.kind == EventKind::TriggerFired)
        .map(|e| (e.time, e.subject.as_str()))
        .collect();
    ep.trace
        .samples()
        .iter()
        .map(|s| {
            let entered: Vec<&str> = fires.iter().filter(|f| f.0 <= s.t).map(|f| f.1).collect();
            let nearest = env
                .layout
                .zones
                .iter()
                .filter(|z| !entered.contains(&z.id.as_str()))
                .map(|z| z.center.distance(s.position))
                .fold(f64::INFINITY, f64::min);
            TraceRecord {
                t: s.t,
                x: s.position.x,
                y: s.position.y,
                heading: s.heading,
                stage: Some(entered.len()),
                guidance: "none".into(),
                target_distance: nearest.is_finite().then_some(nearest),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct EpisodeRow {
    episode: usize,
    seed: u64,
    reward: f64,
    zones_entered: usize,
    entry_order: Vec<usize>,
    steps: usize,
}

fn add_episodes(b: &mut Bundle, prefix: &str, eps: &[RolloutEpisode], env: &EnvConfig) -> serde_json::Value {
    for (i, ep) in eps.iter().enumerate() {
        b.add(format!("{prefix}traces/episode-{i:03}.csv"), trace_to_csv(&episode_records(ep, env)));
        b.add(format!("{prefix}events/episode-{i:03}.jsonl"), events_to_jsonl(&ep.events));
    }
    let rows: Vec<EpisodeRow> = eps
        .iter()
        .enumerate()
        .map(|(i, e)| EpisodeRow {
            episode: i,
            seed: e.seed,
            reward: e.reward,
            zones_entered: e.zones_entered,
            entry_order: e.entry_order.clone(),
            steps: e.steps,
        })
        .collect();
    serde_json::json!({
        "summary": summarize(eps, env.layout.zones.len()),
        "episodes": rows,
    })
}

fn run_rollout(
    cfg: &ScenarioConfig,
    episodes: usize,
    deterministic: bool,
    env: &EnvConfig,
    b: &mut Bundle,
) -> Result<(), HarnessError> {
    let env = scenario_env(cfg, env);
    let (net, source) = match &cfg.walker {
        Some(WalkerSpec::Policy { checkpoint: path }) => (
            checkpoint::load(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?,
            "checkpoint",
        ),
        _ => (PolicyNetwork::new(cfg.seed), "untrained"),
    };
    let eps = rollout_shared(&net, &env, episodes, cfg.seed, deterministic)?;
    let mut out = add_episodes(b, "", &eps, &env);
    out["policy"] = source.into();
    out["deterministic"] = deterministic.into();
    b.add_json("env.json", &env);
    b.add_json("rollout.json", &out);
    Ok(())
}

/// Evaluation seed shared by all candidates of a training run.
const EVAL_STREAM: u64 = 0xE7A1;

fn run_train(cfg: &ScenarioConfig, b: &mut Bundle) -> Result<(), HarnessError> {
    let ScenarioKind::Train { steps, ppo, warm_start, candidates, keep_fraction, eval_episodes, env } = &cfg.scenario
    else {
        unreachable!("called for train scenarios")
    };
    let env = scenario_env(cfg, env);
    let eval_seed = derive_seed(cfg.seed, EVAL_STREAM);
    let mut scored = Vec::new();
    let mut rows = Vec::new();
    let mut policies = Vec::new();
    for c in 0..*candidates {
        let seed = if *candidates == 1 { cfg.seed } else { derive_seed(cfg.seed, c as u64) };
        let mut net = PolicyNetwork::new(seed);
        let mut bc_losses = None;
        if let Some(ws) = warm_start {
            let traces = (0..ws.demo_episodes)
                .map(|i| ScriptedExpert::new(ws.linger).demonstrate(&env, derive_seed(seed, 1000 + i as u64)))
                .collect::<Result<Vec<_>, _>>()?;
            let demos = DemonstrationSet::from_traces(&traces, &env)?;
            let bc = arstage_agents::bc::BcConfig { seed, ..ws.bc.clone() };
            let (cloned, losses) = bc_train(&demos, &net, &bc)?;
            net = cloned;
            bc_losses = Some(losses);
        }
        let ppo_cfg = PpoConfig { seed, total_steps: *steps, ..ppo.clone() };
        let (mut trained, stats) = ppo_train(&env, &net, &ppo_cfg)?;
        trained.round_to_f32();
        let mut ctl = PolicyController { net: &trained, deterministic: true };
        let eval = rollout(&mut ctl, &env, *eval_episodes, eval_seed)?;
        let summary = summarize(&eval, env.layout.zones.len());
        let dir = format!("candidates/cand-{c:02}/");
        let sidecar = serde_json::json!({
            "format": "arstage policy checkpoint v1",
            "seed": seed,
            "env": env,
            "ppo": ppo_cfg,
            "warm_start": warm_start,
            "bc_losses": bc_losses,
            "evaluation": summary,
            "stats": stats,
        });
        b.add(format!("{dir}policy.bin"), checkpoint::to_bytes(&trained));
        b.add_json(format!("{dir}policy.json"), &sidecar);
        b.add(format!("{dir}stats.csv"), stats_csv(&stats));
        rows.push(serde_json::json!({
            "candidate": c,
            "seed": seed,
            "mean_reward": summary.mean_reward,
            "mean_zones": summary.mean_zones,
            "all_zones_fraction": summary.all_zones_fraction,
        }));
        scored.push((c, summary.mean_reward));
        policies.push((trained, sidecar));
    }
    let kept = select_models(&scored, *keep_fraction)?;
    let best = scored.iter().fold(0, |best, &(c, r)| if r > scored[best].1 { c } else { best });
    b.add("policy.bin", checkpoint::to_bytes(&policies[best].0));
    b.add_json("policy.json", &policies[best].1);
    b.add_json("env.json", &env);
    b.add_json(
        "selection.json",
        &serde_json::json!({
            "keep_fraction": keep_fraction,
            "eval_episodes": eval_episodes,
            "candidates": rows,
            "kept": kept,
            "best": best,
        }),
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct MeshRow {
    source: MeshSource,
    vertices: usize,
    faces: usize,
    /// Enclosed volume; open meshes have none.
    volume: Option<f64>,
    watertight: bool,
}

/// Extrudes a traced venue into an OBJ bundle.
pub fn trace_scene(path: &Path) -> Result<Bundle, HarnessError> {
    let (file, scene) = load_scene(path)?;
    let name = path.file_stem().map_or("scene".into(), |s| s.to_string_lossy().into_owned());
    let mut b = Bundle::new(name, "trace", 0);
    let meshes: Vec<MeshRow> = scene
        .meshes
        .iter()
        .map(|m| MeshRow {
            source: m.source,
            vertices: m.vertices.len(),
            faces: m.faces.len(),
            volume: is_watertight(m).then(|| mesh_volume(m)),
            watertight: is_watertight(m),
        })
        .collect();
    let graph = file.graph();
    b.add("venue.obj", export_obj(&scene.meshes));
    b.add("scene.json", SceneFile::from_scene(&graph, &scene, file.wall_height).to_json() + "\n");
    b.add_json(
        "summary.json",
        &serde_json::json!({
            "walls": scene.walls.len(),
            "obstacles": scene.obstacles().len(),
            "walkable_area": scene.walkable.area(),
            "meshes": meshes,
        }),
    );
    Ok(b)
}
