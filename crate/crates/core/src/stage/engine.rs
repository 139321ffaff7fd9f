use serde::{Deserialize, Serialize};

use super::cue::CueSheet;
use crate::trace::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ZoneStatus {
    Unvisited,
    /// Clip started at the given play-clock time.
    Playing { started: f64 },
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    TriggerFired,
    ClipStarted,
    ClipEnded,
    SpiralSpawned,
    StageAdvanced,
    PlayEnded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageEvent {
    pub time: f64,
    pub kind: EventKind,
    pub subject: String,
}

impl StageEvent {
    fn new(time: f64, kind: EventKind, subject: impl Into<String>) -> Self {
        Self { time, kind, subject: subject.into() }
    }
}

/// Subject prefix used for spiral trigger events.
pub const SPIRAL_SUBJECT_PREFIX: &str = "spiral:";

/// Playback state of a cue sheet.
///
/// Clips run to completion once started, whether or not the walker stays in
/// the zone. The spiral appears when every zone of the current stage is
/// Done and entering it advances the stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageState {
    pub stage: usize,
    pub zones: Vec<ZoneStatus>,
    pub spiral_active: bool,
    pub clock: f64,
    pub ended: bool,
}

impl StageState {
    pub fn new(sheet: &CueSheet) -> Self {
        Self {
            stage: 0,
            zones: vec![ZoneStatus::Unvisited; sheet.stages[0].zones.len()],
            spiral_active: false,
            clock: 0.0,
            ended: false,
        }
    }

    /// Pure form of [`StageState::advance`].
    pub fn step(&self, sheet: &CueSheet, pose: &Pose, dt: f64) -> (StageState, Vec<StageEvent>) {
        let mut next = self.clone();
        let events = next.advance(sheet, pose, dt);
        (next, events)
    }

    /// Advances the play clock by `dt` with the walker at `pose` at the end
    /// of the tick. Events within the tick are in nondecreasing time order;
    /// clip ends carry their exact end time rather than the tick boundary.
    pub fn advance(&mut self, sheet: &CueSheet, pose: &Pose, dt: f64) -> Vec<StageEvent> {
        debug_assert!(dt > 0.0);
        let t0 = self.clock;
        let t1 = t0 + dt;
        self.clock = t1;
        let mut events = Vec::new();
        if self.ended {
            return events;
        }
        let stage = &sheet.stages[self.stage];

        let mut ended: Vec<(f64, usize)> = self
            .zones
            .iter()
            .enumerate()
            .filter_map(|(i, z)| match *z {
                ZoneStatus::Playing { started } => {
                    let end = started + stage.zones[i].clip.duration;
                    (end <= t1).then_some((end.max(t0), i))
                }
                _ => None,
            })
            .collect();
        ended.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(time, i) in &ended {
            self.zones[i] = ZoneStatus::Done;
            events.push(StageEvent::new(time, EventKind::ClipEnded, &stage.zones[i].clip.id));
        }
        if let Some(&(last, _)) = ended.last() {
            if !self.spiral_active && self.zones.iter().all(|z| *z == ZoneStatus::Done) {
                self.spiral_active = true;
                events.push(StageEvent::new(last, EventKind::SpiralSpawned, spiral_subject(&stage.theme)));
            }
        }

        for (i, zone) in stage.zones.iter().enumerate() {
            if self.zones[i] == ZoneStatus::Unvisited && zone.contains(pose.position) {
                self.zones[i] = ZoneStatus::Playing { started: t1 };
                events.push(StageEvent::new(t1, EventKind::TriggerFired, &zone.id));
                events.push(StageEvent::new(t1, EventKind::ClipStarted, &zone.clip.id));
            }
        }

        if self.spiral_active && pose.position.distance(stage.spiral.center) <= stage.spiral.radius {
            events.push(StageEvent::new(t1, EventKind::TriggerFired, spiral_subject(&stage.theme)));
            if self.stage + 1 < sheet.stages.len() {
                self.stage += 1;
                let next = &sheet.stages[self.stage];
                self.zones = vec![ZoneStatus::Unvisited; next.zones.len()];
                self.spiral_active = false;
                events.push(StageEvent::new(t1, EventKind::StageAdvanced, &next.theme));
            } else {
                self.spiral_active = false;
                self.ended = true;
                events.push(StageEvent::new(t1, EventKind::PlayEnded, "play"));
            }
        }
        events
    }

    /// Zone the walker should head for next: the first Unvisited zone, or
    /// the spiral once it is active.
    pub fn next_target(&self, sheet: &CueSheet) -> Option<crate::geom::Vec2> {
        if self.ended {
            return None;
        }
        let stage = &sheet.stages[self.stage];
        if self.spiral_active {
            return Some(stage.spiral.center);
        }
        self.zones
            .iter()
            .position(|z| *z == ZoneStatus::Unvisited)
            .map(|i| stage.zones[i].center)
    }

    /// True while any clip of the current stage is playing.
    pub fn performance_active(&self) -> bool {
        !self.ended && self.zones.iter().any(|z| matches!(z, ZoneStatus::Playing { .. }))
    }

    /// Index of a Playing zone that contains `pose`, if any.
    pub fn playing_zone_at(&self, sheet: &CueSheet, pose: &Pose) -> Option<usize> {
        if self.ended {
            return None;
        }
        let stage = &sheet.stages[self.stage];
        self.zones.iter().enumerate().find_map(|(i, z)| {
            (matches!(z, ZoneStatus::Playing { .. }) && stage.zones[i].contains(pose.position)).then_some(i)
        })
    }
}

pub fn spiral_subject(theme: &str) -> String {
    format!("{SPIRAL_SUBJECT_PREFIX}{theme}")
}

/// Free-function form of [`StageState::step`].
pub fn step(state: &StageState, sheet: &CueSheet, pose: &Pose, dt: f64) -> (StageState, Vec<StageEvent>) {
    state.step(sheet, pose, dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;
    use crate::stage::cue::*;

    fn one_stage(durations: &[f64]) -> CueSheet {
        let zones = durations
            .iter()
            .enumerate()
            .map(|(i, &d)| ContentZone {
                id: format!("z{i}"),
                center: Vec2::new(5.0 * i as f64, 0.0),
                shape: ZoneShape::default(),
                clip: PerformanceClip { id: format!("c{i}"), duration: d },
            })
            .collect();
        CueSheet {
            version: CUE_SHEET_SCHEMA_VERSION,
            stages: vec![Stage {
                theme: "solo".into(),
                zones,
                guidance: GuidanceMode::None,
                spiral: SpiralSpec { center: Vec2::new(0.0, 10.0), radius: 1.0 },
            }],
        }
    }

    fn at(x: f64, y: f64) -> Pose {
        Pose::new(Vec2::new(x, y), 0.0)
    }

    fn kinds(ev: &[StageEvent]) -> Vec<EventKind> {
        ev.iter().map(|e| e.kind).collect()
    }

    #[test]
    fn entering_a_zone_starts_its_clip_and_it_ends_on_time() {
        let sheet = one_stage(&[15.0, 10.0]);
        let mut st = StageState::new(&sheet);
        let ev = st.advance(&sheet, &at(0.0, 0.0), 0.5);
        assert_eq!(kinds(&ev), [EventKind::TriggerFired, EventKind::ClipStarted]);
        let mut ended = Vec::new();
        for _ in 0..40 {
            ended.extend(st.advance(&sheet, &at(0.0, 3.0), 0.5));
        }
        assert_eq!(kinds(&ended), [EventKind::ClipEnded]);
        assert!((ended[0].time - 15.5).abs() < 1e-12);
    }

    #[test]
    fn spiral_spawns_once_after_all_zones_done_then_play_ends() {
        let sheet = one_stage(&[2.0, 3.0]);
        let mut st = StageState::new(&sheet);
        let mut all = Vec::new();
        all.extend(st.advance(&sheet, &at(0.0, 0.0), 0.1));
        all.extend(st.advance(&sheet, &at(5.0, 0.0), 0.1));
        for _ in 0..100 {
            all.extend(st.advance(&sheet, &at(5.0, 0.0), 0.1));
        }
        assert!(st.spiral_active);
        all.extend(st.advance(&sheet, &at(0.0, 9.5), 0.1));
        let spirals = all.iter().filter(|e| e.kind == EventKind::SpiralSpawned).count();
        assert_eq!(spirals, 1);
        assert_eq!(all.last().unwrap().kind, EventKind::PlayEnded);
        assert!(st.ended);
        assert!(all.windows(2).all(|w| w[0].time <= w[1].time));
    }

    #[test]
    fn spiral_ignored_until_active() {
        let sheet = one_stage(&[2.0]);
        let mut st = StageState::new(&sheet);
        let ev = st.advance(&sheet, &at(0.0, 10.0), 0.1);
        assert!(ev.is_empty());
        assert_eq!(st.stage, 0);
    }

    #[test]
    fn clip_continues_after_walker_leaves() {
        let sheet = one_stage(&[1.0, 1.0]);
        let mut st = StageState::new(&sheet);
        st.advance(&sheet, &at(0.0, 0.0), 0.1);
        let mut ev = Vec::new();
        for _ in 0..20 {
            ev.extend(st.advance(&sheet, &at(2.5, 3.0), 0.1));
        }
        assert_eq!(kinds(&ev), [EventKind::ClipEnded]);
        assert_eq!(st.zones[0], ZoneStatus::Done);
    }

    #[test]
    fn pure_step_leaves_input_untouched() {
        let sheet = one_stage(&[1.0]);
        let st = StageState::new(&sheet);
        let (next, ev) = step(&st, &sheet, &at(0.0, 0.0), 0.02);
        assert_eq!(st.clock, 0.0);
        assert_eq!(next.clock, 0.02);
        assert_eq!(ev.len(), 2);
    }
}
