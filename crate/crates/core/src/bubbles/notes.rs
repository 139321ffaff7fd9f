use serde::{Deserialize, Serialize};

use super::sim::{head_inside, Bubble, Chord};
use super::BubbleError;
use crate::geom::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NoteKind {
    On,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoteEvent {
    pub time: f64,
    pub bubble: usize,
    pub chord: Chord,
    pub kind: NoteKind,
}

/// Note events for a head trace against a bubble trajectory sampled on the
/// same clock (`head[k]` and `frames[k]` at `t0 + k·dt`). A note turns On at
/// the first sample with the head inside a bubble and Off at the first
/// sample after it leaves. Notes still sounding at the last sample stay On.
pub fn note_events(head: &[Vec3], frames: &[Vec<Bubble>], t0: f64, dt: f64) -> Result<Vec<NoteEvent>, BubbleError> {
    if head.len() != frames.len() {
        return Err(BubbleError::MisalignedTraces { head: head.len(), bubbles: frames.len() });
    }
    let mut inside: Vec<bool> = Vec::new();
    let mut events = Vec::new();
    for (k, (h, bubbles)) in head.iter().zip(frames).enumerate() {
        let t = t0 + k as f64 * dt;
        for b in bubbles {
            if inside.len() <= b.id {
                inside.resize(b.id + 1, false);
            }
            let now = head_inside(b, *h);
            if now != inside[b.id] {
                inside[b.id] = now;
                let kind = if now { NoteKind::On } else { NoteKind::Off };
                events.push(NoteEvent { time: t, bubble: b.id, chord: b.chord, kind });
            }
        }
    }
    Ok(events)
}

/// Seconds each bubble's note sounded, counting open notes up to `end`.
pub fn note_on_time(events: &[NoteEvent], end: f64) -> f64 {
    let mut open: std::collections::BTreeMap<usize, f64> = Default::default();
    let mut total = 0.0;
    for e in events {
        match e.kind {
            NoteKind::On => {
                open.insert(e.bubble, e.time);
            }
            NoteKind::Off => {
                if let Some(t) = open.remove(&e.bubble) {
                    total += e.time - t;
                }
            }
        }
    }
    total + open.values().map(|t| end - t).sum::<f64>()
}

pub fn notes_to_jsonl(events: &[NoteEvent]) -> String {
    events.iter().map(|e| serde_json::to_string(e).expect("note serializes") + "\n").collect()
}

/// `time,bubble,chord,kind` rows.
pub fn notes_to_csv(events: &[NoteEvent]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["time", "bubble", "chord", "kind"]).expect("in-memory write");
    for e in events {
        let kind = match e.kind {
            NoteKind::On => "on",
            NoteKind::Off => "off",
        };
        w.write_record([e.time.to_string(), e.bubble.to_string(), e.chord.to_string(), kind.to_string()])
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("flush")).expect("utf8")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Vec2;

    fn still(id: usize, chord: Chord, x: f64) -> Bubble {
        Bubble { id, chord, center: Vec2::new(x, 0.0).extend(1.6), heading: 0.0 }
    }

    #[test]
    fn crossing_a_bubble_sounds_for_its_diameter() {
        let dt = 0.001;
        let b = still(0, Chord::Am, 0.0);
        let head: Vec<Vec3> = (0..3000).map(|k| Vec3::new(-1.5 + k as f64 * dt, 0.0, 1.6)).collect();
        let frames = vec![vec![b]; head.len()];
        let ev = note_events(&head, &frames, 0.0, dt).unwrap();
        assert_eq!(ev.len(), 2);
        assert_eq!((ev[0].kind, ev[1].kind), (NoteKind::On, NoteKind::Off));
        assert!((ev[1].time - ev[0].time - 0.8).abs() <= dt + 1e-9);
    }

    #[test]
    fn never_entering_is_silent() {
        let head = vec![Vec3::new(5.0, 5.0, 1.6); 50];
        let frames = vec![vec![still(0, Chord::Em, 0.0)]; 50];
        assert!(note_events(&head, &frames, 0.0, 0.02).unwrap().is_empty());
    }

    #[test]
    fn overlapping_bubbles_sound_together() {
        let head = vec![Vec3::new(0.2, 0.0, 1.6); 3];
        let frames = vec![vec![still(0, Chord::Cmaj, 0.0), still(1, Chord::G7, 0.4)]; 3];
        let ev = note_events(&head, &frames, 0.0, 0.02).unwrap();
        assert_eq!(ev.len(), 2);
        assert!(ev.iter().all(|e| e.kind == NoteKind::On && e.time == 0.0));
    }

    #[test]
    fn length_mismatch_rejected() {
        let r = note_events(&[Vec3::ZERO; 2], &[vec![]], 0.0, 0.1);
        assert!(matches!(r, Err(BubbleError::MisalignedTraces { head: 2, bubbles: 1 })));
    }

    #[test]
    fn exports() {
        let ev = vec![NoteEvent { time: 1.5, bubble: 3, chord: Chord::GMaj, kind: NoteKind::On }];
        assert_eq!(notes_to_csv(&ev), "time,bubble,chord,kind\n1.5,3,GMaj,on\n");
        let back: NoteEvent = serde_json::from_str(notes_to_jsonl(&ev).trim()).unwrap();
        assert_eq!(back, ev[0]);
    }
}
