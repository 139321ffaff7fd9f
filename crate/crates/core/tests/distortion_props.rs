use arstage_core::distortion::*;
use arstage_core::{LocomotionTrace, TraceSample, Vec2, Vec3};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_trace(r: &mut ChaCha8Rng, n: usize) -> LocomotionTrace {
    let mut t = 0.0;
    let mut p = Vec2::new(2.0, 2.0);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        samples.push(TraceSample { t, position: p, heading: 0.0 });
        t += r.random_range(0.01..0.2);
        p = p + Vec2::new(r.random_range(-0.1..0.1), r.random_range(-0.1..0.1));
    }
    LocomotionTrace::new(samples).unwrap()
}

/// Trapezoid-free oracle: integrate the piecewise-constant velocity over
/// the window by walking sample pairs and clipping each to the window.
fn integrated_displacement(tr: &LocomotionTrace, w: Window) -> Vec2 {
    let s = tr.samples();
    let mut total = Vec2::ZERO;
    for pair in s.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let lo = a.t.max(w.start);
        let hi = b.t.min(w.end);
        if hi > lo {
            let v = (b.position - a.position) / (b.t - a.t);
            total = total + v * (hi - lo);
        }
    }
    total
}

#[test]
fn axis_movement_matches_integrated_velocity() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let axis = RoomModel::default().short_axis();
    for _ in 0..500 {
        let tr = random_trace(&mut r, 200);
        let (t0, t1) = tr.span().unwrap();
        let a = r.random_range(t0..t1);
        let b = r.random_range(a..=t1);
        if b - a < 1e-6 {
            continue;
        }
        let w = Window::new(a, b);
        let got = axis_movement(&tr, axis, w).unwrap();
        assert!((got - integrated_displacement(&tr, w).dot(axis)).abs() < 1e-9);
    }
}

#[test]
fn center_distance_matches_oracle() {
    let mut r = ChaCha8Rng::seed_from_u64(6);
    let c = RoomModel::default().center();
    for _ in 0..500 {
        let tr = random_trace(&mut r, 100);
        let (t0, t1) = tr.span().unwrap();
        let w = Window::new(t0, t1);
        let first = tr.samples()[0].position;
        let last = first + integrated_displacement(&tr, w);
        let oracle = last.distance(c) - first.distance(c);
        assert!((center_distance_change(&tr, c, w).unwrap() - oracle).abs() < 1e-9);
    }
}

#[test]
fn particle_field_stays_inside_for_long_runs() {
    let room = RoomModel::default();
    let bounds = room.geometry(1).bounds();
    let mut f = ParticleField::new(ParticleFieldConfig::default(), &bounds, 99);
    for _ in 0..100_000 {
        f.step(&bounds, 0.5);
    }
    assert!(f.all_inside(&bounds));
    assert!(f.particles.iter().all(|p| (p.direction.norm() - 1.0).abs() < 1e-12));
}

#[test]
fn particle_field_follows_a_distorting_room() {
    let room = RoomModel::default();
    let tl = TreatmentTimeline::default();
    let t = DistortionTreatment::ENLARGE;
    let b0 = geometry_at_extent(&room, &t, 0.0).bounds();
    let mut f = ParticleField::new(ParticleFieldConfig::default(), &b0, 1);
    let dt = 0.02;
    let mut max_count = 0;
    for k in 1..=(60.0 / dt) as usize {
        let p = tl.timeline_step(k as f64 * dt).unwrap();
        let b = geometry_at_extent(&room, &t, p.extent).bounds();
        f.step(&b, dt);
        assert!(f.all_inside(&b));
        max_count = max_count.max(f.particles.len());
    }
    assert_eq!(max_count, f.target_count(&geometry_at_extent(&room, &t, 1.0).bounds()));
}

#[test]
fn identity_at_start_and_end_of_default_trial() {
    let room = RoomModel::default();
    let base = room.geometry(GEOMETRY_SAMPLES_PER_WALL);
    let tl = TreatmentTimeline::default();
    for t in DistortionTreatment::ALL {
        for time in [0.0, 60.0] {
            let g = geometry_at_extent(&room, &t, tl.timeline_step(time).unwrap().extent);
            assert!(g.max_deviation(&base) < 1e-9);
        }
    }
}

fn trace_strategy() -> impl Strategy<Value = LocomotionTrace> {
    prop::collection::vec((-5.0..5.0f64, -5.0..5.0f64), 2..40).prop_map(|pts| {
        LocomotionTrace::new(
            pts.into_iter()
                .enumerate()
                .map(|(i, (x, y))| TraceSample { t: i as f64 * 0.1, position: Vec2::new(x, y), heading: 0.0 })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #[test]
    fn walking_distance_bounds_displacement(tr in trace_strategy()) {
        let s = tr.samples();
        let net = s[0].position.distance(s[s.len() - 1].position);
        prop_assert!(total_walking_distance(&tr).unwrap() >= net - 1e-12);
    }

    #[test]
    fn metrics_are_translation_invariant(tr in trace_strategy(), dx in -10.0..10.0f64, dy in -10.0..10.0f64) {
        let off = Vec2::new(dx, dy);
        let moved = tr.translated(off);
        let (t0, t1) = tr.span().unwrap();
        let w = Window::new(t0, t1);
        let axis = Vec2::new(1.0, 0.0);
        let c = Vec2::new(2.25, 2.75);
        prop_assert!((axis_movement(&tr, axis, w).unwrap() - axis_movement(&moved, axis, w).unwrap()).abs() < 1e-9);
        let a = center_distance_change(&tr, c, w).unwrap();
        let b = center_distance_change(&moved, c + off, w).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn return_mirrors_apply(kind in 0usize..5, p in 0.0..=1.0f64) {
        let room = RoomModel::default();
        let t = DistortionTreatment::ALL[kind];
        let a = treatment_geometry(&room, &t, Phase::Apply, p).unwrap();
        let r = treatment_geometry(&room, &t, Phase::Return, 1.0 - p).unwrap();
        prop_assert!(a.max_deviation(&r) < 1e-12);
    }

    #[test]
    fn floor_never_smaller_than_physical(kind in 0usize..5, p in 0.0..=1.0f64) {
        let room = RoomModel::default();
        let g = geometry_at_extent(&room, &DistortionTreatment::ALL[kind], p);
        prop_assert!(g.floor_area() >= room.floor_area() - 1e-9);
    }

    #[test]
    fn enlarge_volume_is_cubic(p in 0.0..=1.0f64) {
        let room = RoomModel::default();
        let g = geometry_at_extent(&room, &DistortionTreatment::ENLARGE, p);
        prop_assert!((g.bounds().volume() / room.volume() - (1.0 + p).powi(3)).abs() < 1e-9);
    }

    #[test]
    fn geometry_is_continuous_in_progress(kind in 0usize..5, p in 0.0..0.999f64) {
        let room = RoomModel::default();
        let t = DistortionTreatment::ALL[kind];
        let a = geometry_at_extent(&room, &t, p);
        let b = geometry_at_extent(&room, &t, p + 1e-3);
        prop_assert!(a.max_deviation(&b) < 0.1);
    }

    #[test]
    fn field_directions_stay_unit(seed in any::<u64>()) {
        let b = Aabb3 { min: Vec3::ZERO, max: Vec3::new(4.5, 5.5, 2.5) };
        let mut f = ParticleField::new(ParticleFieldConfig::default(), &b, seed);
        for _ in 0..50 {
            f.step(&b, 0.1);
        }
        prop_assert!(f.particles.iter().all(|p| (p.direction.norm() - 1.0).abs() < 1e-12));
    }
}
