use std::time::Instant;

use palpation_core::assessment::{assess, AssessmentConfig, Criterion};
use palpation_core::reference::{build_reference, ExpertSession, ReferenceConfig};
use palpation_core::segmentation::{press_stats, segment_frames, SegmentationConfig};
use palpation_core::simulator::{
    encode_session, generate_session, planned_presses, stream_session, Archetype, SimProfile,
};
use palpation_core::telemetry::{ForceQuartet, PerSensor, SensorId, TaskKind};
use palpation_core::wire::FrameDecoder;

fn events_for(a: Archetype, seed: u64) -> Vec<palpation_core::segmentation::PressEvent> {
    let s = generate_session(&SimProfile::archetype(a), a.natural_task().unwrap(), seed).unwrap();
    segment_frames(&s.frames, &SegmentationConfig::default()).unwrap()
}

#[test]
fn every_archetype_closes_the_loop_across_seeds() {
    for a in Archetype::BUILT_IN {
        let profile = SimProfile::archetype(a);
        for seed in 100..150 {
            let events = events_for(a, seed);
            assert_eq!(press_stats(&events).counts, profile.press_counts, "{a} seed {seed}");
            let mut plan = planned_presses(&profile, seed).unwrap();
            plan.sort_by_key(|p| (p.start_ms, p.sensor));
            for (e, p) in events.iter().zip(&plan) {
                assert_eq!((e.sensor, e.peak_quartet), (p.sensor, p.quartet), "{a} seed {seed}");
            }
        }
    }
}

#[test]
fn tutor_one_is_six_long_hard_presses() {
    for seed in 0..20 {
        let events = events_for(Archetype::Tutor1Deep, seed);
        assert_eq!(events.len(), 6);
        assert!(events.iter().all(|e| e.peak_quartet == ForceQuartet::Q4));
        let t2 = events_for(Archetype::Tutor2Deep, seed);
        let mean = |ev: &[palpation_core::segmentation::PressEvent]| {
            ev.iter().map(|e| f64::from(e.duration_ms)).sum::<f64>() / ev.len() as f64
        };
        assert!(mean(&events) > 1.5 * mean(&t2));
    }
}

#[test]
fn tutor_two_is_twenty_one_mid_range_presses() {
    for seed in 0..20 {
        let events = events_for(Archetype::Tutor2Deep, seed);
        assert_eq!(events.len(), 21);
        assert!(events
            .iter()
            .all(|e| matches!(e.peak_quartet, ForceQuartet::Q2 | ForceQuartet::Q3)));
    }
}

#[test]
fn tutor_four_stays_at_light_force() {
    let events = events_for(Archetype::Tutor4Deep, 4);
    assert_eq!(events.len(), 9);
    assert!(events.iter().all(|e| e.peak_quartet == ForceQuartet::Q2));
}

#[test]
fn reference_from_tutors_spans_six_to_twenty_one() {
    let seg = SegmentationConfig::default();
    let mut experts = Vec::new();
    for (i, a) in [Archetype::Tutor1Deep, Archetype::Tutor2Deep, Archetype::Tutor3Deep, Archetype::Tutor4Deep]
        .into_iter()
        .enumerate()
    {
        let seed = 40 + i as u64;
        experts.push(ExpertSession::segment(generate_session(&SimProfile::archetype(a), TaskKind::Deep, seed).unwrap(), &seg).unwrap());
    }
    for (a, t) in [(Archetype::IdealSuperficial, TaskKind::Superficial), (Archetype::IdealLiver, TaskKind::Liver)] {
        experts.push(ExpertSession::segment(generate_session(&SimProfile::archetype(a), t, 1).unwrap(), &seg).unwrap());
    }
    let model = build_reference(&experts, &seg, &ReferenceConfig::default(), None).unwrap();
    let deep = model.task(TaskKind::Deep).unwrap();
    assert_eq!(deep.session_count, 4);
    assert_eq!((deep.press_count_min, deep.press_count_max), (6, 21));
    assert_eq!(model.quartet_bound, 600);
}

#[test]
fn error_heavy_loses_wrong_use_points() {
    let seg = SegmentationConfig::default();
    let cfg = AssessmentConfig::default();
    let triplet = |deep: Archetype| {
        vec![
            generate_session(&SimProfile::archetype(Archetype::IdealSuperficial), TaskKind::Superficial, 2).unwrap(),
            generate_session(&SimProfile::archetype(deep), TaskKind::Deep, 2).unwrap(),
            generate_session(&SimProfile::archetype(Archetype::IdealLiver), TaskKind::Liver, 2).unwrap(),
        ]
    };
    let ideal = assess(&triplet(Archetype::IdealDeep), &seg, &cfg).unwrap();
    let heavy = assess(&triplet(Archetype::ErrorHeavy), &seg, &cfg).unwrap();
    let wrong = |r: &palpation_core::assessment::CompetencyReport| {
        r.task(TaskKind::Deep).unwrap().score(Criterion::WrongUse).unwrap().points
    };
    assert!(wrong(&heavy) < wrong(&ideal));
    let c = &heavy.task(TaskKind::Deep).unwrap().contributions;
    assert!(c.get(SensorId::E1) + c.get(SensorId::E2) >= 35.0);
}

#[test]
fn custom_profile_from_toml() {
    let text = r#"
archetype = "custom"
quartets = ["Q1", "Q4"]
press_ms = [400, 480]
gap_ms = [200, 200]
session_ms = 12000
[press_counts]
T1 = 3
T2 = 0
T3 = 2
S1 = 0
S2 = 0
S3 = 0
B1 = 0
B2 = 0
B3 = 0
E1 = 1
E2 = 0
E3 = 0
"#;
    let profile: SimProfile = toml::from_str(text).unwrap();
    let s = generate_session(&profile, TaskKind::Superficial, 1).unwrap();
    assert_eq!(s.frames.len(), 601);
    let events = segment_frames(&s.frames, &SegmentationConfig::default()).unwrap();
    let mut expected = PerSensor([0; 12]);
    expected[SensorId::T1] = 3;
    expected[SensorId::T3] = 2;
    expected[SensorId::E1] = 1;
    assert_eq!(press_stats(&events).counts, expected);
}

#[test]
fn stream_round_trips_through_the_decoder() {
    let s = generate_session(&SimProfile::archetype(Archetype::Tutor2Deep), TaskKind::Deep, 8).unwrap();
    let bytes = encode_session(&s).unwrap();
    let mut dec = FrameDecoder::new();
    let mut out = Vec::new();
    for chunk in bytes.chunks(97) {
        out.extend(dec.feed(chunk).into_iter().map(Result::unwrap));
    }
    assert_eq!(out, s.frames);
    assert_eq!(dec.stats().errors, 0);
}

#[test]
fn real_time_pacing_of_a_ten_second_session() {
    let mut profile = SimProfile::archetype(Archetype::Tutor4Deep);
    profile.session_ms = Some(10_000);
    let s = generate_session(&profile, TaskKind::Deep, 3).unwrap();
    assert_eq!(s.duration_ms(), 10_000);
    let mut sink = Vec::new();
    let start = Instant::now();
    let summary = stream_session(&s, 1.0, &mut sink).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert_eq!(summary.frames, s.frames.len() as u64);
    assert!((secs - 10.0).abs() <= 0.2, "took {secs:.3} s");
}
