use std::collections::BTreeSet;

use arttrack::geometry::Detection;
use arttrack::io::Record;
use arttrack::tracker::{classify_tracks, TrackOutput, TrackStatus};
use arttrack::{
    evaluate, generate_sequence, track_sequence, Ablation, BoundingBox, Config, Error,
    SequenceData, SimConfig, Tracker,
};

fn det(frame: u32, cx: f64, cy: f64, conf: f64) -> Detection {
    Detection {
        frame,
        bbox: BoundingBox::from_center(cx, cy, 24.0, 18.0),
        confidence: conf,
    }
}

fn ids(out: &[TrackOutput]) -> BTreeSet<u64> {
    out.iter().map(|o| o.id).collect()
}

#[test]
fn empty_frames_produce_nothing() {
    let mut t = Tracker::new(&Config::default(), Ablation::default());
    for f in 1..=5 {
        assert!(t.process_frame(&[], f).unwrap().is_empty());
    }
    assert_eq!(t.live_tracks(), 0);
    assert_eq!(t.stats().frames, 5);
}

#[test]
fn single_target_keeps_one_identity() {
    let mut t = Tracker::new(&Config::default(), Ablation::default());
    let mut seen = BTreeSet::new();
    let mut outputs = 0;
    for f in 1..=100u32 {
        let x = 100.0 + 2.5 * f as f64;
        let y = 200.0 + 10.0 * (f as f64 * 0.05).sin();
        let out = t.process_frame(&[det(f, x, y, 0.9)], f).unwrap();
        outputs += out.len();
        seen.extend(ids(&out));
    }
    assert_eq!(seen.len(), 1);
    // Outputs start once the track is confirmed on its third hit.
    assert_eq!(outputs, 98);
    assert_eq!(t.stats().tracks_created, 1);
}

#[test]
fn tentative_track_dies_on_first_miss() {
    let mut t = Tracker::new(&Config::default(), Ablation::default());
    t.process_frame(&[det(1, 50.0, 50.0, 0.9)], 1).unwrap();
    assert_eq!(t.tracks()[0].status, TrackStatus::Tentative);
    t.process_frame(&[], 2).unwrap();
    assert_eq!(t.live_tracks(), 0);
}

#[test]
fn confirmed_track_survives_until_max_age() {
    let cfg = Config::default();
    let max_age = cfg.tracker.max_age_lost;
    let mut t = Tracker::new(&cfg, Ablation::default());
    for f in 1..=5 {
        t.process_frame(&[det(f, 300.0, 300.0, 0.9)], f).unwrap();
    }
    for f in 6..=(5 + max_age) {
        t.process_frame(&[], f).unwrap();
        assert_eq!(t.tracks()[0].status, TrackStatus::Lost, "frame {f}");
    }
    t.process_frame(&[], 6 + max_age).unwrap();
    assert_eq!(t.live_tracks(), 0);
    assert_eq!(t.stats().tracks_removed, 1);
}

#[test]
fn crossing_targets_recover_identity_after_occlusion() {
    // Two targets cross; one is invisible for five frames around the crossing.
    let mut t = Tracker::new(&Config::default(), Ablation::default());
    let mut first_ids: Option<(u64, u64)> = None;
    let mut last_ids = None;
    for f in 1..=60u32 {
        let a = (100.0 + 3.0 * f as f64, 200.0);
        let b = (280.0 - 3.0 * f as f64, 260.0);
        let mut dets = vec![det(f, a.0, a.1, 0.9)];
        if !(29..=33).contains(&f) {
            dets.push(det(f, b.0, b.1, 0.9));
        }
        let out = t.process_frame(&dets, f).unwrap();
        let find = |cx: f64| {
            out.iter()
                .find(|o| (o.bbox.center().0 - cx).abs() < 5.0)
                .map(|o| o.id)
        };
        if f == 10 {
            first_ids = Some((find(a.0).unwrap(), find(b.0).unwrap()));
        }
        if f == 60 {
            last_ids = Some((find(a.0).unwrap(), find(b.0).unwrap()));
        }
    }
    assert_eq!(first_ids, last_ids);
}

#[test]
fn low_confidence_detections_extend_but_never_start_tracks() {
    let mut t = Tracker::new(&Config::default(), Ablation::default());
    for f in 1..=3 {
        t.process_frame(&[det(f, 10.0 * f as f64, 40.0, 0.3)], f).unwrap();
    }
    assert_eq!(t.live_tracks(), 0);

    let mut t = Tracker::new(&Config::default(), Ablation::default());
    for f in 1..=20u32 {
        let conf = if (8..=12).contains(&f) { 0.3 } else { 0.9 };
        let out = t.process_frame(&[det(f, 100.0 + 2.0 * f as f64, 40.0, conf)], f).unwrap();
        if f >= 3 {
            assert_eq!(out.len(), 1, "frame {f}");
        }
    }
    assert_eq!(t.stats().tracks_created, 1);
}

#[test]
fn detections_below_the_floor_are_ignored() {
    let mut t = Tracker::new(&Config::default(), Ablation::default());
    for f in 1..=5 {
        t.process_frame(&[det(f, 60.0, 60.0, 0.05)], f).unwrap();
    }
    assert_eq!(t.stats().tracks_created, 0);
}

#[test]
fn frames_must_increase() {
    let mut t = Tracker::new(&Config::default(), Ablation::default());
    t.process_frame(&[det(5, 10.0, 10.0, 0.9)], 5).unwrap();
    let err = t.process_frame(&[], 5).unwrap_err();
    assert!(matches!(err, Error::FrameOrder { prev: 5, got: 5 }), "{err}");
    let err = t.process_frame(&[], 3).unwrap_err();
    assert!(matches!(err, Error::FrameOrder { .. }));
}

#[test]
fn every_ablation_combination_runs() {
    let sim = SimConfig { n_frames: 120, seed: 4, dropout_prob: 0.1, ..SimConfig::default() };
    let out = generate_sequence(&sim).unwrap();
    for bits in 0..8u8 {
        let ab = Ablation { no_imm: bits & 1 != 0, no_msdc: bits & 2 != 0, no_auf: bits & 4 != 0 };
        let run = track_sequence(&out.det, &Config::default(), ab).unwrap();
        let m = evaluate(&out.gt, &SequenceData::from_results(&run.results), 0.5);
        assert!(m.hota > 0.0 && m.hota <= 1.0, "{ab:?}: {}", m.hota);
    }
}

#[test]
fn single_model_bank_when_imm_is_ablated() {
    let mut t = Tracker::new(&Config::default(), Ablation { no_imm: true, ..Ablation::default() });
    t.process_frame(&[det(1, 10.0, 10.0, 0.9)], 1).unwrap();
    assert_eq!(t.tracks()[0].imm.models.len(), 1);
    let mut t = Tracker::new(&Config::default(), Ablation::default());
    t.process_frame(&[det(1, 10.0, 10.0, 0.9)], 1).unwrap();
    assert_eq!(t.tracks()[0].imm.models.len(), 3);
}

#[test]
fn tracking_is_deterministic() {
    let sim = SimConfig { n_frames: 200, seed: 12, jitter_sigma: 0.05, dropout_prob: 0.1, occlusion_merge: true, ..SimConfig::default() };
    let out = generate_sequence(&sim).unwrap();
    let a = track_sequence(&out.det, &Config::default(), Ablation::default()).unwrap();
    let b = track_sequence(&out.det, &Config::default(), Ablation::default()).unwrap();
    assert_eq!(a.results, b.results);
    assert_eq!(a.stats, b.stats);
}

#[test]
fn stage_split_offers_fewer_first_stage_pairs() {
    let sim = SimConfig { n_frames: 300, seed: 2, regime_weights: [1.0, 1.0, 3.0], ..SimConfig::default() };
    let out = generate_sequence(&sim).unwrap();
    let staged = track_sequence(&out.det, &Config::default(), Ablation::default()).unwrap();
    let flat = track_sequence(&out.det, &Config::default(), Ablation { no_msdc: true, ..Ablation::default() }).unwrap();
    assert!(
        flat.stats.first_stage_candidates >= staged.stats.first_stage_candidates,
        "{} < {}",
        flat.stats.first_stage_candidates,
        staged.stats.first_stage_candidates
    );
}

#[test]
fn partition_covers_live_tracks_exactly_once() {
    let sim = SimConfig { n_frames: 80, seed: 21, dropout_prob: 0.2, ..SimConfig::default() };
    let out = generate_sequence(&sim).unwrap();
    let cfg = Config::default();
    let mut t = Tracker::new(&cfg, Ablation::default());
    for f in 1..=out.det.last_frame() {
        t.process_frame(&out.det.detections(f), f).unwrap();
        let p = classify_tracks(t.tracks(), &cfg.imm);
        let mut all: Vec<usize> = p.stable.iter().chain(&p.maneuvering).chain(&p.lost).copied().collect();
        all.sort_unstable();
        let live: Vec<usize> = (0..t.tracks().len())
            .filter(|&i| t.tracks()[i].status != TrackStatus::Removed)
            .collect();
        assert_eq!(all, live, "frame {f}");
        for &i in &p.lost {
            assert_eq!(t.tracks()[i].status, TrackStatus::Lost);
        }
    }
}

#[test]
fn output_boxes_are_valid_and_ids_unique_per_frame() {
    let sim = SimConfig { n_frames: 150, seed: 30, jitter_sigma: 0.1, occlusion_merge: true, ..SimConfig::default() };
    let out = generate_sequence(&sim).unwrap();
    let run = track_sequence(&out.det, &Config::default(), Ablation::default()).unwrap();
    let res = SequenceData::from_results(&run.results);
    for recs in res.frames.values() {
        let unique: BTreeSet<i64> = recs.iter().map(|r: &Record| r.id).collect();
        assert_eq!(unique.len(), recs.len());
        assert!(recs.iter().all(|r| r.bbox.is_valid()));
    }
}
