//! Deterministic synthetic sequences: regime-switching targets in a closed
//! arena, plus degraded detections derived from the ground truth.
//!
//! Ground truth draws from `SplitMix64::new(seed)`; degradation draws from
//! `SplitMix64::new(seed ^ DEGRADE_STREAM)`. Per frame, targets are stepped in
//! id order and each target consumes its random numbers in a fixed order, so
//! ports that follow the same order reproduce every fixture.

use std::io::Write;

use crate::config::{parse_bool, parse_f64, parse_pairs, parse_u32, parse_u64};
use crate::error::{Error, Result};
use crate::geometry::{iou, BoundingBox};
use crate::io::{Record, SequenceData};
use crate::motion::{transition, ModelId, StateVector, AX, AY, CX, CY, H, OMEGA, VX, VY, W};
use crate::rng::SplitMix64;

pub const DEGRADE_STREAM: u64 = 0xD1B5_4A32_D192_ED03;
const PLACEMENT_ATTEMPTS: usize = 1000;
const MERGE_IOU: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_targets: u32,
    pub n_frames: u32,
    pub arena_width: f64,
    pub arena_height: f64,
    /// Mean frames spent in one regime before a redraw.
    pub regime_dwell: f64,
    /// Regime weights in CV, CA, CT order.
    pub regime_weights: [f64; 3],
    pub speed_min: f64,
    pub speed_max: f64,
    pub turn_rate_min: f64,
    pub turn_rate_max: f64,
    /// Largest acceleration magnitude drawn for CA spells, px/frame².
    pub accel_max: f64,
    pub box_min: f64,
    pub box_max: f64,
    /// Velocity perturbation per frame, px/frame.
    pub process_noise: f64,
    pub seed: u64,
    /// Jitter standard deviation relative to box size.
    pub jitter_sigma: f64,
    pub dropout_prob: f64,
    pub occlusion_merge: bool,
    pub conf_mean: f64,
    pub conf_spread: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_targets: 10,
            n_frames: 500,
            arena_width: 1280.0,
            arena_height: 720.0,
            regime_dwell: 40.0,
            regime_weights: [1.0, 1.0, 1.0],
            speed_min: 1.0,
            speed_max: 3.0,
            turn_rate_min: 0.05,
            turn_rate_max: 0.2,
            accel_max: 0.3,
            box_min: 15.0,
            box_max: 40.0,
            process_noise: 0.05,
            seed: 0,
            jitter_sigma: 0.05,
            dropout_prob: 0.0,
            occlusion_merge: false,
            conf_mean: 0.9,
            conf_spread: 0.05,
        }
    }
}

impl SimConfig {
    /// No jitter, dropout or merging: detections equal ground-truth boxes.
    pub fn oracle(mut self) -> Self {
        self.jitter_sigma = 0.0;
        self.dropout_prob = 0.0;
        self.occlusion_merge = false;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::config(key, msg))
            }
        };
        check(self.arena_width > 0.0, "arena_width", "must be positive")?;
        check(self.arena_height > 0.0, "arena_height", "must be positive")?;
        check(self.regime_dwell >= 1.0, "regime_dwell", "must be at least 1")?;
        check(
            self.regime_weights.iter().all(|&w| w >= 0.0) && self.regime_weights.iter().sum::<f64>() > 0.0,
            "weight_cv",
            "regime weights must be non-negative with a positive sum",
        )?;
        check(
            0.0 <= self.speed_min && self.speed_min <= self.speed_max,
            "speed_min",
            "need 0 <= speed_min <= speed_max",
        )?;
        check(
            0.0 <= self.turn_rate_min && self.turn_rate_min <= self.turn_rate_max,
            "turn_rate_min",
            "need 0 <= turn_rate_min <= turn_rate_max",
        )?;
        check(self.accel_max >= 0.0, "accel_max", "must be non-negative")?;
        check(
            1.0 <= self.box_min && self.box_min <= self.box_max,
            "box_min",
            "need 1 <= box_min <= box_max",
        )?;
        check(
            self.box_max < self.arena_width && self.box_max < self.arena_height,
            "box_max",
            "boxes must fit inside the arena",
        )?;
        check(self.process_noise >= 0.0, "process_noise", "must be non-negative")?;
        check(self.jitter_sigma >= 0.0, "jitter_sigma", "must be non-negative")?;
        check(
            (0.0..=1.0).contains(&self.dropout_prob),
            "dropout_prob",
            "must lie in [0, 1]",
        )?;
        check(
            (0.0..=1.0).contains(&self.conf_mean) && self.conf_spread >= 0.0,
            "conf_mean",
            "conf_mean must lie in [0, 1] and conf_spread be non-negative",
        )?;
        Ok(())
    }
}

/// Parses simulation settings from flat `key = value` text.
pub fn load_sim_config(text: &str) -> Result<SimConfig> {
    let mut c = SimConfig::default();
    for (_, key, v) in parse_pairs(text)? {
        let k = key.as_str();
        let f = || parse_f64(k, &v);
        match k {
            "n_targets" => c.n_targets = parse_u32(k, &v)?,
            "n_frames" => c.n_frames = parse_u32(k, &v)?,
            "arena_width" => c.arena_width = f()?,
            "arena_height" => c.arena_height = f()?,
            "regime_dwell" => c.regime_dwell = f()?,
            "weight_cv" => c.regime_weights[0] = f()?,
            "weight_ca" => c.regime_weights[1] = f()?,
            "weight_ct" => c.regime_weights[2] = f()?,
            "speed_min" => c.speed_min = f()?,
            "speed_max" => c.speed_max = f()?,
            "turn_rate_min" => c.turn_rate_min = f()?,
            "turn_rate_max" => c.turn_rate_max = f()?,
            "accel_max" => c.accel_max = f()?,
            "box_min" => c.box_min = f()?,
            "box_max" => c.box_max = f()?,
            "process_noise" => c.process_noise = f()?,
            "seed" => c.seed = parse_u64(k, &v)?,
            "jitter_sigma" => c.jitter_sigma = f()?,
            "dropout_prob" => c.dropout_prob = f()?,
            "occlusion_merge" => c.occlusion_merge = parse_bool(k, &v)?,
            "conf_mean" => c.conf_mean = f()?,
            "conf_spread" => c.conf_spread = f()?,
            _ => return Err(Error::config(k, "unknown key")),
        }
    }
    c.validate()?;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegimeEntry {
    pub frame: u32,
    pub target: u32,
    pub regime: ModelId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub gt: SequenceData,
    pub det: SequenceData,
    pub regimes: Vec<RegimeEntry>,
}

struct Target {
    state: StateVector,
    regime: ModelId,
}

fn speed_of(s: &StateVector) -> f64 {
    s[VX].hypot(s[VY])
}

fn enter_regime(t: &mut Target, regime: ModelId, cfg: &SimConfig, rng: &mut SplitMix64) {
    // Three draws regardless of regime keep the stream layout fixed.
    let a = rng.uniform();
    let b = rng.uniform();
    let sign = if rng.uniform() < 0.5 { -1.0 } else { 1.0 };
    t.regime = regime;
    t.state[AX] = 0.0;
    t.state[AY] = 0.0;
    t.state[OMEGA] = 0.0;
    match regime {
        ModelId::Cv => {}
        ModelId::Ca => {
            let mag = cfg.accel_max * a;
            let heading = t.state[VY].atan2(t.state[VX]) + (b - 0.5) * std::f64::consts::PI;
            t.state[AX] = sign * mag * heading.cos();
            t.state[AY] = sign * mag * heading.sin();
        }
        ModelId::Ct => {
            t.state[OMEGA] = sign * (cfg.turn_rate_min + (cfg.turn_rate_max - cfg.turn_rate_min) * a);
        }
    }
}

fn reflect(pos: &mut f64, vel: &mut f64, acc: &mut f64, half: f64, extent: f64) -> bool {
    let (lo, hi) = (half, extent - half);
    let mut hit = false;
    if *pos < lo {
        *pos = 2.0 * lo - *pos;
        hit = true;
    } else if *pos > hi {
        *pos = 2.0 * hi - *pos;
        hit = true;
    }
    if hit {
        *pos = pos.clamp(lo, hi);
        *vel = -*vel;
        *acc = -*acc;
    }
    hit
}

fn place_targets(cfg: &SimConfig, rng: &mut SplitMix64) -> Result<Vec<Target>> {
    let mut targets: Vec<Target> = Vec::with_capacity(cfg.n_targets as usize);
    let mut attempts = 0;
    while targets.len() < cfg.n_targets as usize {
        attempts += 1;
        if attempts > PLACEMENT_ATTEMPTS {
            return Err(Error::Sim(format!(
                "could not place {} non-overlapping targets in a {}x{} arena after {PLACEMENT_ATTEMPTS} attempts",
                cfg.n_targets, cfg.arena_width, cfg.arena_height
            )));
        }
        let w = rng.range(cfg.box_min, cfg.box_max);
        let h = rng.range(cfg.box_min, cfg.box_max);
        let cx = rng.range(w / 2.0, cfg.arena_width - w / 2.0);
        let cy = rng.range(h / 2.0, cfg.arena_height - h / 2.0);
        let speed = rng.range(cfg.speed_min, cfg.speed_max);
        let heading = rng.range(0.0, 2.0 * std::f64::consts::PI);
        let candidate = BoundingBox::from_center(cx, cy, w, h);
        let clear = targets.iter().all(|t| {
            let b = BoundingBox::from_center(t.state[CX], t.state[CY], t.state[W], t.state[H]);
            iou(&b, &candidate) == 0.0
        });
        if !clear {
            continue;
        }
        let mut s = StateVector::zeros();
        s[CX] = cx;
        s[CY] = cy;
        s[VX] = speed * heading.cos();
        s[VY] = speed * heading.sin();
        s[W] = w;
        s[H] = h;
        let mut t = Target {
            state: s,
            regime: ModelId::Cv,
        };
        let regime = ModelId::ALL[rng.weighted(&cfg.regime_weights)];
        enter_regime(&mut t, regime, cfg, rng);
        targets.push(t);
    }
    Ok(targets)
}

fn gt_record(id: u32, s: &StateVector) -> Record {
    Record {
        id: id as i64,
        bbox: BoundingBox::from_center(s[CX], s[CY], s[W], s[H]),
        confidence: 1.0,
    }
}

pub fn generate_sequence(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let mut rng = SplitMix64::new(cfg.seed);
    let mut targets = place_targets(cfg, &mut rng)?;
    let mut gt = SequenceData::default();
    gt.meta.name = format!("synth-{}", cfg.seed);
    gt.meta.frame_count = cfg.n_frames;
    gt.meta.image_width = Some(cfg.arena_width.round() as u32);
    gt.meta.image_height = Some(cfg.arena_height.round() as u32);
    let mut regimes = Vec::new();
    let switch_prob = 1.0 / cfg.regime_dwell;
    let (vmin, vmax) = (0.5 * cfg.speed_min, 1.5 * cfg.speed_max.max(1e-9));

    for frame in 1..=cfg.n_frames {
        for (k, t) in targets.iter_mut().enumerate() {
            let id = k as u32 + 1;
            if frame > 1 {
                let switch = rng.uniform() < switch_prob;
                let next = ModelId::ALL[rng.weighted(&cfg.regime_weights)];
                if switch {
                    enter_regime(t, next, cfg, &mut rng);
                }
                let mut s = transition(t.regime, &t.state, 1.0);
                s[VX] += cfg.process_noise * rng.normal();
                s[VY] += cfg.process_noise * rng.normal();
                // CA spells keep speed inside a band around the configured range.
                let speed = speed_of(&s);
                if t.regime == ModelId::Ca && (speed > vmax || speed < vmin) && speed > 0.0 {
                    let target = speed.clamp(vmin, vmax);
                    s[VX] *= target / speed;
                    s[VY] *= target / speed;
                    s[AX] = -s[AX];
                    s[AY] = -s[AY];
                }
                let (hw, hh) = (s[W] / 2.0, s[H] / 2.0);
                let (mut cx, mut vx, mut ax) = (s[CX], s[VX], s[AX]);
                let (mut cy, mut vy, mut ay) = (s[CY], s[VY], s[AY]);
                let hx = reflect(&mut cx, &mut vx, &mut ax, hw, cfg.arena_width);
                let hy = reflect(&mut cy, &mut vy, &mut ay, hh, cfg.arena_height);
                s[CX] = cx;
                s[VX] = vx;
                s[AX] = ax;
                s[CY] = cy;
                s[VY] = vy;
                s[AY] = ay;
                // A mirror flips the sense of rotation.
                if hx != hy {
                    s[OMEGA] = -s[OMEGA];
                }
                t.state = s;
            }
            gt.push(frame, gt_record(id, &t.state));
            regimes.push(RegimeEntry {
                frame,
                target: id,
                regime: t.regime,
            });
        }
    }
    let det = degrade_detections(&gt, cfg);
    Ok(SimOutput { gt, det, regimes })
}

/// Jitter, dropout and optional merging of overlapping boxes; ids stripped.
/// Surviving detections keep the ground-truth order within each frame.
pub fn degrade_detections(gt: &SequenceData, cfg: &SimConfig) -> SequenceData {
    let mut rng = SplitMix64::new(cfg.seed ^ DEGRADE_STREAM);
    let mut out = SequenceData {
        meta: gt.meta.clone(),
        ..SequenceData::default()
    };
    for (&frame, recs) in &gt.frames {
        let mut merged = vec![false; recs.len()];
        if cfg.occlusion_merge {
            for i in 0..recs.len() {
                for j in (i + 1)..recs.len() {
                    if !merged[i] && !merged[j] && iou(&recs[i].bbox, &recs[j].bbox) > MERGE_IOU {
                        merged[j] = true;
                    }
                }
            }
        }
        let mut kept = Vec::new();
        for (r, &gone) in recs.iter().zip(&merged) {
            let drop = rng.uniform();
            let (n1, n2, n3, n4) = (rng.normal(), rng.normal(), rng.normal(), rng.normal());
            let conf_u = rng.uniform();
            if gone || drop < cfg.dropout_prob {
                continue;
            }
            let b = r.bbox;
            let (cx, cy) = b.center();
            let sig = cfg.jitter_sigma;
            let bbox = if sig == 0.0 {
                b
            } else {
                BoundingBox::from_center(
                    cx + sig * b.w * n1,
                    cy + sig * b.h * n2,
                    (b.w * (1.0 + sig * n3)).max(1.0),
                    (b.h * (1.0 + sig * n4)).max(1.0),
                )
            };
            let confidence = (cfg.conf_mean + cfg.conf_spread * (2.0 * conf_u - 1.0)).clamp(0.0, 1.0);
            kept.push(Record {
                id: -1,
                bbox,
                confidence,
            });
        }
        out.frames.insert(frame, kept);
    }
    out
}

pub fn write_regime_log(regimes: &[RegimeEntry], out: &mut impl Write) -> Result<()> {
    writeln!(out, "frame,target,regime")?;
    for r in regimes {
        writeln!(out, "{},{},{}", r.frame, r.target, r.regime)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_output() {
        let cfg = SimConfig {
            n_frames: 100,
            seed: 11,
            dropout_prob: 0.1,
            occlusion_merge: true,
            ..SimConfig::default()
        };
        assert_eq!(generate_sequence(&cfg).unwrap(), generate_sequence(&cfg).unwrap());
        let other = SimConfig { seed: 12, ..cfg.clone() };
        assert_ne!(generate_sequence(&cfg).unwrap().gt, generate_sequence(&other).unwrap().gt);
    }

    #[test]
    fn pure_cv_without_noise_moves_straight() {
        let cfg = SimConfig {
            n_targets: 1,
            n_frames: 400,
            regime_weights: [1.0, 0.0, 0.0],
            process_noise: 0.0,
            seed: 5,
            ..SimConfig::default()
        };
        let out = generate_sequence(&cfg).unwrap();
        let centers: Vec<(f64, f64)> = (1..=400).map(|f| out.gt.records(f)[0].bbox.center()).collect();
        let mut bounces = 0;
        for w in centers.windows(3) {
            let d1 = (w[1].0 - w[0].0, w[1].1 - w[0].1);
            let d2 = (w[2].0 - w[1].0, w[2].1 - w[1].1);
            let same = (d1.0 - d2.0).abs() < 1e-9 && (d1.1 - d2.1).abs() < 1e-9;
            if !same {
                bounces += 1;
                // reflection: one component keeps magnitude
                assert!((d1.0.abs() - d2.0.abs()).abs() < 1e-6 || (d1.1.abs() - d2.1.abs()).abs() < 1e-6);
            }
        }
        assert!(bounces < 40, "{bounces}");
        assert!(out.regimes.iter().all(|r| r.regime == ModelId::Cv));
    }

    #[test]
    fn boxes_stay_in_arena() {
        let cfg = SimConfig {
            n_frames: 300,
            seed: 3,
            speed_max: 15.0,
            ..SimConfig::default()
        };
        let out = generate_sequence(&cfg).unwrap();
        for r in out.gt.frames.values().flatten() {
            let b = r.bbox;
            assert!(b.x >= -1e-9 && b.y >= -1e-9);
            assert!(b.x + b.w <= cfg.arena_width + 1e-9 && b.y + b.h <= cfg.arena_height + 1e-9);
        }
    }

    #[test]
    fn crowded_arena_fails_placement() {
        let cfg = SimConfig {
            n_targets: 50,
            arena_width: 100.0,
            arena_height: 100.0,
            box_min: 30.0,
            box_max: 40.0,
            ..SimConfig::default()
        };
        assert!(matches!(generate_sequence(&cfg), Err(Error::Sim(_))));
    }

    #[test]
    fn oracle_detections_equal_gt() {
        let cfg = SimConfig {
            n_frames: 50,
            seed: 8,
            ..SimConfig::default()
        }
        .oracle();
        let out = generate_sequence(&cfg).unwrap();
        for (f, recs) in &out.gt.frames {
            let boxes: Vec<_> = recs.iter().map(|r| r.bbox).collect();
            let dets: Vec<_> = out.det.records(*f).iter().map(|r| r.bbox).collect();
            assert_eq!(boxes, dets);
        }
        assert!(out.det.frames.values().flatten().all(|r| r.id == -1 && r.confidence >= 0.85));
    }

    #[test]
    fn total_dropout_is_empty() {
        let cfg = SimConfig {
            n_frames: 30,
            dropout_prob: 1.0,
            ..SimConfig::default()
        };
        let out = generate_sequence(&cfg).unwrap();
        assert!(out.det.is_empty());
    }

    #[test]
    fn dropout_rate_is_binomial() {
        let cfg = SimConfig {
            n_targets: 10,
            n_frames: 100,
            dropout_prob: 0.2,
            seed: 21,
            ..SimConfig::default()
        };
        let out = generate_sequence(&cfg).unwrap();
        assert_eq!(out.gt.len(), 1000);
        let kept = out.det.len() as f64;
        let sd = (1000.0f64 * 0.2 * 0.8).sqrt();
        assert!((kept - 800.0).abs() <= 3.0 * sd, "kept {kept}");
    }

    #[test]
    fn merge_drops_overlaps() {
        let mut gt = SequenceData::default();
        let b = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        gt.push(1, Record { id: 1, bbox: b, confidence: 1.0 });
        gt.push(1, Record { id: 2, bbox: BoundingBox::new(1.0, 0.0, 10.0, 10.0), confidence: 1.0 });
        gt.push(1, Record { id: 3, bbox: BoundingBox::new(50.0, 0.0, 10.0, 10.0), confidence: 1.0 });
        let cfg = SimConfig {
            occlusion_merge: true,
            ..SimConfig::default()
        }
        .oracle();
        let cfg = SimConfig { occlusion_merge: true, ..cfg };
        let det = degrade_detections(&gt, &cfg);
        assert_eq!(det.records(1).len(), 2);
    }

    #[test]
    fn sim_config_parsing() {
        let c = load_sim_config("n_targets = 3\nweight_ct = 4\nocclusion_merge = on\n").unwrap();
        assert_eq!(c.n_targets, 3);
        assert_eq!(c.regime_weights, [1.0, 1.0, 4.0]);
        assert!(c.occlusion_merge);
        assert!(load_sim_config("bogus = 1").is_err());
        assert!(load_sim_config("dropout_prob = 1.5").is_err());
    }

    #[test]
    fn regime_log_format() {
        let mut buf = Vec::new();
        write_regime_log(
            &[RegimeEntry { frame: 1, target: 2, regime: ModelId::Ct }],
            &mut buf,
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "frame,target,regime\n1,2,CT\n");
    }
}
