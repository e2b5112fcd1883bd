//! Browser bindings for the tracker demo page in `www/`.
//!
//! Three operations are exported: run a seeded simulation through the tracker
//! ([`Demo`]), sample the adaptive fusion weight ([`alpha_curve`]), and roll out
//! the three motion models from one state ([`model_rollout`]). Frame data
//! crosses the boundary as flat `f64` arrays, five numbers per box:
//! `id, x, y, w, h`.

use arttrack::association::AufConfig;
use arttrack::motion::{transition, ModelId, StateVector, AY, CX, CY, H, OMEGA, VX, W};
use arttrack::{
    evaluate, generate_sequence, track_sequence, Ablation, Config, SequenceData, SequenceMetrics,
    SimConfig,
};
use wasm_bindgen::prelude::*;

/// A simulated sequence together with its tracking result.
#[wasm_bindgen]
pub struct Demo {
    gt: SequenceData,
    det: SequenceData,
    tracks: SequenceData,
    metrics: SequenceMetrics,
    arena: (f64, f64),
}

/// Settings the page can change. Everything else uses library defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemoParams {
    pub seed: u64,
    pub n_targets: u32,
    pub n_frames: u32,
    pub jitter: f64,
    pub dropout: f64,
    pub merge: bool,
    pub ablation: Ablation,
}

impl Default for DemoParams {
    fn default() -> Self {
        Self {
            seed: 0,
            n_targets: 10,
            n_frames: 300,
            jitter: 0.05,
            dropout: 0.1,
            merge: false,
            ablation: Ablation::default(),
        }
    }
}

impl Demo {
    pub fn run(p: &DemoParams) -> arttrack::Result<Demo> {
        let sim = SimConfig {
            seed: p.seed,
            n_targets: p.n_targets,
            n_frames: p.n_frames,
            jitter_sigma: p.jitter,
            dropout_prob: p.dropout,
            occlusion_merge: p.merge,
            ..SimConfig::default()
        };
        let out = generate_sequence(&sim)?;
        let run = track_sequence(&out.det, &Config::default(), p.ablation)?;
        let mut tracks = SequenceData::from_results(&run.results);
        tracks.meta.frame_count = p.n_frames;
        let metrics = evaluate(&out.gt, &tracks, 0.5);
        Ok(Demo {
            gt: out.gt,
            det: out.det,
            tracks,
            metrics,
            arena: (sim.arena_width, sim.arena_height),
        })
    }

    pub fn metrics(&self) -> &SequenceMetrics {
        &self.metrics
    }
}

fn flatten(data: &SequenceData, frame: u32) -> Vec<f64> {
    data.records(frame)
        .iter()
        .flat_map(|r| [r.id as f64, r.bbox.x, r.bbox.y, r.bbox.w, r.bbox.h])
        .collect()
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        seed: u32,
        n_targets: u32,
        n_frames: u32,
        jitter: f64,
        dropout: f64,
        merge: bool,
        no_imm: bool,
        no_msdc: bool,
        no_auf: bool,
    ) -> Result<Demo, JsError> {
        let p = DemoParams {
            seed: seed as u64,
            n_targets,
            n_frames,
            jitter,
            dropout,
            merge,
            ablation: Ablation { no_imm, no_msdc, no_auf },
        };
        Demo::run(&p).map_err(|e| JsError::new(&e.to_string()))
    }

    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> u32 {
        self.gt.last_frame()
    }

    #[wasm_bindgen(getter)]
    pub fn width(&self) -> f64 {
        self.arena.0
    }

    #[wasm_bindgen(getter)]
    pub fn height(&self) -> f64 {
        self.arena.1
    }

    pub fn truth(&self, frame: u32) -> Vec<f64> {
        flatten(&self.gt, frame)
    }

    /// Detection boxes; the id slot is always -1.
    pub fn detections(&self, frame: u32) -> Vec<f64> {
        flatten(&self.det, frame)
    }

    pub fn tracks(&self, frame: u32) -> Vec<f64> {
        flatten(&self.tracks, frame)
    }

    /// `[hota, assa, deta, idf1, mota, ids, fp, fn]`; MOTA is NaN without ground truth.
    pub fn summary(&self) -> Vec<f64> {
        let m = &self.metrics;
        vec![
            m.hota,
            m.assa,
            m.deta,
            m.idf1,
            m.mota.unwrap_or(f64::NAN),
            m.ids as f64,
            m.fp as f64,
            m.fn_ as f64,
        ]
    }
}

/// Spatial weight of the fused cost at `samples` evenly spaced uncertainties
/// in `[0, u_max]`, as `u, alpha` pairs.
#[wasm_bindgen]
pub fn alpha_curve(alpha_min: f64, alpha_max: f64, u_ref: f64, u_max: f64, samples: u32) -> Vec<f64> {
    let cfg = AufConfig {
        alpha_min,
        alpha_max,
        u_ref,
        ..AufConfig::default()
    };
    let n = samples.max(2);
    (0..n)
        .flat_map(|i| {
            let u = u_max * i as f64 / (n - 1) as f64;
            [u, cfg.alpha(u)]
        })
        .collect()
}

/// Centers of a target rolled forward `steps` frames under CV, CA and CT from the
/// same start (speed along +x, lateral acceleration `accel`, turn rate `omega`).
/// Layout: all CV points, then CA, then CT, each as `x, y` pairs including the start.
#[wasm_bindgen]
pub fn model_rollout(speed: f64, accel: f64, omega: f64, steps: u32) -> Vec<f64> {
    let mut start = StateVector::zeros();
    start[VX] = speed;
    start[AY] = accel;
    start[OMEGA] = omega;
    start[W] = 20.0;
    start[H] = 20.0;
    let mut out = Vec::with_capacity(3 * 2 * (steps as usize + 1));
    for model in ModelId::ALL {
        let mut s = start;
        out.extend([s[CX], s[CY]]);
        for _ in 0..steps {
            s = transition(model, &s, 1.0);
            out.extend([s[CX], s[CY]]);
        }
    }
    out
}
