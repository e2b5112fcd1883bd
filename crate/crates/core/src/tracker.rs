//! Cascaded multi-object tracker.
//!
//! Each frame runs up to four assignment stages in fixed order: stable tracks,
//! maneuvering tracks, lost tracks, then every leftover track against the
//! low-confidence detections.

use std::collections::VecDeque;

use log::warn;

use crate::association::{
    fuse, gate, solve_assignment, AufConfig, CostMatrix, MotionGate, StageGates, StageId,
};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::geometry::{box_to_measurement, iou, BoundingBox, Detection};
use crate::imm::{maneuver_score, FilterParams, ImmConfig, ImmState};
use crate::io::SequenceData;
use crate::motion::{state_from_measurement, state_box, ModelId, StateCov, AX, AY, CX, CY, H, OMEGA, VX, VY, W};
use crate::ukf::{predict_measurement, Gaussian};

// Initial standard deviations of a new track, as fractions of the box extent
// (position, velocity, acceleration, size) or absolute (turn rate).
const INIT_POS_FRAC: f64 = 0.1;
const INIT_VEL_FRAC: f64 = 0.5;
const INIT_ACC_FRAC: f64 = 0.05;
const INIT_SIZE_FRAC: f64 = 0.1;
const INIT_OMEGA_STD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Lost,
    Removed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackerConfig {
    pub n_init: u32,
    pub max_age_lost: u32,
    pub det_conf_min: f64,
    pub det_conf_high: f64,
    pub gates: StageGates,
    pub low_conf_stage: bool,
    /// Pairs costing more than this are dropped after assignment.
    pub max_match_cost: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            n_init: 3,
            max_age_lost: 30,
            det_conf_min: 0.1,
            det_conf_high: 0.5,
            gates: StageGates::default(),
            low_conf_stage: true,
            max_match_cost: 1.0,
        }
    }
}

/// Component switches reproducing the ablation rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Ablation {
    /// Single CV UKF instead of the three-model bank.
    pub no_imm: bool,
    /// One association stage over all tracks with the maneuver-stage gate.
    pub no_msdc: bool,
    /// Fixed spatial weight 0.5 and unit motion-state factor.
    pub no_auf: bool,
}

impl Ablation {
    pub fn baseline() -> Self {
        Self {
            no_imm: true,
            no_msdc: true,
            no_auf: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: u64,
    pub status: TrackStatus,
    pub imm: ImmState,
    pub hits: u32,
    pub misses: u32,
    pub age: u32,
    /// Model probabilities after each of the last few frames, oldest first.
    pub mu_history: VecDeque<Vec<f64>>,
    pub last_box: BoundingBox,
    warned_singular: bool,
}

impl Track {
    pub fn cv_history(&self) -> Vec<f64> {
        let cv = self.imm.models.iter().position(|&m| m == ModelId::Cv);
        self.mu_history
            .iter()
            .map(|mu| cv.map_or(0.0, |i| mu[i]))
            .collect()
    }

    pub fn is_stable(&self, imm_cfg: &ImmConfig) -> bool {
        maneuver_score(&self.cv_history(), imm_cfg.stability_window, imm_cfg.theta_stable).is_stable
    }

    fn push_mu(&mut self, window: usize) {
        self.mu_history.push_back(self.imm.mu.iter().copied().collect());
        while self.mu_history.len() > window.max(1) {
            self.mu_history.pop_front();
        }
    }
}

/// Indices into a track list, bucketed by motion state.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Partition {
    pub stable: Vec<usize>,
    pub maneuvering: Vec<usize>,
    pub lost: Vec<usize>,
}

/// Lost status dominates; other live tracks split on the stability flag.
pub fn classify_tracks(tracks: &[Track], imm_cfg: &ImmConfig) -> Partition {
    let mut p = Partition::default();
    for (i, t) in tracks.iter().enumerate() {
        match t.status {
            TrackStatus::Removed => {}
            TrackStatus::Lost => p.lost.push(i),
            TrackStatus::Tentative | TrackStatus::Confirmed => {
                if t.is_stable(imm_cfg) {
                    p.stable.push(i)
                } else {
                    p.maneuvering.push(i)
                }
            }
        }
    }
    p
}

/// One reported box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackOutput {
    pub frame: u32,
    pub id: u64,
    pub bbox: BoundingBox,
}

/// Counters for inspection and the run summary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrackerStats {
    pub frames: u64,
    pub tracks_created: u64,
    pub tracks_removed: u64,
    /// Track x detection pairs offered to the first assignment of each frame.
    pub first_stage_candidates: u64,
    pub matches: u64,
}

struct Predicted {
    gate: MotionGate,
    bbox: BoundingBox,
    uncertainty: f64,
    stable: bool,
}

#[derive(Clone)]
pub struct Tracker {
    cfg: TrackerConfig,
    imm_cfg: ImmConfig,
    auf: AufConfig,
    filter: FilterParams,
    ablation: Ablation,
    tracks: Vec<Track>,
    next_id: u64,
    last_frame: Option<u32>,
    stats: TrackerStats,
}

impl Tracker {
    pub fn new(config: &Config, ablation: Ablation) -> Self {
        Self {
            cfg: config.tracker,
            imm_cfg: config.imm.clone(),
            auf: if ablation.no_auf {
                AufConfig {
                    gate_chi2: config.auf.gate_chi2,
                    ..AufConfig::fixed()
                }
            } else {
                config.auf
            },
            filter: config.filter,
            ablation,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            stats: TrackerStats::default(),
        }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn stats(&self) -> TrackerStats {
        self.stats
    }

    pub fn live_tracks(&self) -> usize {
        self.tracks.len()
    }

    /// Advances one frame and returns the confirmed tracks matched in it.
    pub fn process_frame(&mut self, detections: &[Detection], frame: u32) -> Result<Vec<TrackOutput>> {
        let gap = match self.last_frame {
            Some(prev) if frame <= prev => return Err(Error::FrameOrder { prev, got: frame }),
            Some(prev) => frame - prev,
            None => 1,
        };
        self.last_frame = Some(frame);
        self.stats.frames += 1;
        let mut params = self.filter;
        params.dt *= gap as f64;

        let predicted = self.predict_all(&params)?;

        let mut high = Vec::new();
        let mut low = Vec::new();
        for (j, d) in detections.iter().enumerate() {
            if d.confidence >= self.cfg.det_conf_high {
                high.push(j);
            } else if d.confidence >= self.cfg.det_conf_min {
                low.push(j);
            }
        }

        let mut det_taken = vec![false; detections.len()];
        let mut track_match: Vec<Option<usize>> = vec![None; self.tracks.len()];
        let all: Vec<usize> = (0..self.tracks.len()).collect();

        let mut plan: Vec<(StageId, Vec<usize>, &[usize])> = Vec::new();
        if self.ablation.no_msdc {
            plan.push((StageId::Maneuver, all.clone(), &high));
        } else {
            // Tentative tracks wait until lost tracks have had their chance,
            // then take the maneuver-stage gate.
            let part = classify_tracks(&self.tracks, &self.imm_cfg);
            let tentative = |i: &usize| self.tracks[*i].status == TrackStatus::Tentative;
            let (stable_new, stable): (Vec<usize>, Vec<usize>) = part.stable.into_iter().partition(tentative);
            let (maneuver_new, maneuvering): (Vec<usize>, Vec<usize>) =
                part.maneuvering.into_iter().partition(tentative);
            let mut fresh: Vec<usize> = stable_new.into_iter().chain(maneuver_new).collect();
            fresh.sort_unstable();
            plan.push((StageId::Stable, stable, &high));
            plan.push((StageId::Maneuver, maneuvering, &high));
            plan.push((StageId::Lost, part.lost, &high));
            plan.push((StageId::Maneuver, fresh, &high));
        }
        if self.cfg.low_conf_stage {
            plan.push((StageId::LowConf, all, &low));
        }
        for (k, (stage, rows, pool)) in plan.iter().enumerate() {
            let offered = self.run_stage(
                *stage,
                rows,
                pool,
                &predicted,
                detections,
                &mut det_taken,
                &mut track_match,
            );
            if k == 0 {
                self.stats.first_stage_candidates += offered;
            }
        }

        let mut outputs = Vec::new();
        let window = self.imm_cfg.stability_window;
        for (t, m) in self.tracks.iter_mut().zip(&track_match) {
            t.age += 1;
            match m {
                Some(j) => {
                    let z = box_to_measurement(&detections[*j].bbox);
                    t.imm
                        .correct(&z, &params, &self.imm_cfg)
                        .map_err(|e| e.with_track(t.id))?;
                    t.hits += 1;
                    t.misses = 0;
                    t.last_box = state_box(&t.imm.combined.mean);
                    t.status = match t.status {
                        TrackStatus::Tentative if t.hits >= self.cfg.n_init => TrackStatus::Confirmed,
                        TrackStatus::Lost => TrackStatus::Confirmed,
                        s => s,
                    };
                    self.stats.matches += 1;
                    if t.status == TrackStatus::Confirmed {
                        outputs.push(TrackOutput {
                            frame,
                            id: t.id,
                            bbox: t.last_box,
                        });
                    }
                }
                None => {
                    t.misses += 1;
                    t.hits = 0;
                    t.status = match t.status {
                        TrackStatus::Tentative => TrackStatus::Removed,
                        TrackStatus::Confirmed => TrackStatus::Lost,
                        TrackStatus::Lost if t.misses > self.cfg.max_age_lost => TrackStatus::Removed,
                        s => s,
                    };
                }
            }
            t.push_mu(window);
        }
        let before = self.tracks.len();
        self.tracks.retain(|t| t.status != TrackStatus::Removed);
        self.stats.tracks_removed += (before - self.tracks.len()) as u64;

        for &j in &high {
            if !det_taken[j] {
                if let Some(out) = self.spawn(&detections[j], frame) {
                    outputs.push(out);
                }
            }
        }
        outputs.sort_by_key(|o| o.id);
        Ok(outputs)
    }

    fn predict_all(&mut self, params: &FilterParams) -> Result<Vec<Predicted>> {
        let mut out = Vec::with_capacity(self.tracks.len());
        for t in self.tracks.iter_mut() {
            t.imm.predict(params).map_err(|e| e.with_track(t.id))?;
            let (_, s) = predict_measurement(&t.imm.combined, &params.r, &params.ut)
                .map_err(|e| e.with_track(t.id))?;
            let gate = MotionGate::new(&t.imm.combined, &s);
            if gate.is_singular() && !t.warned_singular {
                warn!("track {}: singular innovation covariance, motion gate closed", t.id);
                t.warned_singular = true;
            }
            out.push(Predicted {
                gate,
                bbox: state_box(&t.imm.combined.mean),
                uncertainty: t.imm.uncertainty,
                stable: t.is_stable(&self.imm_cfg),
            });
        }
        Ok(out)
    }

    /// Solves one stage over still-unmatched tracks and detections and
    /// returns the number of candidate pairs it considered.
    #[allow(clippy::too_many_arguments)]
    fn run_stage(
        &self,
        stage: StageId,
        rows: &[usize],
        pool: &[usize],
        predicted: &[Predicted],
        detections: &[Detection],
        det_taken: &mut [bool],
        track_match: &mut [Option<usize>],
    ) -> u64 {
        let rows: Vec<usize> = rows.iter().copied().filter(|&t| track_match[t].is_none()).collect();
        let cols: Vec<usize> = pool.iter().copied().filter(|&j| !det_taken[j]).collect();
        let offered = (rows.len() * cols.len()) as u64;
        if offered == 0 {
            return 0;
        }
        let costs = self.stage_costs(stage, &rows, &cols, predicted, detections);
        let sol = solve_assignment(&costs, self.cfg.max_match_cost);
        for (r, c) in sol.pairs {
            track_match[rows[r]] = Some(cols[c]);
            det_taken[cols[c]] = true;
        }
        offered
    }

    fn stage_costs(
        &self,
        stage: StageId,
        rows: &[usize],
        cols: &[usize],
        predicted: &[Predicted],
        detections: &[Detection],
    ) -> CostMatrix {
        CostMatrix::from_fn(rows.len(), cols.len(), |r, c| {
            let p = &predicted[rows[r]];
            let det = &detections[cols[c]];
            let overlap = iou(&p.bbox, &det.bbox);
            let mc = p.gate.cost(det, &self.auf);
            if gate(mc.d2, overlap, stage, &self.auf, &self.cfg.gates) {
                fuse(overlap, mc.cost, p.uncertainty, p.stable, &self.auf)
            } else {
                f64::INFINITY
            }
        })
    }

    fn spawn(&mut self, det: &Detection, frame: u32) -> Option<TrackOutput> {
        let z = box_to_measurement(&det.bbox);
        let initial = initial_gaussian(&state_from_measurement(&z));
        let imm = if self.ablation.no_imm {
            ImmState::single_cv(initial)
        } else {
            ImmState::new(initial, &self.imm_cfg)
        };
        let id = self.next_id;
        self.next_id += 1;
        self.stats.tracks_created += 1;
        let confirmed = self.cfg.n_init <= 1;
        let mut track = Track {
            id,
            status: if confirmed {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            },
            imm,
            hits: 1,
            misses: 0,
            age: 1,
            mu_history: VecDeque::new(),
            last_box: det.bbox,
            warned_singular: false,
        };
        track.push_mu(self.imm_cfg.stability_window);
        self.tracks.push(track);
        confirmed.then_some(TrackOutput {
            frame,
            id,
            bbox: det.bbox,
        })
    }
}

/// Covariance of a freshly spawned track, scaled to its box.
pub fn initial_gaussian(mean: &crate::motion::StateVector) -> Gaussian {
    let extent = mean[W].max(mean[H]).max(1.0);
    let mut cov = StateCov::zeros();
    let set = |cov: &mut StateCov, idx: &[usize], std: f64| {
        for &i in idx {
            cov[(i, i)] = std * std;
        }
    };
    set(&mut cov, &[CX, CY], INIT_POS_FRAC * extent);
    set(&mut cov, &[VX, VY], INIT_VEL_FRAC * extent);
    set(&mut cov, &[AX, AY], INIT_ACC_FRAC * extent);
    set(&mut cov, &[OMEGA], INIT_OMEGA_STD);
    set(&mut cov, &[W, H], INIT_SIZE_FRAC * extent);
    Gaussian::new(*mean, cov)
}

/// Runs the tracker over every frame from 1 to the last detection frame.
#[derive(Debug, Clone)]
pub struct SequenceRun {
    pub results: Vec<TrackOutput>,
    pub stats: TrackerStats,
    pub live_tracks: usize,
}

pub fn track_sequence(dets: &SequenceData, config: &Config, ablation: Ablation) -> Result<SequenceRun> {
    let mut tracker = Tracker::new(config, ablation);
    let mut results = Vec::new();
    let last = dets.last_frame();
    for frame in 1..=last {
        let frame_dets = dets.detections(frame);
        let out = tracker
            .process_frame(&frame_dets, frame)
            .map_err(|e| Error::AtFrame {
                frame,
                source: Box::new(e),
            })?;
        results.extend(out);
    }
    Ok(SequenceRun {
        results,
        stats: tracker.stats(),
        live_tracks: tracker.live_tracks(),
    })
}
