//! Multi-object tracking by detection with an interacting multiple model
//! UKF bank, motion-state cascaded association and uncertainty-adaptive cost
//! fusion, plus MOT evaluation metrics and a synthetic sequence generator.

pub mod assignment;
pub mod association;
pub mod cli;
pub mod config;
pub mod error;
pub mod geometry;
pub mod imm;
pub mod io;
pub mod metrics;
pub mod motion;
pub mod rng;
pub mod synth;
pub mod tracker;
pub mod ukf;

pub use config::{load_config, Config};
pub use error::{Error, Result};
pub use geometry::{iou, BoundingBox, Detection};
pub use io::{parse_mot_file, write_results, FileKind, SequenceData};
pub use metrics::{evaluate, SequenceMetrics};
pub use synth::{generate_sequence, SimConfig};
pub use tracker::{track_sequence, Ablation, Tracker, TrackerConfig};
