//! `arttrack` command line: `track`, `eval`, `stats`, `simulate`.
//!
//! Exit codes: 0 success, 1 usage error, 2 input or parse error,
//! 3 numerical degeneracy.

use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{load_config, Config};
use crate::error::Error;
use crate::io::{parse_mot_file, write_results, write_sequence, FileKind, SequenceData};
use crate::metrics::{dataset_stats, evaluate, presence_ratios};
use crate::synth::{generate_sequence, load_sim_config, write_regime_log, SimConfig};
use crate::tracker::{track_sequence, Ablation};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "arttrack", version, about = "Multi-model UKF multi-object tracker and MOT evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Track a MOTChallenge detection file.
    Track {
        #[arg(long)]
        det: PathBuf,
        /// Tracker configuration (key = value); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Replace the model bank with a single CV UKF.
        #[arg(long)]
        no_imm: bool,
        /// Associate all tracks in one stage.
        #[arg(long)]
        no_msdc: bool,
        /// Fixed cost weights instead of uncertainty-adaptive fusion.
        #[arg(long)]
        no_auf: bool,
    },
    /// Evaluate a result file against ground truth.
    Eval {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        res: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        iou_min: f64,
    },
    /// Presence and motion-complexity statistics of a ground-truth file.
    Stats {
        #[arg(long)]
        gt: PathBuf,
    },
    /// Generate a synthetic ground-truth and detection pair.
    Simulate {
        /// Simulation settings (key = value); defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the `seed` key of the config (default 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_gt: PathBuf,
        #[arg(long)]
        out_det: PathBuf,
        #[arg(long)]
        regime_log: Option<PathBuf>,
    },
}

struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            msg: msg.into(),
        }
    }

    fn from_error(context: &str, e: Error) -> Self {
        Self {
            code: if e.is_degenerate() { EXIT_NUMERIC } else { EXIT_INPUT },
            msg: format!("{context}: {e}"),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn read(path: &Path) -> std::result::Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_sequence(path: &Path, kind: FileKind) -> std::result::Result<SequenceData, Failure> {
    let text = read(path)?;
    let mut data = parse_mot_file(&text, kind).map_err(|e| Failure::from_error(&path.display().to_string(), e))?;
    data.meta.name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(data)
}

fn create(path: &Path) -> std::result::Result<BufWriter<fs::File>, Failure> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write_failure(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| Failure::input(format!("{}: {e}", path.display()))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut impl Write, stderr: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(stdout, "{text}");
            } else {
                let _ = write!(stderr, "{text}");
            }
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Track {
            det,
            config,
            out,
            no_imm,
            no_msdc,
            no_auf,
        } => cmd_track(&det, config.as_deref(), &out, Ablation { no_imm, no_msdc, no_auf }, stdout),
        Command::Eval { gt, res, iou_min } => cmd_eval(&gt, &res, iou_min, stdout, stderr),
        Command::Stats { gt } => cmd_stats(&gt, stdout),
        Command::Simulate {
            config,
            seed,
            out_gt,
            out_det,
            regime_log,
        } => cmd_simulate(config.as_deref(), seed, &out_gt, &out_det, regime_log.as_deref()),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.msg);
            f.code
        }
    }
}

fn cmd_track(det: &Path, config: Option<&Path>, out: &Path, ablation: Ablation, stdout: &mut impl Write) -> CliResult {
    let cfg = match config {
        Some(p) => load_config(&read(p)?).map_err(|e| Failure::from_error(&p.display().to_string(), e))?,
        None => Config::default(),
    };
    let dets = read_sequence(det, FileKind::Detections)?;
    let run = track_sequence(&dets, &cfg, ablation).map_err(|e| Failure::from_error(&det.display().to_string(), e))?;
    let mut w = create(out)?;
    write_results(&run.results, &mut w).map_err(write_failure(out))?;
    w.flush().map_err(|e| Failure::input(format!("{}: {e}", out.display())))?;
    let _ = writeln!(
        stdout,
        "frames={}\nlive_tracks={}\nremoved_tracks={}\nids_created={}\nboxes_written={}",
        run.stats.frames,
        run.live_tracks,
        run.stats.tracks_removed,
        run.stats.tracks_created,
        run.results.len()
    );
    Ok(())
}

fn cmd_eval(gt: &Path, res: &Path, iou_min: f64, stdout: &mut impl Write, stderr: &mut impl Write) -> CliResult {
    if !(0.0..=1.0).contains(&iou_min) {
        return Err(Failure {
            code: EXIT_USAGE,
            msg: format!("--iou-min {iou_min} outside [0, 1]"),
        });
    }
    let gt_data = read_sequence(gt, FileKind::GroundTruth)?;
    let mut res_data = read_sequence(res, FileKind::GroundTruth)?;
    let last = gt_data.last_frame();
    if res_data.last_frame() > last {
        let _ = writeln!(
            stderr,
            "warning: result frames run to {} but ground truth ends at {last}; evaluating frames 1..={last}",
            res_data.last_frame()
        );
        res_data.frames.retain(|&f, _| f <= last);
        res_data.meta.frame_count = last;
    }
    let m = evaluate(&gt_data, &res_data, iou_min);
    let _ = write!(stdout, "{}", m.table(&gt_data.meta.name));
    let _ = write!(stdout, "{}", m.key_values(&gt_data.meta.name));
    Ok(())
}

fn cmd_stats(gt: &Path, stdout: &mut impl Write) -> CliResult {
    let data = read_sequence(gt, FileKind::GroundTruth)?;
    if data.is_empty() {
        return Err(Failure::input(format!("{}: no identities", gt.display())));
    }
    let s = dataset_stats(&data);
    let _ = writeln!(
        stdout,
        "ids={}\nframes={}\ngpr={:.6}\nmmso_like={:.6}\nmmsao_like={:.6}",
        s.n_ids, s.n_frames, s.gpr, s.mmso_like, s.mmsao_like
    );
    // presence histogram in tenths; the last bin includes 1.0
    let mut bins = [0usize; 10];
    for (_, p) in presence_ratios(&data) {
        bins[((p * 10.0) as usize).min(9)] += 1;
    }
    let _ = writeln!(stdout, "presence histogram:");
    for (i, n) in bins.iter().enumerate() {
        let hi = if i == 9 { "]" } else { ")" };
        let _ = writeln!(stdout, "  [{:.1}, {:.1}{hi} {:>5} {}", i as f64 / 10.0, (i + 1) as f64 / 10.0, n, "#".repeat(*n.min(&60)));
    }
    Ok(())
}

fn cmd_simulate(
    config: Option<&Path>,
    seed: Option<u64>,
    out_gt: &Path,
    out_det: &Path,
    regime_log: Option<&Path>,
) -> CliResult {
    let mut cfg = match config {
        Some(p) => load_sim_config(&read(p)?).map_err(|e| Failure::from_error(&p.display().to_string(), e))?,
        None => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = generate_sequence(&cfg).map_err(|e| Failure::from_error("simulate", e))?;
    let mut w = create(out_gt)?;
    write_sequence(&out.gt, FileKind::GroundTruth, &mut w).map_err(write_failure(out_gt))?;
    w.flush().map_err(|e| Failure::input(e.to_string()))?;
    let mut w = create(out_det)?;
    write_sequence(&out.det, FileKind::Detections, &mut w).map_err(write_failure(out_det))?;
    w.flush().map_err(|e| Failure::input(e.to_string()))?;
    if let Some(p) = regime_log {
        let mut w = create(p)?;
        write_regime_log(&out.regimes, &mut w).map_err(write_failure(p))?;
        w.flush().map_err(|e| Failure::input(e.to_string()))?;
    }
    Ok(())
}
