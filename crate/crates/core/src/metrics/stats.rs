use std::collections::BTreeMap;

use crate::io::SequenceData;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatasetStats {
    /// Mean over ids of the fraction of frames in which the id is present.
    pub gpr: f64,
    /// Mean over ids of the peak per-frame displacement relative to box diagonal.
    pub mmso_like: f64,
    /// Mean over ids of the peak change in that relative speed.
    pub mmsao_like: f64,
    pub n_ids: usize,
    pub n_frames: u32,
}

/// Per-id `(id, frames present / sequence length)`.
pub fn presence_ratios(gt: &SequenceData) -> Vec<(i64, f64)> {
    let len = gt.last_frame().max(1) as f64;
    let mut counts: BTreeMap<i64, u32> = BTreeMap::new();
    for r in gt.frames.values().flatten() {
        *counts.entry(r.id).or_default() += 1;
    }
    counts.into_iter().map(|(id, n)| (id, n as f64 / len)).collect()
}

/// (frame, center, diagonal) of one ground-truth box.
type Sample = (u32, (f64, f64), f64);

pub fn dataset_stats(gt: &SequenceData) -> DatasetStats {
    let presence = presence_ratios(gt);
    let gpr = if presence.is_empty() {
        0.0
    } else {
        presence.iter().map(|p| p.1).sum::<f64>() / presence.len() as f64
    };

    let mut tracks: BTreeMap<i64, Vec<Sample>> = BTreeMap::new();
    for (&frame, recs) in &gt.frames {
        for r in recs {
            tracks
                .entry(r.id)
                .or_default()
                .push((frame, r.bbox.center(), r.bbox.diagonal()));
        }
    }

    let (mut speed_sum, mut speed_n, mut acc_sum, mut acc_n) = (0.0, 0usize, 0.0, 0usize);
    for obs in tracks.values_mut() {
        obs.sort_by_key(|o| o.0);
        // relative speeds between consecutive frames; None across gaps
        let speeds: Vec<Option<f64>> = obs
            .windows(2)
            .map(|w| {
                let (f0, c0, d0) = w[0];
                let (f1, c1, _) = w[1];
                (f1 == f0 + 1).then(|| (c1.0 - c0.0).hypot(c1.1 - c0.1) / d0)
            })
            .collect();
        let peak_speed = speeds.iter().flatten().copied().reduce(f64::max);
        if let Some(s) = peak_speed {
            speed_sum += s;
            speed_n += 1;
        }
        let peak_acc = speeds
            .windows(2)
            .filter_map(|w| match (w[0], w[1]) {
                (Some(a), Some(b)) => Some((b - a).abs()),
                _ => None,
            })
            .reduce(f64::max);
        if let Some(a) = peak_acc {
            acc_sum += a;
            acc_n += 1;
        }
    }

    DatasetStats {
        gpr,
        mmso_like: if speed_n > 0 { speed_sum / speed_n as f64 } else { 0.0 },
        mmsao_like: if acc_n > 0 { acc_sum / acc_n as f64 } else { 0.0 },
        n_ids: presence.len(),
        n_frames: gt.last_frame(),
    }
}
