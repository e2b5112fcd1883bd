//! Sequence-level tracking metrics and ground-truth statistics.

mod clear;
mod hota;
mod identity;
mod stats;

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;

use crate::geometry::iou;
use crate::io::{Record, SequenceData};

pub use clear::{clear_mot, ClearMot};
pub use hota::{hota, Hota, HOTA_ALPHAS};
pub use identity::{idf1, Identity};
pub use stats::{dataset_stats, presence_ratios, DatasetStats};

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceMetrics {
    pub hota: f64,
    pub assa: f64,
    pub deta: f64,
    pub idf1: f64,
    /// `None` when the ground truth holds no boxes.
    pub mota: Option<f64>,
    pub ids: u64,
    pub fp: u64,
    pub fn_: u64,
    pub gt_count: u64,
}

pub fn evaluate(gt: &SequenceData, res: &SequenceData, iou_min: f64) -> SequenceMetrics {
    let c = clear_mot(gt, res, iou_min);
    let i = idf1(gt, res, iou_min);
    let h = hota(gt, res);
    SequenceMetrics {
        hota: h.hota,
        assa: h.assa,
        deta: h.deta,
        idf1: i.idf1,
        mota: c.mota,
        ids: c.ids,
        fp: c.fp,
        fn_: c.fn_,
        gt_count: c.gt_count,
    }
}

impl SequenceMetrics {
    fn mota_text(&self) -> String {
        self.mota.map_or_else(|| "n/a".to_string(), |m| format!("{m:.6}"))
    }

    /// Human-readable table.
    pub fn table(&self, name: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<16} {:>8} {:>8} {:>8} {:>8} {:>8} {:>7} {:>7} {:>6}",
            "sequence", "HOTA", "AssA", "DetA", "IDF1", "MOTA", "FP", "FN", "IDs"
        );
        let mota = self
            .mota
            .map_or_else(|| "n/a".to_string(), |m| format!("{:.2}", 100.0 * m));
        let _ = writeln!(
            s,
            "{:<16} {:>8.2} {:>8.2} {:>8.2} {:>8.2} {:>8} {:>7} {:>7} {:>6}",
            name,
            100.0 * self.hota,
            100.0 * self.assa,
            100.0 * self.deta,
            100.0 * self.idf1,
            mota,
            self.fp,
            self.fn_,
            self.ids
        );
        s
    }

    /// Machine-readable `key=value` lines.
    pub fn key_values(&self, name: &str) -> String {
        format!(
            "sequence={name}\nhota={:.6}\nassa={:.6}\ndeta={:.6}\nidf1={:.6}\nmota={}\nfp={}\nfn={}\nids={}\ngt={}\n",
            self.hota,
            self.assa,
            self.deta,
            self.idf1,
            self.mota_text(),
            self.fp,
            self.fn_,
            self.ids,
            self.gt_count
        )
    }
}

/// Frames covered by either input, ascending.
pub(crate) fn frame_range(gt: &SequenceData, res: &SequenceData) -> std::ops::RangeInclusive<u32> {
    1..=gt.last_frame().max(res.last_frame())
}

pub(crate) fn iou_matrix(gt: &[Record], res: &[Record]) -> DMatrix<f64> {
    DMatrix::from_fn(gt.len(), res.len(), |i, j| iou(&gt[i].bbox, &res[j].bbox))
}

/// Dense indices for ids in order of first appearance over sorted ids.
pub(crate) fn id_index(data: &SequenceData) -> HashMap<i64, usize> {
    data.ids().into_iter().enumerate().map(|(i, id)| (id, i)).collect()
}
