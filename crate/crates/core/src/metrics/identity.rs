use nalgebra::DMatrix;

use super::{frame_range, id_index, iou_matrix};
use crate::assignment::solve_assignment;
use crate::io::SequenceData;

#[derive(Debug, Clone, PartialEq)]
pub struct Identity {
    pub idf1: f64,
    pub idtp: u64,
    pub idfp: u64,
    pub idfn: u64,
}

/// Identity F1 under the one-to-one id mapping that maximizes identity true positives.
pub fn idf1(gt: &SequenceData, res: &SequenceData, iou_min: f64) -> Identity {
    let gidx = id_index(gt);
    let ridx = id_index(res);
    let mut overlap = DMatrix::<f64>::zeros(gidx.len(), ridx.len());
    for frame in frame_range(gt, res) {
        let g = gt.records(frame);
        let r = res.records(frame);
        if g.is_empty() || r.is_empty() {
            continue;
        }
        let sim = iou_matrix(g, r);
        for (i, gr) in g.iter().enumerate() {
            for (j, rr) in r.iter().enumerate() {
                if sim[(i, j)] >= iou_min {
                    overlap[(gidx[&gr.id], ridx[&rr.id])] += 1.0;
                }
            }
        }
    }
    let sol = solve_assignment(&(-&overlap), f64::INFINITY);
    let idtp: u64 = sol.pairs.iter().map(|&(i, j)| overlap[(i, j)] as u64).sum();
    let n_gt = gt.len() as u64;
    let n_res = res.len() as u64;
    let denom = n_gt + n_res;
    Identity {
        idf1: if denom == 0 {
            0.0
        } else {
            2.0 * idtp as f64 / denom as f64
        },
        idtp,
        idfp: n_res - idtp,
        idfn: n_gt - idtp,
    }
}
