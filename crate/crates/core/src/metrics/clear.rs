use std::collections::HashMap;

use super::{frame_range, iou_matrix};
use crate::assignment::{solve_assignment, CostMatrix};
use crate::io::SequenceData;

/// Bonus that makes last frame's correspondences win over any IoU difference.
const CONTINUITY_BONUS: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ClearMot {
    pub mota: Option<f64>,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub ids: u64,
    pub gt_count: u64,
}

/// CLEAR-MOT counts. Correspondences from the previous frame are kept when they
/// still clear `iou_min`; the rest are matched by maximum total IoU.
pub fn clear_mot(gt: &SequenceData, res: &SequenceData, iou_min: f64) -> ClearMot {
    let mut last_match: HashMap<i64, i64> = HashMap::new();
    let mut prev_step: HashMap<i64, i64> = HashMap::new();
    let (mut tp, mut fp, mut fn_, mut ids, mut gt_count) = (0u64, 0u64, 0u64, 0u64, 0u64);

    for frame in frame_range(gt, res) {
        let g = gt.records(frame);
        let r = res.records(frame);
        gt_count += g.len() as u64;
        if g.is_empty() {
            fp += r.len() as u64;
            continue;
        }
        if r.is_empty() {
            fn_ += g.len() as u64;
            continue;
        }
        let sim = iou_matrix(g, r);
        let score = CostMatrix::from_fn(g.len(), r.len(), |i, j| {
            let s = sim[(i, j)];
            if s < iou_min - f64::EPSILON {
                return 0.0;
            }
            let bonus = if prev_step.get(&g[i].id) == Some(&r[j].id) {
                CONTINUITY_BONUS
            } else {
                0.0
            };
            -(s + bonus)
        });
        let sol = solve_assignment(&score, f64::INFINITY);
        prev_step.clear();
        let mut matched = 0u64;
        for (i, j) in sol.pairs {
            if -score[(i, j)] <= f64::EPSILON {
                continue;
            }
            matched += 1;
            let (gid, rid) = (g[i].id, r[j].id);
            if let Some(&before) = last_match.get(&gid) {
                if before != rid {
                    ids += 1;
                }
            }
            last_match.insert(gid, rid);
            prev_step.insert(gid, rid);
        }
        tp += matched;
        fn_ += g.len() as u64 - matched;
        fp += r.len() as u64 - matched;
    }

    let mota = (gt_count > 0).then(|| 1.0 - (fn_ + fp + ids) as f64 / gt_count as f64);
    ClearMot {
        mota,
        tp,
        fp,
        fn_,
        ids,
        gt_count,
    }
}
