use nalgebra::DMatrix;

use super::{frame_range, id_index, iou_matrix};
use crate::assignment::solve_assignment;
use crate::io::SequenceData;

/// Localization thresholds 0.05, 0.10, ..., 0.95.
pub const HOTA_ALPHAS: [f64; 19] = {
    let mut a = [0.0; 19];
    let mut i = 0;
    while i < 19 {
        a[i] = (i as f64 + 1.0) * 0.05;
        i += 1;
    }
    a
};

#[derive(Debug, Clone, PartialEq)]
pub struct Hota {
    pub hota: f64,
    pub assa: f64,
    pub deta: f64,
    /// `(alpha, HOTA, DetA, AssA)` per threshold.
    pub curve: Vec<(f64, f64, f64, f64)>,
}

/// Higher-order tracking accuracy with IoU similarity.
pub fn hota(gt: &SequenceData, res: &SequenceData) -> Hota {
    let gidx = id_index(gt);
    let ridx = id_index(res);
    let (ng, nr) = (gidx.len(), ridx.len());
    let na = HOTA_ALPHAS.len();

    // Global alignment: accumulated soft IoU between every id pair.
    let mut potential = DMatrix::<f64>::zeros(ng, nr);
    let mut gt_count = vec![0.0; ng];
    let mut res_count = vec![0.0; nr];
    for frame in frame_range(gt, res) {
        let g = gt.records(frame);
        let r = res.records(frame);
        for rec in g {
            gt_count[gidx[&rec.id]] += 1.0;
        }
        for rec in r {
            res_count[ridx[&rec.id]] += 1.0;
        }
        if g.is_empty() || r.is_empty() {
            continue;
        }
        let sim = iou_matrix(g, r);
        let row_sum: Vec<f64> = (0..g.len()).map(|i| sim.row(i).sum()).collect();
        let col_sum: Vec<f64> = (0..r.len()).map(|j| sim.column(j).sum()).collect();
        for i in 0..g.len() {
            for j in 0..r.len() {
                let denom = row_sum[i] + col_sum[j] - sim[(i, j)];
                if denom > f64::EPSILON {
                    potential[(gidx[&g[i].id], ridx[&r[j].id])] += sim[(i, j)] / denom;
                }
            }
        }
    }
    let alignment = DMatrix::from_fn(ng, nr, |i, j| {
        let d = gt_count[i] + res_count[j] - potential[(i, j)];
        if d > 0.0 {
            potential[(i, j)] / d
        } else {
            0.0
        }
    });

    let mut tp = vec![0.0; na];
    let mut fn_ = vec![0.0; na];
    let mut fp = vec![0.0; na];
    let mut matches: Vec<DMatrix<f64>> = vec![DMatrix::zeros(ng, nr); na];
    for frame in frame_range(gt, res) {
        let g = gt.records(frame);
        let r = res.records(frame);
        if g.is_empty() || r.is_empty() {
            for a in 0..na {
                fn_[a] += g.len() as f64;
                fp[a] += r.len() as f64;
            }
            continue;
        }
        let sim = iou_matrix(g, r);
        let cost = DMatrix::from_fn(g.len(), r.len(), |i, j| {
            -(alignment[(gidx[&g[i].id], ridx[&r[j].id])] * sim[(i, j)])
        });
        let pairs = solve_assignment(&cost, f64::INFINITY).pairs;
        for (a, &alpha) in HOTA_ALPHAS.iter().enumerate() {
            let mut n = 0.0;
            for &(i, j) in &pairs {
                if sim[(i, j)] >= alpha - f64::EPSILON {
                    n += 1.0;
                    matches[a][(gidx[&g[i].id], ridx[&r[j].id])] += 1.0;
                }
            }
            tp[a] += n;
            fn_[a] += g.len() as f64 - n;
            fp[a] += r.len() as f64 - n;
        }
    }

    let mut curve = Vec::with_capacity(na);
    for (a, &alpha) in HOTA_ALPHAS.iter().enumerate() {
        let m = &matches[a];
        let mut ass = 0.0;
        for i in 0..ng {
            for j in 0..nr {
                let c = m[(i, j)];
                if c > 0.0 {
                    ass += c * c / (gt_count[i] + res_count[j] - c).max(1.0);
                }
            }
        }
        let assa = ass / tp[a].max(1.0);
        let deta = tp[a] / (tp[a] + fn_[a] + fp[a]).max(1.0);
        curve.push((alpha, (deta * assa).sqrt(), deta, assa));
    }
    let mean = |k: fn(&(f64, f64, f64, f64)) -> f64| curve.iter().map(k).sum::<f64>() / na as f64;
    Hota {
        hota: mean(|c| c.1),
        deta: mean(|c| c.2),
        assa: mean(|c| c.3),
        curve,
    }
}
