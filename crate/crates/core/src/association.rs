//! Track-to-detection costs: IoU, Mahalanobis motion cost, uncertainty-adaptive
//! fusion, and stage-dependent gating.

use nalgebra::Cholesky;

use crate::geometry::{box_to_measurement, Detection, Measurement};
use crate::motion::measurement_fn;
use crate::ukf::{Gaussian, MeasCov};

pub use crate::assignment::{solve_assignment, Assignment, CostMatrix};

/// Association stages, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StageId {
    Stable,
    Maneuver,
    Lost,
    LowConf,
}

impl StageId {
    pub const ORDER: [StageId; 4] = [
        StageId::Stable,
        StageId::Maneuver,
        StageId::Lost,
        StageId::LowConf,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AufConfig {
    pub alpha_min: f64,
    pub alpha_max: f64,
    /// Uncertainty at which alpha sits halfway between its bounds.
    pub u_ref: f64,
    pub lambda_stable: f64,
    pub lambda_maneuver: f64,
    /// 4-dof chi-square gate (0.99 quantile by default).
    pub gate_chi2: f64,
}

impl Default for AufConfig {
    fn default() -> Self {
        Self {
            alpha_min: 0.3,
            alpha_max: 0.8,
            u_ref: 1.0,
            lambda_stable: 1.0,
            lambda_maneuver: 0.5,
            gate_chi2: 13.277,
        }
    }
}

impl AufConfig {
    /// Fixed weight 0.5 and unit state factor, i.e. fusion without adaptation.
    pub fn fixed() -> Self {
        Self {
            alpha_min: 0.5,
            alpha_max: 0.5,
            lambda_stable: 1.0,
            lambda_maneuver: 1.0,
            ..Self::default()
        }
    }

    /// Spatial weight for predictive uncertainty `u`.
    pub fn alpha(&self, u: f64) -> f64 {
        let frac = if u.is_infinite() {
            1.0
        } else {
            u / (u + self.u_ref)
        };
        (self.alpha_min + (self.alpha_max - self.alpha_min) * frac)
            .clamp(self.alpha_min, self.alpha_max)
    }

    pub fn lambda(&self, is_stable: bool) -> f64 {
        if is_stable {
            self.lambda_stable
        } else {
            self.lambda_maneuver
        }
    }
}

/// Minimum IoU per stage and the lost-stage motion-gate widening.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageGates {
    pub stable_iou_min: f64,
    pub maneuver_iou_min: f64,
    pub lost_iou_min: f64,
    pub lost_gate_scale: f64,
}

impl Default for StageGates {
    fn default() -> Self {
        Self {
            stable_iou_min: 0.2,
            maneuver_iou_min: 0.05,
            lost_iou_min: 0.0,
            lost_gate_scale: 2.0,
        }
    }
}

impl StageGates {
    /// `(min IoU, chi-square multiplier)` for a stage. The low-confidence
    /// stage reuses the maneuver-stage gate.
    pub fn limits(&self, stage: StageId) -> (f64, f64) {
        match stage {
            StageId::Stable => (self.stable_iou_min, 1.0),
            StageId::Maneuver | StageId::LowConf => (self.maneuver_iou_min, 1.0),
            StageId::Lost => (self.lost_iou_min, self.lost_gate_scale),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionCost {
    pub cost: f64,
    /// Squared Mahalanobis distance; infinite when `S` is singular.
    pub d2: f64,
}

/// Innovation statistics of one predicted track, reused across detections.
#[derive(Debug, Clone)]
pub struct MotionGate {
    z_pred: Measurement,
    chol: Option<Cholesky<f64, nalgebra::Const<4>>>,
}

impl MotionGate {
    pub fn new(predicted: &Gaussian, s: &MeasCov) -> Self {
        Self {
            z_pred: measurement_fn(&predicted.mean),
            chol: Cholesky::new(*s),
        }
    }

    pub fn is_singular(&self) -> bool {
        self.chol.is_none()
    }

    pub fn cost(&self, det: &Detection, cfg: &AufConfig) -> MotionCost {
        let Some(chol) = &self.chol else {
            return MotionCost {
                cost: 1.0,
                d2: f64::INFINITY,
            };
        };
        let nu = box_to_measurement(&det.bbox) - self.z_pred;
        let d2 = nu.dot(&chol.solve(&nu)).max(0.0);
        MotionCost {
            cost: (d2 / cfg.gate_chi2).min(1.0),
            d2,
        }
    }
}

/// Normalized Mahalanobis cost of `det` against the predicted track.
pub fn motion_cost(predicted: &Gaussian, det: &Detection, s: &MeasCov, cfg: &AufConfig) -> MotionCost {
    MotionGate::new(predicted, s).cost(det, cfg)
}

/// `alpha * (1 - IoU) + (1 - alpha) * c_mot * lambda`.
pub fn fuse(iou_raw: f64, c_mot: f64, u: f64, is_stable: bool, cfg: &AufConfig) -> f64 {
    let alpha = cfg.alpha(u);
    alpha * (1.0 - iou_raw) + (1.0 - alpha) * c_mot * cfg.lambda(is_stable)
}

pub fn gate(d2: f64, iou_raw: f64, stage: StageId, cfg: &AufConfig, gates: &StageGates) -> bool {
    let (iou_min, scale) = gates.limits(stage);
    d2 <= cfg.gate_chi2 * scale && iou_raw >= iou_min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use crate::motion::{StateCov, StateVector};
    use proptest::prelude::*;

    fn predicted_at(cx: f64, cy: f64, w: f64, h: f64) -> Gaussian {
        let mut m = StateVector::zeros();
        m[0] = cx;
        m[1] = cy;
        m[7] = w;
        m[8] = h;
        Gaussian::new(m, StateCov::identity())
    }

    fn det_at(cx: f64, cy: f64, w: f64, h: f64) -> Detection {
        Detection {
            frame: 1,
            bbox: BoundingBox::from_center(cx, cy, w, h),
            confidence: 0.9,
        }
    }

    #[test]
    fn motion_cost_examples() {
        let cfg = AufConfig::default();
        let g = predicted_at(10.0, 10.0, 4.0, 4.0);
        let s = MeasCov::identity();
        let c = motion_cost(&g, &det_at(10.0, 10.0, 4.0, 4.0), &s, &cfg);
        assert_eq!((c.cost, c.d2), (0.0, 0.0));
        let c = motion_cost(&g, &det_at(12.0, 10.0, 4.0, 4.0), &s, &cfg);
        assert!((c.d2 - 4.0).abs() < 1e-12);
        assert!((c.cost - 4.0 / 13.277).abs() < 1e-12);
        assert!((c.cost - 0.3013).abs() < 1e-4);
        // d2 equal to the gate maps to exactly 1
        let s = MeasCov::identity() * (4.0 / 13.277);
        let c = motion_cost(&g, &det_at(12.0, 10.0, 4.0, 4.0), &s, &cfg);
        assert!((c.cost - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singular_s_is_gated() {
        let g = predicted_at(0.0, 0.0, 4.0, 4.0);
        let c = motion_cost(&g, &det_at(0.0, 0.0, 4.0, 4.0), &MeasCov::zeros(), &AufConfig::default());
        assert_eq!(c.cost, 1.0);
        assert!(c.d2.is_infinite());
    }

    #[test]
    fn fuse_examples() {
        let cfg = AufConfig::default();
        assert_eq!(cfg.alpha(0.0), cfg.alpha_min);
        assert_eq!(cfg.alpha(f64::INFINITY), cfg.alpha_max);
        assert!((cfg.alpha(1e12) - cfg.alpha_max).abs() < 1e-11);
        assert!((cfg.alpha(1.0) - 0.55).abs() < 1e-15);
        let v = fuse(0.5, 0.2, 1.0, true, &cfg);
        assert!((v - 0.365).abs() < 1e-12);
        // maneuvering halves the motion term
        let v = fuse(0.5, 0.2, 1.0, false, &cfg);
        assert!((v - (0.55 * 0.5 + 0.45 * 0.1)).abs() < 1e-12);
    }

    #[test]
    fn gate_examples() {
        let cfg = AufConfig::default();
        let g = StageGates::default();
        for st in StageId::ORDER {
            assert!(gate(0.0, 1.0, st, &cfg, &g));
        }
        assert!(!gate(13.3, 1.0, StageId::Stable, &cfg, &g));
        assert!(!gate(0.0, 0.1, StageId::Stable, &cfg, &g));
        assert!(gate(0.0, 0.1, StageId::Maneuver, &cfg, &g));
        assert!(gate(20.0, 0.0, StageId::Lost, &cfg, &g));
    }

    proptest! {
        #[test]
        fn fuse_monotone(iou1 in 0.0..1.0f64, iou2 in 0.0..1.0f64, m1 in 0.0..1.0f64, m2 in 0.0..1.0f64,
                         u1 in 0.0..10.0f64, u2 in 0.0..10.0f64, stable in any::<bool>()) {
            let cfg = AufConfig::default();
            let (clo, chi) = if iou1 <= iou2 { (iou2, iou1) } else { (iou1, iou2) };
            let (mlo, mhi) = if m1 <= m2 { (m1, m2) } else { (m2, m1) };
            // lower raw IoU means higher IoU cost
            prop_assert!(fuse(clo, m1, u1, stable, &cfg) <= fuse(chi, m1, u1, stable, &cfg) + 1e-15);
            prop_assert!(fuse(iou1, mlo, u1, stable, &cfg) <= fuse(iou1, mhi, u1, stable, &cfg) + 1e-15);
            let (ulo, uhi) = if u1 <= u2 { (u1, u2) } else { (u2, u1) };
            prop_assert!(cfg.alpha(ulo) <= cfg.alpha(uhi));
            let v = fuse(iou1, m1, u1, stable, &cfg);
            prop_assert!((0.0..=1.0).contains(&v));
        }

        #[test]
        fn lost_gate_is_superset(d2 in 0.0..40.0f64, iou in 0.0..1.0f64) {
            let cfg = AufConfig::default();
            let g = StageGates::default();
            if gate(d2, iou, StageId::Stable, &cfg, &g) {
                prop_assert!(gate(d2, iou, StageId::Lost, &cfg, &g));
            }
            if gate(d2, iou, StageId::Stable, &cfg, &g) {
                prop_assert!(gate(d2, iou, StageId::Maneuver, &cfg, &g));
            }
        }
    }
}
