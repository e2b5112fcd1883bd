//! State-transition functions for the CV, CA and CT regimes over one shared
//! 9-dimensional state, plus the linear measurement projection.

use std::fmt;

use nalgebra::{SMatrix, SVector};

use crate::geometry::{BoundingBox, Measurement};

pub const STATE_DIM: usize = 9;

pub type StateVector = SVector<f64, STATE_DIM>;
pub type StateCov = SMatrix<f64, STATE_DIM, STATE_DIM>;

// State layout.
pub const CX: usize = 0;
pub const CY: usize = 1;
pub const VX: usize = 2;
pub const VY: usize = 3;
pub const AX: usize = 4;
pub const AY: usize = 5;
pub const OMEGA: usize = 6;
pub const W: usize = 7;
pub const H: usize = 8;

/// Below this turn rate the CT transition falls back to the CV step.
pub const CT_OMEGA_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelId {
    Cv,
    Ca,
    Ct,
}

impl ModelId {
    pub const ALL: [ModelId; 3] = [ModelId::Cv, ModelId::Ca, ModelId::Ct];

    pub fn name(self) -> &'static str {
        match self {
            ModelId::Cv => "CV",
            ModelId::Ca => "CA",
            ModelId::Ct => "CT",
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Process-noise scales. All are standard deviations per frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseConfig {
    /// White-acceleration noise driving velocity (CV, CT), px/frame.
    pub sigma_cv_vel: f64,
    /// White-jerk noise driving acceleration (CA), px/frame².
    pub sigma_ca_acc: f64,
    /// Turn-rate random walk (CT), rad/frame.
    pub sigma_ct_omega: f64,
    /// Random walk on box width and height, px.
    pub sigma_wh: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_cv_vel: 1.0,
            sigma_ca_acc: 0.5,
            sigma_ct_omega: 0.05,
            sigma_wh: 0.5,
        }
    }
}

/// Propagates `s` by `dt` frames under `model`. Width and height are carried unchanged.
pub fn transition(model: ModelId, s: &StateVector, dt: f64) -> StateVector {
    let mut out = *s;
    match model {
        ModelId::Cv => {
            out[CX] += s[VX] * dt;
            out[CY] += s[VY] * dt;
        }
        ModelId::Ca => {
            let half_dt2 = 0.5 * dt * dt;
            out[CX] += s[VX] * dt + s[AX] * half_dt2;
            out[CY] += s[VY] * dt + s[AY] * half_dt2;
            out[VX] += s[AX] * dt;
            out[VY] += s[AY] * dt;
        }
        ModelId::Ct => {
            let omega = s[OMEGA];
            if omega.abs() < CT_OMEGA_EPS {
                out[CX] += s[VX] * dt;
                out[CY] += s[VY] * dt;
            } else {
                let (sin, cos) = (omega * dt).sin_cos();
                out[CX] += (s[VX] * sin - s[VY] * (1.0 - cos)) / omega;
                out[CY] += (s[VX] * (1.0 - cos) + s[VY] * sin) / omega;
                out[VX] = s[VX] * cos - s[VY] * sin;
                out[VY] = s[VX] * sin + s[VY] * cos;
            }
        }
    }
    out
}

pub fn measurement_fn(s: &StateVector) -> Measurement {
    Measurement::new(s[CX], s[CY], s[W], s[H])
}

/// State at rest located at the measured box.
pub fn state_from_measurement(z: &Measurement) -> StateVector {
    let mut s = StateVector::zeros();
    s[CX] = z[0];
    s[CY] = z[1];
    s[W] = z[2];
    s[H] = z[3];
    s
}

/// Box of a state, with non-positive extents clamped for association.
pub fn state_box(s: &StateVector) -> BoundingBox {
    BoundingBox::from_center(s[CX], s[CY], s[W], s[H]).clamped()
}

/// Process-noise covariance of `model` over `dt` frames.
pub fn process_noise(model: ModelId, dt: f64, scale: &NoiseConfig) -> StateCov {
    let mut q = StateCov::zeros();
    let axes = [(CX, VX, AX), (CY, VY, AY)];
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;

    // Piecewise-constant white acceleration on (position, velocity).
    let add_velocity_noise = |q: &mut StateCov, sigma: f64| {
        let var = sigma * sigma;
        for &(p, v, _) in &axes {
            q[(p, p)] += var * dt2 * dt2 / 4.0;
            q[(p, v)] += var * dt3 / 2.0;
            q[(v, p)] += var * dt3 / 2.0;
            q[(v, v)] += var * dt2;
        }
    };

    match model {
        ModelId::Cv => add_velocity_noise(&mut q, scale.sigma_cv_vel),
        ModelId::Ca => {
            // Piecewise-constant white jerk on (position, velocity, acceleration).
            let var = scale.sigma_ca_acc * scale.sigma_ca_acc;
            let g = [dt3 / 6.0, dt2 / 2.0, dt];
            for &(p, v, a) in &axes {
                let idx = [p, v, a];
                for (i, &r) in idx.iter().enumerate() {
                    for (j, &c) in idx.iter().enumerate() {
                        q[(r, c)] += var * g[i] * g[j];
                    }
                }
            }
        }
        ModelId::Ct => {
            add_velocity_noise(&mut q, scale.sigma_cv_vel);
            q[(OMEGA, OMEGA)] += scale.sigma_ct_omega * scale.sigma_ct_omega * dt2;
        }
    }

    let wh = scale.sigma_wh * scale.sigma_wh * dt;
    q[(W, W)] += wh;
    q[(H, H)] += wh;
    q
}
