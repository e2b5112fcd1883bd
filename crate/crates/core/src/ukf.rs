//! Scaled unscented Kalman filter over the shared 9-dimensional state.

use std::f64::consts::PI;

use nalgebra::{Cholesky, Const, Matrix4, SMatrix};

use crate::error::{Error, Result};
use crate::geometry::Measurement;
use crate::motion::{
    measurement_fn, process_noise, transition, ModelId, NoiseConfig, StateCov, StateVector,
    STATE_DIM,
};

pub const SIGMA_COUNT: usize = 2 * STATE_DIM + 1;

/// Number of jitter-and-retry attempts after a failed Cholesky factorization.
pub const JITTER_RETRIES: usize = 3;

pub type MeasCov = Matrix4<f64>;
pub type CrossCov = SMatrix<f64, STATE_DIM, 4>;

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    pub mean: StateVector,
    pub cov: StateCov,
}

impl Gaussian {
    pub fn new(mean: StateVector, cov: StateCov) -> Self {
        Self { mean, cov }
    }
}

/// Scaled unscented-transform parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtParams {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UtParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

impl UtParams {
    pub fn lambda(&self) -> f64 {
        let n = STATE_DIM as f64;
        self.alpha * self.alpha * (n + self.kappa) - n
    }

    /// Mean and covariance weights, index 0 is the central point.
    pub fn weights(&self) -> ([f64; SIGMA_COUNT], [f64; SIGMA_COUNT]) {
        let n = STATE_DIM as f64;
        let lambda = self.lambda();
        let spread = n + lambda;
        let mut wm = [1.0 / (2.0 * spread); SIGMA_COUNT];
        let mut wc = wm;
        wm[0] = lambda / spread;
        wc[0] = lambda / spread + (1.0 - self.alpha * self.alpha + self.beta);
        (wm, wc)
    }
}

#[derive(Debug, Clone)]
pub struct SigmaPoints {
    pub points: Vec<StateVector>,
    pub wm: [f64; SIGMA_COUNT],
    pub wc: [f64; SIGMA_COUNT],
}

impl SigmaPoints {
    pub fn mean(&self) -> StateVector {
        weighted_mean(&self.points, &self.wm)
    }

    pub fn cov(&self) -> StateCov {
        let m = self.mean();
        let mut p = StateCov::zeros();
        for (x, w) in self.points.iter().zip(self.wc) {
            let d = x - m;
            p += w * d * d.transpose();
        }
        p
    }
}

/// Result of a measurement update.
#[derive(Debug, Clone)]
pub struct UpdateOutcome {
    pub posterior: Gaussian,
    pub likelihood: f64,
    pub innovation: Measurement,
    pub innovation_cov: MeasCov,
}

/// Cholesky factorization with diagonal jitter of `1e-9 * trace / n` added on
/// each of up to [`JITTER_RETRIES`] retries.
pub fn robust_cholesky<const D: usize>(
    m: &SMatrix<f64, D, D>,
) -> Option<Cholesky<f64, Const<D>>> {
    if let Some(c) = Cholesky::new(*m) {
        return Some(c);
    }
    let jitter = 1e-9 * m.trace().abs() / D as f64;
    if jitter == 0.0 || !jitter.is_finite() {
        return None;
    }
    let mut a = *m;
    for _ in 0..JITTER_RETRIES {
        for i in 0..D {
            a[(i, i)] += jitter;
        }
        if let Some(c) = Cholesky::new(a) {
            return Some(c);
        }
    }
    None
}

pub(crate) fn symmetrize<const D: usize>(m: &mut SMatrix<f64, D, D>) {
    for i in 0..D {
        for j in (i + 1)..D {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn weighted_mean<const D: usize>(
    pts: &[SMatrix<f64, D, 1>],
    w: &[f64; SIGMA_COUNT],
) -> SMatrix<f64, D, 1> {
    let mut m = SMatrix::<f64, D, 1>::zeros();
    for (x, wi) in pts.iter().zip(w) {
        m += *wi * x;
    }
    m
}

pub fn sigma_points(g: &Gaussian, p: &UtParams) -> Result<SigmaPoints> {
    let (wm, wc) = p.weights();
    let spread = STATE_DIM as f64 + p.lambda();
    let mut points = Vec::with_capacity(SIGMA_COUNT);
    points.push(g.mean);

    if g.cov.iter().all(|&v| v == 0.0) {
        points.extend(std::iter::repeat_n(g.mean, 2 * STATE_DIM));
        return Ok(SigmaPoints { points, wm, wc });
    }

    let scaled = g.cov * spread;
    let chol = robust_cholesky(&scaled).ok_or_else(|| Error::degenerate("state covariance"))?;
    let l = chol.l();
    for i in 0..STATE_DIM {
        points.push(g.mean + l.column(i));
    }
    for i in 0..STATE_DIM {
        points.push(g.mean - l.column(i));
    }
    Ok(SigmaPoints { points, wm, wc })
}

/// Unscented prediction without process noise.
pub fn propagate(g: &Gaussian, model: ModelId, dt: f64, p: &UtParams) -> Result<Gaussian> {
    let mut sp = sigma_points(g, p)?;
    for x in sp.points.iter_mut() {
        *x = transition(model, x, dt);
    }
    let mean = sp.mean();
    let mut cov = StateCov::zeros();
    for (x, w) in sp.points.iter().zip(sp.wc) {
        let d = x - mean;
        cov += w * d * d.transpose();
    }
    Ok(Gaussian { mean, cov })
}

pub fn predict(
    g: &Gaussian,
    model: ModelId,
    dt: f64,
    noise: &NoiseConfig,
    p: &UtParams,
) -> Result<Gaussian> {
    let mut out = propagate(g, model, dt, p)?;
    out.cov += process_noise(model, dt, noise);
    symmetrize(&mut out.cov);
    Ok(out)
}

struct MeasurementPrediction {
    z_hat: Measurement,
    s: MeasCov,
    cross: CrossCov,
}

fn unscented_measurement(g: &Gaussian, r: &MeasCov, p: &UtParams) -> Result<MeasurementPrediction> {
    let sp = sigma_points(g, p)?;
    let zs: Vec<Measurement> = sp.points.iter().map(measurement_fn).collect();
    let z_hat = weighted_mean(&zs, &sp.wm);
    let x_mean = g.mean;
    let mut s = *r;
    let mut cross = CrossCov::zeros();
    for ((x, z), w) in sp.points.iter().zip(&zs).zip(sp.wc) {
        let dz = z - z_hat;
        s += w * dz * dz.transpose();
        cross += w * (x - x_mean) * dz.transpose();
    }
    symmetrize(&mut s);
    Ok(MeasurementPrediction { z_hat, s, cross })
}

/// Predicted measurement and innovation covariance `S` of `g`.
pub fn predict_measurement(
    g: &Gaussian,
    r: &MeasCov,
    p: &UtParams,
) -> Result<(Measurement, MeasCov)> {
    let mp = unscented_measurement(g, r, p)?;
    Ok((mp.z_hat, mp.s))
}

/// Density of `nu` under N(0, S), given a Cholesky factor of `S`.
pub fn gaussian_density(nu: &Measurement, chol: &Cholesky<f64, Const<4>>) -> f64 {
    let d2 = nu.dot(&chol.solve(nu));
    let det = chol.determinant();
    (-0.5 * d2).exp() / ((2.0 * PI).powi(2) * det.sqrt())
}

pub fn update(g: &Gaussian, z: &Measurement, r: &MeasCov, p: &UtParams) -> Result<UpdateOutcome> {
    let mp = unscented_measurement(g, r, p)?;
    let chol =
        robust_cholesky(&mp.s).ok_or_else(|| Error::degenerate("innovation covariance"))?;
    let innovation = z - mp.z_hat;
    // K = Pxz S^-1, solved as S K^T = Pxz^T.
    let gain = chol.solve(&mp.cross.transpose()).transpose();
    let mean = g.mean + gain * innovation;
    let mut cov = g.cov - gain * mp.s * gain.transpose();
    symmetrize(&mut cov);
    let likelihood = gaussian_density(&innovation, &chol);
    Ok(UpdateOutcome {
        posterior: Gaussian { mean, cov },
        likelihood,
        innovation,
        innovation_cov: mp.s,
    })
}
