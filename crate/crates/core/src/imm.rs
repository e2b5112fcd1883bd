//! Interacting multiple model bank of UKFs.
//!
//! Every model shares the same state space, so interaction is plain moment
//! matching. Model probabilities are frozen while a track coasts.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::geometry::Measurement;
use crate::motion::{ModelId, NoiseConfig, StateCov, StateVector, CX, CY, H, W};
use crate::ukf::{self, symmetrize, Gaussian, MeasCov, UtParams};

/// Model likelihoods are floored here before re-weighting.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;
/// Mixing normalizers below this fall back to the combined estimate.
pub const MIX_EPS: f64 = 1e-300;

/// Dominance ratio, streak length and boosted self-transition for the
/// optional tpm sharpening.
const ADAPT_RATIO: f64 = 10.0;
const ADAPT_STREAK: u32 = 3;
const ADAPT_SELF: f64 = 0.98;

#[derive(Debug, Clone, PartialEq)]
pub struct ImmConfig {
    /// Row-stochastic model transition matrix, rows/cols in [`ModelId::ALL`] order.
    pub tpm: [[f64; 3]; 3],
    pub mu_init: [f64; 3],
    pub adaptive: bool,
    pub theta_stable: f64,
    pub stability_window: usize,
}

impl Default for ImmConfig {
    fn default() -> Self {
        Self {
            tpm: tpm_with_self(0.95),
            mu_init: [1.0 / 3.0; 3],
            adaptive: false,
            theta_stable: 0.55,
            stability_window: 3,
        }
    }
}

/// 3x3 transition matrix with `p_self` on the diagonal and the remainder split evenly.
pub fn tpm_with_self(p_self: f64) -> [[f64; 3]; 3] {
    let off = (1.0 - p_self) / 2.0;
    let mut t = [[off; 3]; 3];
    for (i, row) in t.iter_mut().enumerate() {
        row[i] = p_self;
    }
    t
}

/// Everything a single filter step needs besides the IMM configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub dt: f64,
    pub noise: NoiseConfig,
    pub ut: UtParams,
    pub r: MeasCov,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self {
            dt: 1.0,
            noise: NoiseConfig::default(),
            ut: UtParams::default(),
            r: MeasCov::from_diagonal(&Measurement::new(1.0, 1.0, 4.0, 4.0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmState {
    pub models: Vec<ModelId>,
    pub filters: Vec<Gaussian>,
    pub mu: DVector<f64>,
    /// Active transition matrix (differs from `base_tpm` only while sharpened).
    pub tpm: DMatrix<f64>,
    pub base_tpm: DMatrix<f64>,
    pub combined: Gaussian,
    pub uncertainty: f64,
    /// Predicted model probabilities `c_j` from the last interaction.
    pub predicted_mu: DVector<f64>,
    /// Last per-model measurement likelihoods.
    pub likelihoods: Option<DVector<f64>>,
    dominant: Option<(usize, u32)>,
}

/// Mixed per-model priors and the normalizers `c_j`.
#[derive(Debug, Clone)]
pub struct Mixed {
    pub gaussians: Vec<Gaussian>,
    pub c: DVector<f64>,
}

impl ImmState {
    /// Three-model bank in [`ModelId::ALL`] order, all models starting at `initial`.
    pub fn new(initial: Gaussian, cfg: &ImmConfig) -> Self {
        let tpm = DMatrix::from_fn(3, 3, |i, j| cfg.tpm[i][j]);
        Self::from_parts(
            ModelId::ALL.to_vec(),
            vec![initial; 3],
            DVector::from_row_slice(&cfg.mu_init),
            tpm,
        )
    }

    /// A bank with one CV filter; this is the plain UKF used for ablation.
    pub fn single_cv(initial: Gaussian) -> Self {
        Self::from_parts(
            vec![ModelId::Cv],
            vec![initial],
            DVector::from_element(1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
        )
    }

    pub fn from_parts(
        models: Vec<ModelId>,
        filters: Vec<Gaussian>,
        mu: DVector<f64>,
        tpm: DMatrix<f64>,
    ) -> Self {
        assert_eq!(models.len(), filters.len());
        assert_eq!(models.len(), mu.len());
        assert_eq!((tpm.nrows(), tpm.ncols()), (mu.len(), mu.len()));
        let combined = combined_estimate(&filters, &mu);
        let uncertainty = uncertainty_of(&combined);
        Self {
            models,
            filters,
            predicted_mu: mu.clone(),
            mu,
            base_tpm: tpm.clone(),
            tpm,
            combined,
            uncertainty,
            likelihoods: None,
            dominant: None,
        }
    }

    pub fn model_probability(&self, m: ModelId) -> f64 {
        self.models
            .iter()
            .position(|&x| x == m)
            .map_or(0.0, |i| self.mu[i])
    }

    /// IMM interaction step.
    pub fn mix(&self) -> Mixed {
        let k = self.models.len();
        let c = self.tpm.transpose() * &self.mu;
        let mut gaussians = Vec::with_capacity(k);
        for j in 0..k {
            if c[j] < MIX_EPS {
                gaussians.push(self.combined.clone());
                continue;
            }
            let weights: Vec<f64> = (0..k)
                .map(|i| self.tpm[(i, j)] * self.mu[i] / c[j])
                .collect();
            gaussians.push(moment_match(&self.filters, &weights));
        }
        Mixed { gaussians, c }
    }

    /// Interaction plus per-model unscented prediction. Model probabilities
    /// are left unchanged; `predicted_mu` receives the normalizers.
    pub fn predict(&mut self, params: &FilterParams) -> Result<()> {
        let mixed = self.mix();
        for ((f, g), &m) in self
            .filters
            .iter_mut()
            .zip(mixed.gaussians)
            .zip(&self.models)
        {
            *f = ukf::predict(&g, m, params.dt, &params.noise, &params.ut)
                .map_err(|e| e.with_model(m))?;
        }
        self.predicted_mu = mixed.c;
        self.refresh_combined();
        Ok(())
    }

    /// Per-model measurement update and model re-weighting.
    pub fn correct(&mut self, z: &Measurement, params: &FilterParams, cfg: &ImmConfig) -> Result<()> {
        let k = self.models.len();
        let mut lik = DVector::zeros(k);
        for (j, (f, &m)) in self.filters.iter_mut().zip(&self.models).enumerate() {
            let out = ukf::update(f, z, &params.r, &params.ut).map_err(|e| e.with_model(m))?;
            *f = out.posterior;
            lik[j] = out.likelihood.max(LIKELIHOOD_FLOOR);
        }
        let mut mu = lik.component_mul(&self.predicted_mu);
        let total = mu.sum();
        if total > 0.0 && total.is_finite() {
            mu /= total;
        } else {
            mu = self.predicted_mu.clone();
            let t = mu.sum();
            mu /= t;
        }
        self.mu = mu;
        if cfg.adaptive {
            self.adapt(&lik);
        }
        self.likelihoods = Some(lik);
        self.refresh_combined();
        Ok(())
    }

    /// One full cycle; `None` coasts.
    pub fn step(
        &self,
        z: Option<&Measurement>,
        params: &FilterParams,
        cfg: &ImmConfig,
    ) -> Result<ImmState> {
        let mut next = self.clone();
        next.predict(params)?;
        if let Some(z) = z {
            next.correct(z, params, cfg)?;
        }
        Ok(next)
    }

    fn refresh_combined(&mut self) {
        self.combined = combined_estimate(&self.filters, &self.mu);
        self.uncertainty = uncertainty_of(&self.combined);
    }

    fn adapt(&mut self, lik: &DVector<f64>) {
        let k = lik.len();
        if k < 2 {
            return;
        }
        let best = lik.imax();
        let dominates = (0..k)
            .filter(|&j| j != best)
            .all(|j| lik[best] > ADAPT_RATIO * lik[j]);
        self.dominant = match (dominates, self.dominant) {
            (false, _) => None,
            (true, Some((j, n))) if j == best => Some((j, n + 1)),
            (true, _) => Some((best, 1)),
        };
        self.tpm = self.base_tpm.clone();
        if let Some((j, n)) = self.dominant {
            if n >= ADAPT_STREAK {
                let off: f64 = (0..k).filter(|&i| i != j).map(|i| self.base_tpm[(j, i)]).sum();
                for i in 0..k {
                    self.tpm[(j, i)] = if i == j {
                        ADAPT_SELF
                    } else if off > 0.0 {
                        self.base_tpm[(j, i)] * (1.0 - ADAPT_SELF) / off
                    } else {
                        (1.0 - ADAPT_SELF) / (k - 1) as f64
                    };
                }
            }
        }
    }
}

/// Moment-matched merge of Gaussians under `weights`.
pub fn moment_match(gs: &[Gaussian], weights: &[f64]) -> Gaussian {
    let mut mean = StateVector::zeros();
    for (g, &w) in gs.iter().zip(weights) {
        mean += w * g.mean;
    }
    let mut cov = StateCov::zeros();
    for (g, &w) in gs.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        let d = g.mean - mean;
        cov += w * (g.cov + d * d.transpose());
    }
    symmetrize(&mut cov);
    Gaussian { mean, cov }
}

pub fn combined_estimate(filters: &[Gaussian], mu: &DVector<f64>) -> Gaussian {
    moment_match(filters, mu.as_slice())
}

/// Position spread relative to the box diagonal of the estimate.
pub fn uncertainty_of(g: &Gaussian) -> f64 {
    let spread = (g.cov[(CX, CX)] + g.cov[(CY, CY)]).max(0.0).sqrt();
    let diag = g.mean[W].hypot(g.mean[H]).max(crate::geometry::MIN_EXTENT);
    spread / diag
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManeuverScore {
    pub score: f64,
    pub is_stable: bool,
}

/// Windowed motion-state score from recent CV probabilities (oldest first).
/// Only the last `window` values are used.
pub fn maneuver_score(cv_history: &[f64], window: usize, theta_stable: f64) -> ManeuverScore {
    let start = cv_history.len().saturating_sub(window.max(1));
    let recent = &cv_history[start..];
    if recent.is_empty() {
        return ManeuverScore {
            score: 1.0,
            is_stable: false,
        };
    }
    let mean = recent.iter().sum::<f64>() / recent.len() as f64;
    ManeuverScore {
        score: (1.0 - mean).clamp(0.0, 1.0),
        is_stable: mean >= theta_stable,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::{measurement_fn, AX, OMEGA, VX, VY};

    fn gaussian(cx: f64, vx: f64, var: f64) -> Gaussian {
        let mut mean = StateVector::zeros();
        mean[CX] = cx;
        mean[CY] = 10.0;
        mean[VX] = vx;
        mean[W] = 20.0;
        mean[H] = 10.0;
        Gaussian::new(mean, StateCov::identity() * var)
    }

    fn bank(gs: [Gaussian; 3], mu: [f64; 3], tpm: [[f64; 3]; 3]) -> ImmState {
        ImmState::from_parts(
            ModelId::ALL.to_vec(),
            gs.to_vec(),
            DVector::from_row_slice(&mu),
            DMatrix::from_fn(3, 3, |i, j| tpm[i][j]),
        )
    }

    #[test]
    fn default_tpm_rows_stochastic() {
        let t = ImmConfig::default().tpm;
        for row in t {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((t[0][1] - 0.025).abs() < 1e-15);
        let t = tpm_with_self(0.9);
        assert!((t[0][1] - 0.05).abs() < 1e-15 && (t[2][0] - 0.05).abs() < 1e-15);
    }

    #[test]
    fn identity_tpm_mix_is_noop() {
        let gs = [gaussian(0.0, 1.0, 1.0), gaussian(5.0, 2.0, 2.0), gaussian(9.0, 0.0, 3.0)];
        let id = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let s = bank(gs.clone(), [0.2, 0.3, 0.5], id);
        let mixed = s.mix();
        for (m, g) in mixed.gaussians.iter().zip(&gs) {
            assert!((m.mean - g.mean).amax() < 1e-12);
            assert!((m.cov - g.cov).amax() < 1e-12);
        }
    }

    #[test]
    fn uniform_tpm_mix_is_full_merge() {
        let gs = [gaussian(0.0, 1.0, 1.0), gaussian(5.0, 2.0, 2.0), gaussian(9.0, 0.0, 3.0)];
        let mu = [1.0 / 3.0; 3];
        let s = bank(gs.clone(), mu, [[1.0 / 3.0; 3]; 3]);
        let merged = moment_match(&gs, &mu);
        for m in s.mix().gaussians {
            assert!((m.mean - merged.mean).amax() < 1e-12);
            assert!((m.cov - merged.cov).amax() < 1e-12);
        }
    }

    #[test]
    fn mixing_normalizer_hand_case() {
        // mu = (0.5, 0.5, 0); no transitions into CT.
        let tpm = [[0.9, 0.1, 0.0], [0.2, 0.8, 0.0], [0.3, 0.3, 0.4]];
        let gs = [gaussian(0.0, 1.0, 1.0), gaussian(4.0, 1.0, 1.0), gaussian(8.0, 1.0, 1.0)];
        let s = bank(gs.clone(), [0.5, 0.5, 0.0], tpm);
        let mixed = s.mix();
        assert!((mixed.c[0] - 0.55).abs() < 1e-15);
        assert!((mixed.c[1] - 0.45).abs() < 1e-15);
        assert_eq!(mixed.c[2], 0.0);
        // c_CT underflows, so CT falls back to the combined estimate.
        assert_eq!(mixed.gaussians[2], s.combined);
        // CV mixing weights 0.45/0.55 and 0.10/0.55.
        let want = 0.45 / 0.55 * 0.0 + 0.10 / 0.55 * 4.0;
        assert!((mixed.gaussians[0].mean[CX] - want).abs() < 1e-12);
    }

    #[test]
    fn combined_estimate_cases() {
        let gs = [gaussian(0.0, 1.0, 1.0), gaussian(5.0, 2.0, 2.0), gaussian(9.0, 0.0, 3.0)];
        let c = combined_estimate(&gs, &DVector::from_row_slice(&[1.0, 0.0, 0.0]));
        assert_eq!(c, gs[0]);

        let same = [gs[1].clone(), gs[1].clone(), gs[1].clone()];
        let c = combined_estimate(&same, &DVector::from_row_slice(&[0.2, 0.7, 0.1]));
        assert!((c.mean - gs[1].mean).amax() < 1e-12 && (c.cov - gs[1].cov).amax() < 1e-12);

        let a = Gaussian::new(StateVector::zeros(), StateCov::zeros());
        let mut b = a.clone();
        b.mean[CX] = 2.0;
        let c = moment_match(&[a, b], &[0.5, 0.5]);
        assert_eq!(c.mean[CX], 1.0);
        assert_eq!(c.cov[(CX, CX)], 1.0);
    }

    #[test]
    fn maneuver_score_examples() {
        let s = maneuver_score(&[1.0, 1.0, 1.0], 3, 0.55);
        assert_eq!(s, ManeuverScore { score: 0.0, is_stable: true });
        let s = maneuver_score(&[0.0, 0.0, 0.0], 3, 0.55);
        assert_eq!(s, ManeuverScore { score: 1.0, is_stable: false });
        let s = maneuver_score(&[0.9, 0.5, 0.4], 3, 0.55);
        assert!((s.score - 0.4).abs() < 1e-12 && s.is_stable);
        // only the window counts
        let s = maneuver_score(&[0.0, 0.0, 1.0, 1.0, 1.0], 3, 0.55);
        assert!(s.is_stable);
    }

    #[test]
    fn coast_freezes_mu_and_inflates_cov() {
        let cfg = ImmConfig::default();
        let params = FilterParams::default();
        let mut s = ImmState::new(gaussian(50.0, 2.0, 4.0), &cfg);
        s.mu = DVector::from_row_slice(&[0.6, 0.3, 0.1]);
        s.refresh_combined();
        let next = s.step(None, &params, &cfg).unwrap();
        assert_eq!(next.mu, s.mu);
        assert!(next.combined.cov.trace() >= s.combined.cov.trace());
    }

    #[test]
    fn equal_likelihoods_only_mix() {
        // Identical filters give identical likelihoods, so mu' = c.
        let cfg = ImmConfig::default();
        let params = FilterParams::default();
        let mut s = ImmState::new(gaussian(50.0, 0.0, 4.0), &cfg);
        s.models = vec![ModelId::Cv; 3];
        s.mu = DVector::from_row_slice(&[0.7, 0.2, 0.1]);
        let z = measurement_fn(&s.combined.mean) + Measurement::new(0.5, -0.3, 0.1, 0.0);
        let next = s.step(Some(&z), &params, &cfg).unwrap();
        let c = s.tpm.transpose() * &s.mu;
        assert!((next.mu - c).amax() < 1e-12);
    }

    #[test]
    fn straight_line_favors_cv() {
        let cfg = ImmConfig::default();
        let params = FilterParams::default();
        let mut truth = StateVector::zeros();
        truth[CX] = 100.0;
        truth[CY] = 100.0;
        truth[VX] = 3.0;
        truth[VY] = 1.0;
        truth[W] = 20.0;
        truth[H] = 12.0;
        let mut init = Gaussian::new(truth, StateCov::identity());
        init.mean[VX] = 0.0;
        init.mean[VY] = 0.0;
        let mut s = ImmState::new(init, &cfg);
        for _ in 0..20 {
            truth = crate::motion::transition(ModelId::Cv, &truth, 1.0);
            s = s.step(Some(&measurement_fn(&truth)), &params, &cfg).unwrap();
            assert!((s.mu.sum() - 1.0).abs() < 1e-9);
        }
        assert!(s.mu[0] > s.mu[1] && s.mu[0] > s.mu[2], "{:?}", s.mu);
    }

    #[test]
    fn permuting_models_keeps_combined() {
        let cfg = ImmConfig::default();
        let params = FilterParams::default();
        let mut g = gaussian(40.0, 2.0, 3.0);
        g.mean[AX] = 0.2;
        g.mean[OMEGA] = 0.1;
        g.mean[VY] = -1.0;
        let base = ImmState::from_parts(
            ModelId::ALL.to_vec(),
            vec![g.clone(); 3],
            DVector::from_row_slice(&[0.5, 0.3, 0.2]),
            DMatrix::from_row_slice(3, 3, &[0.9, 0.06, 0.04, 0.05, 0.9, 0.05, 0.02, 0.08, 0.9]),
        );
        let perm = [2usize, 0, 1];
        let permuted = ImmState::from_parts(
            perm.iter().map(|&i| base.models[i]).collect(),
            perm.iter().map(|&i| base.filters[i].clone()).collect(),
            DVector::from_iterator(3, perm.iter().map(|&i| base.mu[i])),
            DMatrix::from_fn(3, 3, |r, c| base.tpm[(perm[r], perm[c])]),
        );
        let z = Measurement::new(43.0, 9.0, 20.5, 10.0);
        let (mut a, mut b) = (base, permuted);
        for k in 0..5 {
            let zz = (k % 2 == 0).then_some(&z);
            a = a.step(zz, &params, &cfg).unwrap();
            b = b.step(zz, &params, &cfg).unwrap();
        }
        assert!((a.combined.mean - b.combined.mean).amax() < 1e-9);
        assert!((a.combined.cov - b.combined.cov).amax() < 1e-9);
    }

    #[test]
    fn adaptive_sharpening_engages_and_reverts() {
        let cfg = ImmConfig {
            adaptive: true,
            ..ImmConfig::default()
        };
        let mut s = ImmState::new(gaussian(0.0, 0.0, 1.0), &cfg);
        let dominant = DVector::from_row_slice(&[1.0, 0.01, 0.01]);
        for _ in 0..3 {
            s.adapt(&dominant);
        }
        assert_eq!(s.tpm[(0, 0)], ADAPT_SELF);
        assert!((s.tpm.row(0).sum() - 1.0).abs() < 1e-12);
        s.adapt(&DVector::from_row_slice(&[1.0, 0.5, 0.5]));
        assert_eq!(s.tpm, s.base_tpm);
    }

    #[test]
    fn uncertainty_is_scale_free() {
        let mut g = gaussian(0.0, 0.0, 0.0);
        g.cov[(CX, CX)] = 9.0;
        g.cov[(CY, CY)] = 16.0;
        g.mean[W] = 3.0;
        g.mean[H] = 4.0;
        assert!((uncertainty_of(&g) - 1.0).abs() < 1e-15);
    }
}
