//! Flat `key = value` configuration with `#` comments.
//!
//! Unknown keys are errors. Missing keys keep their defaults. See
//! `docs/config.md` for the key list.

use std::collections::HashSet;

use crate::association::AufConfig;
use crate::error::{Error, Result};
use crate::geometry::Measurement;
use crate::imm::{tpm_with_self, FilterParams, ImmConfig};
use crate::tracker::TrackerConfig;
use crate::ukf::MeasCov;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Config {
    pub tracker: TrackerConfig,
    pub auf: AufConfig,
    pub imm: ImmConfig,
    pub filter: FilterParams,
}

/// Splits text into `(line, key, value)` triples, rejecting duplicates.
pub fn parse_pairs(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: idx + 1,
                column: 1,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = k.trim().to_string();
        if !seen.insert(key.clone()) {
            return Err(Error::config(&key, format!("set twice (line {})", idx + 1)));
        }
        out.push((idx + 1, key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn parse_f64(key: &str, v: &str) -> Result<f64> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(Error::config(key, format!("expected a number, got `{v}`"))),
    }
}

pub fn parse_u32(key: &str, v: &str) -> Result<u32> {
    v.parse()
        .map_err(|_| Error::config(key, format!("expected a non-negative integer, got `{v}`")))
}

pub fn parse_u64(key: &str, v: &str) -> Result<u64> {
    v.parse()
        .map_err(|_| Error::config(key, format!("expected a non-negative integer, got `{v}`")))
}

pub fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true/false, got `{v}`"))),
    }
}

fn require(cond: bool, key: &str, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(key, msg))
    }
}

pub fn load_config(text: &str) -> Result<Config> {
    let mut c = Config::default();
    let mut meas_center = 1.0;
    let mut meas_size = 4.0;
    let mut tpm_self = None;
    let mut mu = c.imm.mu_init;

    for (_, key, v) in parse_pairs(text)? {
        let k = key.as_str();
        let f = || parse_f64(k, &v);
        match k {
            "n_init" => c.tracker.n_init = parse_u32(k, &v)?,
            "max_age_lost" => c.tracker.max_age_lost = parse_u32(k, &v)?,
            "det_conf_min" => c.tracker.det_conf_min = f()?,
            "det_conf_high" => c.tracker.det_conf_high = f()?,
            "stage1_iou_min" => c.tracker.gates.stable_iou_min = f()?,
            "stage2_iou_min" => c.tracker.gates.maneuver_iou_min = f()?,
            "stage3_iou_min" => c.tracker.gates.lost_iou_min = f()?,
            "stage3_gate_scale" => c.tracker.gates.lost_gate_scale = f()?,
            "low_conf_stage" => c.tracker.low_conf_stage = parse_bool(k, &v)?,
            "max_match_cost" => c.tracker.max_match_cost = f()?,

            "alpha_min" => c.auf.alpha_min = f()?,
            "alpha_max" => c.auf.alpha_max = f()?,
            "u_ref" => c.auf.u_ref = f()?,
            "lambda_stable" => c.auf.lambda_stable = f()?,
            "lambda_maneuver" => c.auf.lambda_maneuver = f()?,
            "gate_chi2" => c.auf.gate_chi2 = f()?,

            "tpm_self" => tpm_self = Some(f()?),
            "mu_cv" => mu[0] = f()?,
            "mu_ca" => mu[1] = f()?,
            "mu_ct" => mu[2] = f()?,
            "imm_adaptive" => c.imm.adaptive = parse_bool(k, &v)?,
            "theta_stable" => c.imm.theta_stable = f()?,
            "stability_window" => c.imm.stability_window = parse_u32(k, &v)? as usize,

            "ut_alpha" => c.filter.ut.alpha = f()?,
            "ut_beta" => c.filter.ut.beta = f()?,
            "ut_kappa" => c.filter.ut.kappa = f()?,

            "sigma_cv_vel" => c.filter.noise.sigma_cv_vel = f()?,
            "sigma_ca_acc" => c.filter.noise.sigma_ca_acc = f()?,
            "sigma_ct_omega" => c.filter.noise.sigma_ct_omega = f()?,
            "sigma_wh" => c.filter.noise.sigma_wh = f()?,
            "meas_var_center" => meas_center = f()?,
            "meas_var_size" => meas_size = f()?,
            "dt" => c.filter.dt = f()?,
            _ => return Err(Error::config(k, "unknown key")),
        }
    }

    if let Some(p) = tpm_self {
        require((0.0..=1.0).contains(&p), "tpm_self", "must lie in [0, 1]")?;
        c.imm.tpm = tpm_with_self(p);
    }
    c.imm.mu_init = mu;
    c.filter.r = MeasCov::from_diagonal(&Measurement::new(meas_center, meas_center, meas_size, meas_size));

    validate(&c, meas_center, meas_size)?;
    Ok(c)
}

fn validate(c: &Config, meas_center: f64, meas_size: f64) -> Result<()> {
    let t = &c.tracker;
    require(t.n_init >= 1, "n_init", "must be at least 1")?;
    require(t.max_age_lost >= 1, "max_age_lost", "must be at least 1")?;
    require(
        (0.0..=1.0).contains(&t.det_conf_min),
        "det_conf_min",
        "must lie in [0, 1]",
    )?;
    require(
        (0.0..=1.0).contains(&t.det_conf_high),
        "det_conf_high",
        "must lie in [0, 1]",
    )?;
    require(
        t.det_conf_min <= t.det_conf_high,
        "det_conf_min",
        "must not exceed det_conf_high",
    )?;
    for (k, v) in [
        ("stage1_iou_min", t.gates.stable_iou_min),
        ("stage2_iou_min", t.gates.maneuver_iou_min),
        ("stage3_iou_min", t.gates.lost_iou_min),
    ] {
        require((0.0..=1.0).contains(&v), k, "must lie in [0, 1]")?;
    }
    require(t.gates.lost_gate_scale > 0.0, "stage3_gate_scale", "must be positive")?;
    require(t.max_match_cost >= 0.0, "max_match_cost", "must be non-negative")?;

    let a = &c.auf;
    require((0.0..=1.0).contains(&a.alpha_min), "alpha_min", "must lie in [0, 1]")?;
    require((0.0..=1.0).contains(&a.alpha_max), "alpha_max", "must lie in [0, 1]")?;
    require(
        a.alpha_min <= a.alpha_max,
        "alpha_min",
        &format!("alpha_min ({}) must not exceed alpha_max ({})", a.alpha_min, a.alpha_max),
    )?;
    require(a.u_ref > 0.0, "u_ref", "must be positive")?;
    require(a.lambda_stable > 0.0, "lambda_stable", "must be positive")?;
    require(a.lambda_maneuver > 0.0, "lambda_maneuver", "must be positive")?;
    require(a.gate_chi2 > 0.0, "gate_chi2", "must be positive")?;

    let i = &c.imm;
    require(
        i.mu_init.iter().all(|&m| m >= 0.0) && (i.mu_init.iter().sum::<f64>() - 1.0).abs() < 1e-9,
        "mu_cv",
        "mu_cv, mu_ca and mu_ct must be non-negative and sum to 1",
    )?;
    require(
        i.theta_stable > 0.0 && i.theta_stable < 1.0,
        "theta_stable",
        "must lie in (0, 1)",
    )?;
    require(i.stability_window >= 1, "stability_window", "must be at least 1")?;

    let f = &c.filter;
    require(f.ut.alpha > 0.0 && f.ut.alpha <= 1.0, "ut_alpha", "must lie in (0, 1]")?;
    require(
        crate::motion::STATE_DIM as f64 + f.ut.lambda() > 0.0,
        "ut_kappa",
        "ut_alpha^2 * (9 + ut_kappa) must be positive",
    )?;
    for (k, v) in [
        ("sigma_cv_vel", f.noise.sigma_cv_vel),
        ("sigma_ca_acc", f.noise.sigma_ca_acc),
        ("sigma_ct_omega", f.noise.sigma_ct_omega),
        ("sigma_wh", f.noise.sigma_wh),
        ("meas_var_center", meas_center),
        ("meas_var_size", meas_size),
        ("dt", f.dt),
    ] {
        require(v > 0.0, k, "must be positive")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_is_defaults() {
        assert_eq!(load_config("").unwrap(), Config::default());
        assert_eq!(load_config("# only a comment\n\n").unwrap(), Config::default());
    }

    #[test]
    fn defaults_match_documented_values() {
        let c = Config::default();
        assert_eq!(c.tracker.n_init, 3);
        assert_eq!(c.tracker.max_age_lost, 30);
        assert_eq!((c.tracker.det_conf_min, c.tracker.det_conf_high), (0.1, 0.5));
        assert_eq!((c.auf.alpha_min, c.auf.alpha_max, c.auf.u_ref), (0.3, 0.8, 1.0));
        assert_eq!((c.auf.lambda_stable, c.auf.lambda_maneuver, c.auf.gate_chi2), (1.0, 0.5, 13.277));
        assert_eq!((c.imm.theta_stable, c.imm.stability_window), (0.55, 3));
        assert_eq!((c.filter.ut.alpha, c.filter.ut.beta, c.filter.ut.kappa), (0.5, 2.0, 0.0));
        assert_eq!(c.filter.r, MeasCov::from_diagonal(&Measurement::new(1.0, 1.0, 4.0, 4.0)));
    }

    #[test]
    fn alpha_bounds_violation_names_both_keys() {
        let err = load_config("alpha_min = 0.9").unwrap_err().to_string();
        assert!(err.contains("alpha_min") && err.contains("alpha_max"), "{err}");
    }

    #[test]
    fn tpm_self_normalizes_rows() {
        let c = load_config("tpm_self = 0.9").unwrap();
        for (i, row) in c.imm.tpm.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                let want = if i == j { 0.9 } else { 0.05 };
                assert!((v - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn unknown_key_is_fatal() {
        let err = load_config("alpha_mni = 0.4").unwrap_err();
        assert!(err.to_string().contains("alpha_mni"));
    }

    #[test]
    fn type_mismatch_names_key() {
        let err = load_config("n_init = three").unwrap_err();
        assert!(err.to_string().contains("n_init"));
        let err = load_config("low_conf_stage = maybe").unwrap_err();
        assert!(err.to_string().contains("low_conf_stage"));
    }

    #[test]
    fn values_and_comments() {
        let c = load_config("n_init = 5 # confirm late\nlow_conf_stage = off\nmeas_var_size = 9\n").unwrap();
        assert_eq!(c.tracker.n_init, 5);
        assert!(!c.tracker.low_conf_stage);
        assert_eq!(c.filter.r[(2, 2)], 9.0);
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(load_config("n_init = 2\nn_init = 3").is_err());
    }
}
