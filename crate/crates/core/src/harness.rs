//! Monte Carlo experiment driver: parameter sweeps over reproducible channel
//! draws, aggregation, and plot-ready CSV output.
//!
//! Config files carry thresholds in dB / dBm with explicit unit suffixes in
//! the field names; every internal computation runs in linear watts. Trials
//! are independent work items executed in parallel, but each trial's channels
//! are keyed by `(seed, trial_index)`, results are assembled in trial order,
//! and aggregation is sequential, so identical configs produce byte-identical
//! CSV regardless of the worker count. Infeasible trials are counted and
//! reported through `feasible_frac`, never resampled.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::jbps::{self, JbpsError, UserCertificate};
use crate::model::{compute_bounds, sample_channels, ModelError, SeedTag, SystemParams};
use crate::uplink::{self, UplinkError};
use crate::zf::{self, ZfError};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts * 1e3).log10()
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("writing {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Why a trial produced no total power.
#[derive(Debug, Error)]
pub enum TrialError {
    #[error("downlink: {0}")]
    Downlink(#[from] JbpsError),
    #[error("zero-forcing: {0}")]
    ZeroForcing(#[from] ZfError),
    #[error("uplink: {0}")]
    Uplink(#[from] UplinkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Jbps,
    Zf,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Method::Jbps => "jbps",
            Method::Zf => "zf",
        })
    }
}

/// The swept axis and its grid. Exactly one axis per experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "axis", content = "values")]
pub enum Sweep {
    #[serde(rename = "gamma_ul_db")]
    GammaUlDb(Vec<f64>),
    #[serde(rename = "n_t")]
    NT(Vec<usize>),
    #[serde(rename = "q_dbm")]
    QDbm(Vec<f64>),
}

impl Sweep {
    pub fn var_name(&self) -> &'static str {
        match self {
            Sweep::GammaUlDb(_) => "gamma_ul_db",
            Sweep::NT(_) => "n_t",
            Sweep::QDbm(_) => "q_dbm",
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match self {
            Sweep::GammaUlDb(v) | Sweep::QDbm(v) => v.clone(),
            Sweep::NT(v) => v.iter().map(|&n| n as f64).collect(),
        }
    }

    fn apply(&self, params: &mut SystemParams, value: f64) {
        match self {
            Sweep::GammaUlDb(_) => params.gamma_ul = db_to_linear(value),
            Sweep::NT(_) => params.n_t = value as usize,
            Sweep::QDbm(_) => params.q_bar = dbm_to_watts(value),
        }
    }
}

/// Experiment configuration; thresholds in dB / dBm, converted on use.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub k: usize,
    pub n_t: usize,
    pub n_r: usize,
    /// Antenna noise power at the mobile stations (dBm).
    pub sigma2_dbm: f64,
    /// Decoder processing noise power (dBm).
    pub delta2_dbm: f64,
    /// Base station noise power (dBm).
    pub sigma2_bs_dbm: f64,
    /// Downlink SINR target (dB).
    pub gamma_dl_db: f64,
    /// Uplink SINR target (dB).
    pub gamma_ul_db: f64,
    /// Harvested-power target (dBm).
    pub q_dbm: f64,
    /// Per-node power cap (dBm).
    pub p_max_dbm: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub sic_residual_fraction: f64,
    pub sweep: Sweep,
    pub trials: u64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub output_path: String,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 2,
            n_t: 4,
            n_r: 2,
            sigma2_dbm: 10.0,
            delta2_dbm: 10.0,
            sigma2_bs_dbm: 10.0,
            gamma_dl_db: -20.0,
            gamma_ul_db: -40.0,
            q_dbm: 20.0,
            p_max_dbm: 30.0,
            eps1: 0.1,
            eps2: 0.1,
            sic_residual_fraction: 0.4,
            sweep: Sweep::GammaUlDb(vec![-50.0, -45.0, -40.0, -35.0, -30.0]),
            trials: 500,
            seed: 20260809,
            methods: vec![Method::Jbps, Method::Zf],
            output_path: "sweep.csv".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_json_file(path: &str) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.into(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Config("trials must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(HarnessError::Config("methods must not be empty".into()));
        }
        if self.sweep.values().is_empty() {
            return Err(HarnessError::Config("sweep values must not be empty".into()));
        }
        self.params()?;
        Ok(())
    }

    /// Scenario parameters in linear watts.
    pub fn params(&self) -> Result<SystemParams, HarnessError> {
        let params = SystemParams {
            k: self.k,
            n_t: self.n_t,
            n_r: self.n_r,
            sigma2_ms: dbm_to_watts(self.sigma2_dbm),
            delta2_ms: dbm_to_watts(self.delta2_dbm),
            sigma2_bs: dbm_to_watts(self.sigma2_bs_dbm),
            gamma_dl: db_to_linear(self.gamma_dl_db),
            gamma_ul: db_to_linear(self.gamma_ul_db),
            q_bar: dbm_to_watts(self.q_dbm),
            p_max: dbm_to_watts(self.p_max_dbm),
            eps1: self.eps1,
            eps2: self.eps2,
            eta: 1.0,
            sic_residual_fraction: self.sic_residual_fraction,
        };
        // The n_t sweep may visit antenna counts below the base config's.
        let min_nt = match &self.sweep {
            Sweep::NT(values) => values.iter().copied().min().unwrap_or(self.n_t),
            _ => self.n_t,
        };
        let mut check = params.clone();
        check.n_t = min_nt.min(self.n_t);
        check.validate()?;
        Ok(params)
    }
}

/// Per-trial diagnostics alongside the total power.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub downlink_power: f64,
    pub uplink_power: f64,
    /// Largest per-user rank ratio of the relaxation (zero for zero-forcing).
    pub max_rank_ratio: f64,
    pub rank_flagged: bool,
    /// Any user's transmit power above the cap (reported, not rejected).
    pub cap_violation: bool,
    pub uplink_iterations: usize,
}

/// One realization end to end: downlink design (by the requested method)
/// plus the uplink fixed point on the same channels.
pub fn run_point(
    params: &SystemParams,
    trial_index: u64,
    seed: u64,
    method: Method,
) -> Result<(f64, Diagnostics), TrialError> {
    let ch = sample_channels(params, trial_index, seed);
    let bounds = compute_bounds(params, &ch);
    let up = uplink::uplink_solve(params, &ch, &bounds)?;
    let uplink_power: f64 = up.p_up.iter().sum();

    let (downlink_power, max_rank_ratio, rank_flagged, cap_violation) = match method {
        Method::Jbps => {
            let sol = jbps::solve_downlink(params, &ch, &bounds)?;
            let rr = sol
                .certificates
                .iter()
                .map(|c| c.rank_ratio)
                .fold(0.0f64, f64::max);
            let cap = sol.cap_violation.iter().any(|&c| c);
            (sol.objective, rr, sol.rank_flagged, cap)
        }
        Method::Zf => {
            let sol = zf::zf_solve(params, &ch, &bounds)?;
            let cap = sol.cap_violation.iter().any(|&c| c);
            (sol.objective, 0.0, false, cap)
        }
    };

    Ok((
        downlink_power + uplink_power,
        Diagnostics {
            downlink_power,
            uplink_power,
            max_rank_ratio,
            rank_flagged,
            cap_violation,
            uplink_iterations: up.iterations,
        },
    ))
}

/// One aggregated row of a sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: String,
    pub value: f64,
    pub method: Method,
    /// Mean total power over feasible trials, in dBm of the mean watts.
    pub mean_dbm: f64,
    /// Standard deviation of the per-trial powers in dBm.
    pub std_dbm: f64,
    pub feasible_frac: f64,
    pub mean_rank_ratio: f64,
    /// Number of feasible trials behind the means.
    pub trials: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// CSV with the stable header
    /// `sweep_var,value,method,mean_dbm,std_dbm,feasible_frac,mean_rank_ratio,trials`.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("sweep_var,value,method,mean_dbm,std_dbm,feasible_frac,mean_rank_ratio,trials\n");
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.6},{:.4},{:.3e},{}\n",
                row.sweep_var,
                row.value,
                row.method,
                row.mean_dbm,
                row.std_dbm,
                row.feasible_frac,
                row.mean_rank_ratio,
                row.trials
            ));
        }
        out
    }

    /// True if some sweep point had no feasible trial for some method.
    pub fn has_infeasible_only_point(&self) -> bool {
        self.rows.iter().any(|r| r.trials == 0)
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }
}

/// Runs the configured sweep. Deterministic for a given config: per-trial
/// channels are keyed by trial index and aggregation happens in index order.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult, HarnessError> {
    config.validate()?;
    let base = config.params()?;
    let mut rows = Vec::new();
    for value in config.sweep.values() {
        let mut params = base.clone();
        config.sweep.apply(&mut params, value);
        params.validate()?;
        for &method in &config.methods {
            let outcomes: Vec<Option<(f64, f64)>> = (0..config.trials)
                .into_par_iter()
                .map(|trial| {
                    run_point(&params, trial, config.seed, method)
                        .ok()
                        .map(|(total, diag)| (total, diag.max_rank_ratio))
                })
                .collect();

            let feasible: Vec<(f64, f64)> = outcomes.iter().flatten().copied().collect();
            let used = feasible.len() as u64;
            let (mean_dbm, std_dbm, mean_rank) = if feasible.is_empty() {
                (f64::NAN, f64::NAN, f64::NAN)
            } else {
                let mean_w: f64 =
                    feasible.iter().map(|(p, _)| p).sum::<f64>() / used as f64;
                let dbms: Vec<f64> = feasible.iter().map(|(p, _)| watts_to_dbm(*p)).collect();
                let mean_db: f64 = dbms.iter().sum::<f64>() / used as f64;
                let var: f64 =
                    dbms.iter().map(|d| (d - mean_db).powi(2)).sum::<f64>() / used as f64;
                let mean_rank: f64 =
                    feasible.iter().map(|(_, r)| r).sum::<f64>() / used as f64;
                (watts_to_dbm(mean_w), var.sqrt(), mean_rank)
            };
            rows.push(SweepRow {
                sweep_var: config.sweep.var_name().into(),
                value,
                method,
                mean_dbm,
                std_dbm,
                feasible_frac: used as f64 / config.trials as f64,
                mean_rank_ratio: mean_rank,
                trials: used,
            });
        }
    }
    Ok(SweepResult { rows })
}

/// Writes the sweep CSV to the configured (or overridden) path.
pub fn write_csv(result: &SweepResult, path: &str) -> Result<(), HarnessError> {
    std::fs::write(path, result.to_csv()).map_err(|source| HarnessError::Io {
        path: path.into(),
        source,
    })
}

// ─── Joint solution for the solve / certify surfaces ────────────────────────

/// Everything one realization produced, serializable for later certification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JointSolution {
    pub method: Method,
    pub params: SystemParams,
    pub seed_tag: SeedTag,
    /// Downlink beamformers.
    pub v: Vec<Vec<Complex64>>,
    /// Uplink receive filters.
    pub w: Vec<Vec<Complex64>>,
    pub rho: Vec<f64>,
    pub p_up: Vec<f64>,
    pub downlink_power: f64,
    pub uplink_power: f64,
    pub total_power: f64,
    pub uplink_sinr: Vec<f64>,
    pub uplink_iterations: usize,
    /// Relaxation matrices (present for the jbps method).
    pub z: Option<Vec<crate::linalg::ComplexMatrix>>,
    /// `(lambda_k, mu_k)` per user (present for the jbps method).
    pub duals: Option<Vec<(f64, f64)>>,
    pub certificates: Option<Vec<UserCertificate>>,
    pub cap_violation: Vec<bool>,
}

/// Solves one realization end to end and packages the result.
pub fn solve_joint(
    params: &SystemParams,
    trial_index: u64,
    seed: u64,
    method: Method,
) -> Result<JointSolution, TrialError> {
    let ch = sample_channels(params, trial_index, seed);
    let bounds = compute_bounds(params, &ch);
    let up = uplink::uplink_solve(params, &ch, &bounds)?;
    let uplink_power: f64 = up.p_up.iter().sum();

    match method {
        Method::Jbps => {
            let sol = jbps::solve_downlink(params, &ch, &bounds)?;
            Ok(JointSolution {
                method,
                params: params.clone(),
                seed_tag: ch.seed_tag,
                v: sol.v.clone(),
                w: up.w,
                rho: sol.rho.clone(),
                p_up: up.p_up,
                downlink_power: sol.objective,
                uplink_power,
                total_power: sol.objective + uplink_power,
                uplink_sinr: up.sinr,
                uplink_iterations: up.iterations,
                z: Some(sol.z.clone()),
                duals: Some(sol.duals.clone()),
                certificates: Some(sol.certificates.clone()),
                cap_violation: sol.cap_violation,
            })
        }
        Method::Zf => {
            let sol = zf::zf_solve(params, &ch, &bounds)?;
            Ok(JointSolution {
                method,
                params: params.clone(),
                seed_tag: ch.seed_tag,
                v: sol.v,
                w: up.w,
                rho: sol.rho,
                p_up: up.p_up,
                downlink_power: sol.objective,
                uplink_power,
                total_power: sol.objective + uplink_power,
                uplink_sinr: up.sinr,
                uplink_iterations: up.iterations,
                z: None,
                duals: None,
                certificates: None,
                cap_violation: sol.cap_violation,
            })
        }
    }
}

/// Re-runs the dual-certificate checks on a saved solution by regenerating
/// its channels from the stored seed tag.
pub fn certify_saved(saved: &JointSolution) -> Result<Vec<UserCertificate>, HarnessError> {
    let (z, duals) = match (&saved.z, &saved.duals) {
        (Some(z), Some(duals)) => (z.clone(), duals.clone()),
        _ => {
            return Err(HarnessError::Config(
                "certification applies to jbps solutions with stored Z and duals".into(),
            ))
        }
    };
    let ch = sample_channels(&saved.params, saved.seed_tag.trial_index, saved.seed_tag.seed);
    let bounds = compute_bounds(&saved.params, &ch);
    let shell = jbps::DownlinkSolution {
        v: saved.v.clone(),
        rho: saved.rho.clone(),
        z,
        objective: saved.downlink_power,
        duals,
        certificates: Vec::new(),
        rank_flagged: false,
        cap_violation: saved.cap_violation.clone(),
        solver_iterations: 0,
        kkt: crate::sdp::KktSummary {
            primal_res: 0.0,
            dual_res: 0.0,
            gap: 0.0,
        },
    };
    Ok(jbps::certify(&shell, &saved.params, &ch, &bounds))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_conversions() {
        assert!((db_to_linear(-20.0) - 0.01).abs() < 1e-15);
        assert!((dbm_to_watts(20.0) - 0.1).abs() < 1e-15);
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((watts_to_dbm(0.1) - 20.0).abs() < 1e-12);
    }

    #[test]
    fn config_round_trip_and_defaults() {
        let config = ExperimentConfig::default();
        config.validate().unwrap();
        let text = serde_json::to_string_pretty(&config).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.trials, 500);
        // Defaults may be omitted in the file.
        let sparse = r#"{"sweep": {"axis": "n_t", "values": [2, 3, 4]}, "trials": 7}"#;
        let cfg = ExperimentConfig::from_json(sparse).unwrap();
        assert_eq!(cfg.trials, 7);
        assert_eq!(cfg.sweep.var_name(), "n_t");
        let params = cfg.params().unwrap();
        assert!((params.q_bar - 0.1).abs() < 1e-12);
        assert!((params.gamma_dl - 0.01).abs() < 1e-15);
    }

    #[test]
    fn config_rejects_bad_input() {
        assert!(ExperimentConfig::from_json("{\"trials\": 0}").is_err());
        let bad_axis = r#"{"sweep": {"axis": "bogus", "values": [1]}}"#;
        assert!(ExperimentConfig::from_json(bad_axis).is_err());
    }

    #[test]
    fn run_point_is_deterministic() {
        let params = SystemParams::default_scenario();
        let (a, _) = run_point(&params, 3, 11, Method::Jbps).unwrap();
        let (b, _) = run_point(&params, 3, 11, Method::Jbps).unwrap();
        assert_eq!(a.to_bits(), b.to_bits(), "identical trials must agree bitwise");
    }

    #[test]
    fn single_user_methods_agree() {
        let mut params = SystemParams::default_scenario();
        params.k = 1;
        params.n_t = 2;
        let (jbps_total, _) = run_point(&params, 0, 5, Method::Jbps).unwrap();
        let (zf_total, _) = run_point(&params, 0, 5, Method::Zf).unwrap();
        assert!(
            (jbps_total - zf_total).abs() <= 1e-5 * (1.0 + jbps_total),
            "{jbps_total} vs {zf_total}"
        );
    }

    #[test]
    fn vanishing_downlink_leaves_uplink_power() {
        // q_bar also caps the uplink power, so it can only shrink down to a
        // level that still admits the uplink; the downlink demand vanishes
        // long before that.
        let mut params = SystemParams::default_scenario();
        params.gamma_dl = 1e-9;
        params.q_bar = 1e-3;
        params.eps1 = 0.0;
        let (total, diag) = run_point(&params, 1, 9, Method::Jbps).unwrap();
        assert!(diag.downlink_power < 1e-3 * diag.uplink_power);
        assert!((total - diag.uplink_power).abs() <= 1e-3 * total);
    }

    #[test]
    fn sweep_runs_and_serializes() {
        let config = ExperimentConfig {
            trials: 8,
            sweep: Sweep::GammaUlDb(vec![-45.0, -35.0]),
            ..ExperimentConfig::default()
        };
        let result = run_sweep(&config).unwrap();
        assert_eq!(result.rows.len(), 4); // 2 values x 2 methods
        let csv = result.to_csv();
        assert!(csv.starts_with(
            "sweep_var,value,method,mean_dbm,std_dbm,feasible_frac,mean_rank_ratio,trials\n"
        ));
        for row in &result.rows {
            assert!(row.feasible_frac > 0.0 && row.feasible_frac <= 1.0);
            assert!(row.mean_dbm.is_finite());
        }
        // Higher uplink target costs more power, method by method.
        for method in [Method::Jbps, Method::Zf] {
            let vals: Vec<f64> = result.rows_for(method).map(|r| r.mean_dbm).collect();
            assert!(vals[1] > vals[0]);
        }
    }

    #[test]
    fn sweep_mean_between_min_and_max() {
        let config = ExperimentConfig {
            trials: 16,
            sweep: Sweep::QDbm(vec![20.0]),
            methods: vec![Method::Zf],
            ..ExperimentConfig::default()
        };
        let params = config.params().unwrap();
        let mut totals = Vec::new();
        for t in 0..config.trials {
            totals.push(run_point(&params, t, config.seed, Method::Zf).unwrap().0);
        }
        let row = &run_sweep(&config).unwrap().rows[0];
        let min = totals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = totals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        assert!(row.mean_dbm >= watts_to_dbm(min) - 1e-9);
        assert!(row.mean_dbm <= watts_to_dbm(max) + 1e-9);
    }

    #[test]
    fn joint_solution_round_trips_and_certifies() {
        let params = SystemParams::default_scenario();
        let sol = solve_joint(&params, 2, 17, Method::Jbps).unwrap();
        let text = serde_json::to_string(&sol).unwrap();
        let back: JointSolution = serde_json::from_str(&text).unwrap();
        let certs = certify_saved(&back).unwrap();
        assert_eq!(certs.len(), params.k);
        for c in &certs {
            assert!(c.rank_ratio <= 1e-6);
            assert!(c.cert_min_eig >= -1e-7 * (1.0 + c.cert_norm));
        }
        // Zero-forcing solutions carry no certificates.
        let zf_sol = solve_joint(&params, 2, 17, Method::Zf).unwrap();
        assert!(certify_saved(&zf_sol).is_err());
    }
}
