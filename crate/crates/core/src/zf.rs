//! Closed-form zero-forcing baseline for the downlink.
//!
//! Each user's beamformer is restricted to the null space of the other
//! users' channels, which removes multiuser interference and decouples the
//! problem per user. At the per-user optimum both the SINR and the
//! harvested-power constraints hold with equality; eliminating the required
//! received power between the two leaves a scalar quadratic in the splitting
//! ratio `rho`,
//!
//! `alpha * rho^2 - beta * rho - c = 0`,
//!
//! with `alpha = gamma_dl (g_bar + sigma2) + g_tilde + sigma2`,
//! `beta = alpha - q_bar - gamma_dl * delta2` and `c = gamma_dl * delta2`.
//! The polynomial is negative at 0 and equals `q_bar` at 1, so exactly one
//! root lies in (0, 1); it is the `+` branch of the quadratic formula. The
//! beamformer then points along the projected channel with just enough power
//! to meet the (now equal) received-power requirement.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cdot, cnorm, null_space_basis, ComplexMatrix};
use crate::model::{ChannelRealization, RobustBounds, SystemParams};

/// Projected-channel norms below `DEGENERACY_THRESHOLD * |h|` count as
/// zero-forcing infeasible instead of producing huge powers.
pub const DEGENERACY_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ZfError {
    #[error("user {user}: channel is orthogonal to the zero-forcing null space")]
    DegenerateChannel { user: usize },
    #[error("zero-forcing requires n_t >= k, got n_t = {n_t}, k = {k}")]
    TooFewAntennas { n_t: usize, k: usize },
}

/// Per-user quadratic coefficients for the splitting-ratio equation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RhoQuadratic {
    pub alpha: f64,
    pub beta: f64,
    pub c: f64,
}

/// Zero-forcing design for one realization.
#[derive(Debug, Clone)]
pub struct ZfSolution {
    /// Beamformers (entries carry sqrt(W)).
    pub v: Vec<Vec<Complex64>>,
    /// Power-splitting ratios.
    pub rho: Vec<f64>,
    /// Per-user transmit powers `p_k = |v_k|^2` (W).
    pub p: Vec<f64>,
    /// Per-user required received powers (W).
    pub tau: Vec<f64>,
    /// Per-user quadratic coefficients behind `rho`.
    pub quad: Vec<RhoQuadratic>,
    /// Users whose power exceeds the cap (flagged, not rejected).
    pub cap_violation: Vec<bool>,
    /// Total transmit power (W).
    pub objective: f64,
}

/// Splitting ratio for user `k` with its quadratic coefficients.
///
/// The returned `rho` is the unique root of
/// `alpha rho^2 - beta rho - c = 0` inside (0, 1).
pub fn zf_rho(params: &SystemParams, bounds: &RobustBounds, k: usize) -> (f64, RhoQuadratic) {
    let gamma = params.gamma_dl;
    let sigma2 = params.sigma2_ms;
    let alpha = gamma * (bounds.g_bar[k] + sigma2) + bounds.g_tilde[k] + sigma2;
    let c = gamma * params.delta2_ms;
    let beta = alpha - params.q_bar - c;
    let disc = (beta * beta + 4.0 * alpha * c).sqrt();
    // Rationalized root for beta < 0 avoids cancellation when rho is tiny.
    let rho = if beta >= 0.0 {
        (beta + disc) / (2.0 * alpha)
    } else {
        2.0 * c / (disc - beta)
    };
    (rho, RhoQuadratic { alpha, beta, c })
}

/// Required received power for user `k` at splitting ratio `rho`.
pub fn zf_tau(params: &SystemParams, bounds: &RobustBounds, k: usize, rho: f64) -> f64 {
    params.gamma_dl * (bounds.g_bar[k] + params.sigma2_ms + params.delta2_ms / rho)
}

/// Zero-forcing beamformer for user `k` at the given splitting ratio.
pub struct ZfBeam {
    pub v: Vec<Complex64>,
    /// Transmit power `|v|^2`.
    pub power: f64,
    /// Received power delivered at the user, `|h^H v|^2`.
    pub tau: f64,
    pub cap_violation: bool,
}

pub fn zf_beamformer(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
    k: usize,
    rho_k: f64,
) -> Result<ZfBeam, ZfError> {
    if params.n_t < params.k {
        return Err(ZfError::TooFewAntennas {
            n_t: params.n_t,
            k: params.k,
        });
    }
    // Null space of the other users' channels.
    let others: Vec<Vec<Complex64>> = (0..params.k)
        .filter(|&i| i != k)
        .map(|i| ch.h_dl[i].clone())
        .collect();
    let h_others = ComplexMatrix::from_columns(&others);
    let u = if others.is_empty() {
        ComplexMatrix::identity(params.n_t)
    } else {
        null_space_basis(&h_others)
    };

    let h = &ch.h_dl[k];
    // Projected channel U U^H h.
    let uh = u.herm().mul_vec(h);
    let proj = u.mul_vec(&uh);
    let proj_norm = cnorm(&proj);
    if proj_norm <= DEGENERACY_THRESHOLD * cnorm(h) {
        return Err(ZfError::DegenerateChannel { user: k });
    }

    let tau = zf_tau(params, bounds, k, rho_k);
    // v = sqrt(tau) * proj / |proj|^2 gives h^H v = sqrt(tau) real positive.
    let scale = tau.sqrt() / (proj_norm * proj_norm);
    let v: Vec<Complex64> = proj.iter().map(|z| z * scale).collect();
    let power = tau / (proj_norm * proj_norm);
    Ok(ZfBeam {
        v,
        power,
        tau,
        cap_violation: power > params.p_max,
    })
}

/// Full zero-forcing design: per-user `rho` from the quadratic, then the
/// null-space beamformer at exactly the required received power.
pub fn zf_solve(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
) -> Result<ZfSolution, ZfError> {
    let mut v = Vec::with_capacity(params.k);
    let mut rho = Vec::with_capacity(params.k);
    let mut p = Vec::with_capacity(params.k);
    let mut tau = Vec::with_capacity(params.k);
    let mut quad = Vec::with_capacity(params.k);
    let mut cap_violation = Vec::with_capacity(params.k);
    for k in 0..params.k {
        let (rho_k, q) = zf_rho(params, bounds, k);
        let beam = zf_beamformer(params, ch, bounds, k, rho_k)?;
        rho.push(rho_k);
        quad.push(q);
        p.push(beam.power);
        tau.push(beam.tau);
        cap_violation.push(beam.cap_violation);
        v.push(beam.v);
    }
    let objective = p.iter().sum();
    Ok(ZfSolution {
        v,
        rho,
        p,
        tau,
        quad,
        cap_violation,
        objective,
    })
}

/// Worst-case downlink SINR of user `k` under beamformers `v` (all users).
pub fn downlink_sinr(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
    v: &[Vec<Complex64>],
    rho: &[f64],
    k: usize,
) -> f64 {
    let h = &ch.h_dl[k];
    let signal = cdot(h, &v[k]).norm_sqr();
    let interference: f64 = (0..params.k)
        .filter(|&j| j != k)
        .map(|j| cdot(h, &v[j]).norm_sqr())
        .sum();
    rho[k] * signal
        / (rho[k] * (interference + bounds.g_bar[k] + params.sigma2_ms) + params.delta2_ms)
}

/// Worst-case harvested power of user `k` under beamformers `v`.
pub fn harvested_power(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
    v: &[Vec<Complex64>],
    rho: &[f64],
    k: usize,
) -> f64 {
    let h = &ch.h_dl[k];
    let received: f64 = (0..params.k).map(|j| cdot(h, &v[j]).norm_sqr()).sum();
    params.eta * (1.0 - rho[k]) * (received + bounds.g_tilde[k] + params.sigma2_ms)
}
