//! Uplink powers and receive filters by fixed-point power control.
//!
//! For fixed uplink powers the SINR-optimal receiver is the Wiener filter
//! built from the received covariance; for fixed filters the minimum powers
//! meeting every SINR target with equality solve a K x K linear system (the
//! standard power-control step). Alternating the two from a mid-cap start
//! converges to the joint minimum; the worst-case base-station
//! self-interference enters only through the constant `e_bar` noise floor,
//! which keeps the uplink subproblem independent of the downlink design.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{cdot, solve_hermitian_pd, ComplexMatrix, LinalgError};
use crate::model::{ChannelRealization, RobustBounds, SystemParams};

pub const MAX_ITERATIONS: usize = 50;
pub const POWER_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum UplinkError {
    #[error("uplink infeasible: {reason}")]
    Infeasible { reason: String },
    #[error("uplink fixed point did not converge within {MAX_ITERATIONS} iterations")]
    NonConvergence { last: Box<UplinkSolution> },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Uplink design: filters, powers and achieved SINRs.
#[derive(Debug, Clone)]
pub struct UplinkSolution {
    /// Receive filters, one length-`n_r` vector per user.
    pub w: Vec<Vec<Complex64>>,
    /// Uplink transmit powers (W).
    pub p_up: Vec<f64>,
    /// Achieved worst-case SINRs (linear).
    pub sinr: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Wiener (linear MMSE) receive filters for the given powers.
///
/// `w_k = (sum_j p_j h_j h_j^H + noise_plus_si I)^-1 sqrt(p_k) h_k`.
pub fn wiener_filter(
    ch: &ChannelRealization,
    p_up: &[f64],
    noise_plus_si: f64,
) -> Result<Vec<Vec<Complex64>>, UplinkError> {
    let n_r = ch.h_ul[0].len();
    let mut cov = ComplexMatrix::identity(n_r).scale(noise_plus_si);
    for (j, h) in ch.h_ul.iter().enumerate() {
        cov = cov.add(&ComplexMatrix::outer(h, p_up[j]));
    }
    cov.hermitianize();
    ch.h_ul
        .iter()
        .enumerate()
        .map(|(k, h)| {
            let rhs: Vec<Complex64> = h.iter().map(|z| z * p_up[k].sqrt()).collect();
            solve_hermitian_pd(&cov, &rhs).map_err(UplinkError::from)
        })
        .collect()
}

/// Worst-case uplink SINR of user `k` for filters `w` and powers `p`.
pub fn uplink_sinr(
    ch: &ChannelRealization,
    w: &[Vec<Complex64>],
    p: &[f64],
    e_bar: f64,
    sigma2_bs: f64,
    k: usize,
) -> f64 {
    let signal = p[k] * cdot(&w[k], &ch.h_ul[k]).norm_sqr();
    let interference: f64 = (0..p.len())
        .filter(|&j| j != k)
        .map(|j| p[j] * cdot(&w[k], &ch.h_ul[j]).norm_sqr())
        .sum();
    let wnorm2: f64 = w[k].iter().map(|z| z.norm_sqr()).sum();
    signal / (interference + (e_bar + sigma2_bs) * wnorm2)
}

/// Dense K x K solve with partial pivoting.
fn solve_linear(k: usize, a: &mut [f64], b: &mut [f64]) -> Option<Vec<f64>> {
    for col in 0..k {
        let (pivot, max) = (col..k)
            .map(|r| (r, a[r * k + col].abs()))
            .max_by(|x, y| x.1.partial_cmp(&y.1).unwrap())
            .unwrap();
        if max <= f64::MIN_POSITIVE {
            return None;
        }
        if pivot != col {
            for j in 0..k {
                a.swap(pivot * k + j, col * k + j);
            }
            b.swap(pivot, col);
        }
        for r in col + 1..k {
            let f = a[r * k + col] / a[col * k + col];
            if f == 0.0 {
                continue;
            }
            for j in col..k {
                a[r * k + j] -= f * a[col * k + j];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; k];
    for r in (0..k).rev() {
        let mut s = b[r];
        for j in r + 1..k {
            s -= a[r * k + j] * x[j];
        }
        x[r] = s / a[r * k + r];
    }
    Some(x)
}

/// Minimum powers meeting every uplink SINR target with equality for the
/// given (fixed) filters.
///
/// Row `k` of the system reads
/// `|w_k^H h_k|^2 p_k - gamma sum_{j != k} |w_k^H h_j|^2 p_j =
///  gamma (e_bar + sigma2_bs) |w_k|^2`,
/// so the solution makes every SINR exactly `gamma_ul`. Infeasible when the
/// system has no positive solution or a power exceeds `min(q_bar, p_max)`;
/// `p_up_others` is the reference iterate used to report which user's target
/// was unreachable.
pub fn min_uplink_power(
    ch: &ChannelRealization,
    w: &[Vec<Complex64>],
    e_bar: f64,
    sigma2_bs: f64,
    gamma_ul: f64,
    p_up_others: &[f64],
    cap: f64,
) -> Result<Vec<f64>, UplinkError> {
    let k = ch.h_ul.len();
    let gains: Vec<Vec<f64>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| cdot(&w[i], &ch.h_ul[j]).norm_sqr())
                .collect()
        })
        .collect();
    let mut a = vec![0.0; k * k];
    let mut rhs = vec![0.0; k];
    for i in 0..k {
        if gains[i][i] <= f64::MIN_POSITIVE {
            return Err(UplinkError::Infeasible {
                reason: format!("user {i}: filter is orthogonal to its own channel"),
            });
        }
        for j in 0..k {
            a[i * k + j] = if i == j {
                gains[i][i]
            } else {
                -gamma_ul * gains[i][j]
            };
        }
        let wnorm2: f64 = w[i].iter().map(|z| z.norm_sqr()).sum();
        rhs[i] = gamma_ul * (e_bar + sigma2_bs) * wnorm2;
    }
    let p = solve_linear(k, &mut a, &mut rhs).ok_or_else(|| UplinkError::Infeasible {
        reason: "power-control system is singular".into(),
    })?;

    for (i, &pi) in p.iter().enumerate() {
        if !(pi.is_finite() && pi > 0.0) {
            let reachable = uplink_sinr(ch, w, p_up_others, e_bar, sigma2_bs, i);
            return Err(UplinkError::Infeasible {
                reason: format!(
                    "user {i}: target {gamma_ul:.3e} unreachable with these filters \
                     (SINR {reachable:.3e} at the reference powers)"
                ),
            });
        }
        if pi > cap * (1.0 + 1e-12) {
            return Err(UplinkError::Infeasible {
                reason: format!(
                    "user {i}: required power {pi:.3e} W exceeds the cap {cap:.3e} W"
                ),
            });
        }
    }
    Ok(p)
}

/// Uplink design with the robust noise floor `sigma2_bs + e_bar`.
pub fn uplink_solve(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
) -> Result<UplinkSolution, UplinkError> {
    uplink_solve_with_noise(params, ch, bounds, params.sigma2_bs + bounds.e_bar)
}

/// Same iteration with a caller-chosen Wiener-filter noise term, for
/// comparing against the variant that couples to the downlink beamformers.
pub fn uplink_solve_with_noise(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
    noise_plus_si: f64,
) -> Result<UplinkSolution, UplinkError> {
    let cap = params.uplink_cap();
    let mut p = vec![cap / 2.0; params.k];
    let mut w = wiener_filter(ch, &p, noise_plus_si)?;
    let mut prev_total = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;

    for it in 1..=MAX_ITERATIONS {
        iterations = it;
        let p_new = min_uplink_power(
            ch,
            &w,
            bounds.e_bar,
            params.sigma2_bs,
            params.gamma_ul,
            &p,
            cap,
        )?;
        let rel_change = p
            .iter()
            .zip(&p_new)
            .map(|(old, new)| (new - old).abs() / old.max(f64::MIN_POSITIVE))
            .fold(0.0f64, f64::max);
        let total: f64 = p_new.iter().sum();
        // Once every target is met (it is, after the first exact solve),
        // total power should not increase between iterations.
        if total > prev_total * (1.0 + 1e-9) {
            log::warn!(
                "uplink fixed point: total power rose from {prev_total:.6e} to {total:.6e} \
                 at iteration {it}"
            );
        }
        prev_total = total;
        p = p_new;
        if rel_change <= POWER_TOLERANCE {
            converged = true;
            break;
        }
        w = wiener_filter(ch, &p, noise_plus_si)?;
    }

    let sinr: Vec<f64> = (0..params.k)
        .map(|k| uplink_sinr(ch, &w, &p, bounds.e_bar, params.sigma2_bs, k))
        .collect();
    let solution = UplinkSolution {
        w,
        p_up: p,
        sinr,
        iterations,
        converged,
    };
    if !converged {
        return Err(UplinkError::NonConvergence {
            last: Box::new(solution),
        });
    }
    Ok(solution)
}
