//! Joint beamforming and power splitting via semidefinite relaxation.
//!
//! The downlink design replaces each beamformer outer product with a
//! Hermitian PSD matrix `Z_k` and lifts the splitting-ratio fractions into
//! 2x2 PSD blocks: `[[t_k, delta], [delta, rho_k]] >= 0` encodes
//! `t_k >= delta^2 / rho_k` and `[[u_k, sqrt(q)], [sqrt(q), 1 - rho_k]] >= 0`
//! encodes `u_k >= q / (1 - rho_k)`, which leaves the per-user SINR and
//! harvested-power requirements as plain linear rows. The relaxation is
//! tight: at the optimum every `Z_k` is rank one, every QoS row is active,
//! and both multipliers are strictly positive, so the beamformer is read off
//! the top eigenpair and certified through the dual matrix
//!
//! `A_k = I + sum_j (lambda_j - mu_j) h_j h_j^H
//!        - (lambda_k / gamma + lambda_k) h_k h_k^H`,
//!
//! which must be PSD and annihilate `Z_k`.
//!
//! The per-node power cap is deliberately absent from the conic program (it
//! would break the rank-one argument); solutions exceeding it are flagged,
//! not discarded.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{cdot, hermitian_eig, spectral_norm, ComplexMatrix};
use crate::model::{ChannelRealization, RobustBounds, SystemParams};
use crate::sdp::{
    self, BlockCoeff, BlockKind, ConicProblem, Constraint, InfeasibilityCertificate, KktSummary,
    LinearExpr, Relation, SdpError, SolveStatus,
};

/// Conic solve tolerance for the downlink relaxation.
pub const SDR_TOL: f64 = 1e-8;
pub const SDR_MAX_ITER: usize = 200;
/// Splitting ratios live in the closed interval `[RHO_MARGIN, 1 - RHO_MARGIN]`.
pub const RHO_MARGIN: f64 = 1e-9;
/// Rank ratios above this raise the rank-deficiency flag.
pub const RANK_RATIO_WARN: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum JbpsError {
    #[error("downlink relaxation is infeasible")]
    Infeasible(Option<InfeasibilityCertificate>),
    #[error("conic solver stopped with status {0:?}")]
    Solver(SolveStatus),
    #[error(transparent)]
    Sdp(#[from] SdpError),
}

/// Per-user optimality evidence computed from the solved relaxation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UserCertificate {
    /// `lambda_2(Z) / lambda_1(Z)`; zero for a numerically rank-one matrix.
    pub rank_ratio: f64,
    /// Relative slack of the SINR constraint at the optimum.
    pub sinr_slack: f64,
    /// Relative slack of the harvested-power constraint at the optimum.
    pub harvest_slack: f64,
    /// Smallest eigenvalue of the dual certificate matrix.
    pub cert_min_eig: f64,
    /// `|A_k Z_k|_F`, the complementary-slackness defect.
    pub cert_compl_norm: f64,
    /// Spectral norm of the certificate matrix, for normalizing `cert_min_eig`.
    pub cert_norm: f64,
    /// `tr(Z_k)`, for normalizing `cert_compl_norm`.
    pub trace_z: f64,
    /// SINR-row multiplier.
    pub lambda: f64,
    /// Harvest-row multiplier.
    pub mu: f64,
}

/// Solved downlink design.
#[derive(Debug, Clone)]
pub struct DownlinkSolution {
    /// Beamformers recovered from the top eigenpair of each `Z_k`.
    pub v: Vec<Vec<Complex64>>,
    /// Splitting ratios.
    pub rho: Vec<f64>,
    /// The PSD matrices of the relaxation.
    pub z: Vec<ComplexMatrix>,
    /// Total downlink transmit power `sum_k tr(Z_k)` (W).
    pub objective: f64,
    /// `(lambda_k, mu_k)` per user.
    pub duals: Vec<(f64, f64)>,
    pub certificates: Vec<UserCertificate>,
    /// Set if any user's rank ratio exceeds [`RANK_RATIO_WARN`].
    pub rank_flagged: bool,
    /// Users whose `tr(Z_k)` exceeds the power cap.
    pub cap_violation: Vec<bool>,
    pub solver_iterations: usize,
    pub kkt: KktSummary,
}

fn swap_rho(rho: &[f64], k: usize, value: f64) -> Vec<f64> {
    let mut out = rho.to_vec();
    out[k] = value;
    out
}

fn sinr_label(k: usize) -> String {
    format!("sinr:{k}")
}

fn harvest_label(k: usize) -> String {
    format!("harvest:{k}")
}

/// Builds the conic relaxation for one realization.
///
/// Blocks: `Z_k` (Hermitian, order `n_t`) for `k = 0..K`, then per user the
/// pair of 2x2 blocks holding `(t_k, rho_k)` and `(u_k, 1 - rho_k)`. Rows per
/// user: the SINR and harvest inequalities, the two off-diagonal pins, the
/// coupling `rho_k + (1 - rho_k) = 1`, and the interval bounds on `rho_k`.
pub fn build_sdr(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
) -> ConicProblem {
    let k_users = params.k;
    let n_t = params.n_t;
    let t_block = |k: usize| k_users + 2 * k;
    let u_block = |k: usize| k_users + 2 * k + 1;

    let mut blocks = vec![BlockKind::HermitianPsd(n_t); k_users];
    for _ in 0..k_users {
        blocks.push(BlockKind::Real2x2Psd);
        blocks.push(BlockKind::Real2x2Psd);
    }

    let mut objective = LinearExpr::new();
    for k in 0..k_users {
        objective = objective.with(k, BlockCoeff::Hermitian(ComplexMatrix::identity(n_t)));
    }

    let e00 = |v: f64| BlockCoeff::Sym2x2 {
        e00: v,
        e01: 0.0,
        e11: 0.0,
    };
    let e01 = |v: f64| BlockCoeff::Sym2x2 {
        e00: 0.0,
        e01: v,
        e11: 0.0,
    };
    let e11 = |v: f64| BlockCoeff::Sym2x2 {
        e00: 0.0,
        e01: 0.0,
        e11: v,
    };

    let mut constraints = Vec::with_capacity(7 * k_users);
    for k in 0..k_users {
        let hh = ComplexMatrix::outer(&ch.h_dl[k], 1.0);

        // (1/gamma) h^H Z_k h - sum_{j != k} h^H Z_j h - t_k >= g_bar + sigma2.
        let mut sinr = LinearExpr::new();
        for j in 0..k_users {
            let w = if j == k {
                1.0 / params.gamma_dl
            } else {
                -1.0
            };
            sinr = sinr.with(j, BlockCoeff::Hermitian(hh.scale(w)));
        }
        sinr = sinr.with(t_block(k), e00(-1.0));
        constraints.push(Constraint {
            expr: sinr,
            relation: Relation::Ge,
            rhs: bounds.g_bar[k] + params.sigma2_ms,
            label: sinr_label(k),
        });

        // sum_j h^H Z_j h - u_k >= -(g_tilde + sigma2).
        let mut harvest = LinearExpr::new();
        for j in 0..k_users {
            harvest = harvest.with(j, BlockCoeff::Hermitian(hh.clone()));
        }
        harvest = harvest.with(u_block(k), e00(-1.0));
        constraints.push(Constraint {
            expr: harvest,
            relation: Relation::Ge,
            rhs: -(bounds.g_tilde[k] + params.sigma2_ms),
            label: harvest_label(k),
        });

        // Off-diagonal pins making the 2x2 blocks hyperbolic.
        constraints.push(Constraint {
            expr: LinearExpr::new().with(t_block(k), e01(0.5)),
            relation: Relation::Eq,
            rhs: params.delta2_ms.sqrt(),
            label: format!("t-offdiag:{k}"),
        });
        constraints.push(Constraint {
            expr: LinearExpr::new().with(u_block(k), e01(0.5)),
            relation: Relation::Eq,
            rhs: params.q_bar.sqrt(),
            label: format!("u-offdiag:{k}"),
        });

        // rho_k + (1 - rho_k) = 1 ties the two blocks together.
        constraints.push(Constraint {
            expr: LinearExpr::new()
                .with(t_block(k), e11(1.0))
                .with(u_block(k), e11(1.0)),
            relation: Relation::Eq,
            rhs: 1.0,
            label: format!("rho-sum:{k}"),
        });

        // Closed interval bounds on rho_k.
        constraints.push(Constraint {
            expr: LinearExpr::new().with(t_block(k), e11(1.0)),
            relation: Relation::Ge,
            rhs: RHO_MARGIN,
            label: format!("rho-lb:{k}"),
        });
        constraints.push(Constraint {
            expr: LinearExpr::new().with(u_block(k), e11(1.0)),
            relation: Relation::Ge,
            rhs: RHO_MARGIN,
            label: format!("rho-ub:{k}"),
        });
    }

    ConicProblem {
        blocks,
        objective,
        constraints,
    }
}

/// Solves the relaxation and recovers beamformers, ratios and certificates.
pub fn solve_downlink(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
) -> Result<DownlinkSolution, JbpsError> {
    let problem = build_sdr(params, ch, bounds);
    let sol = sdp::solve(&problem, SDR_TOL, SDR_MAX_ITER)?;
    match sol.status {
        SolveStatus::Optimal => {}
        SolveStatus::Infeasible => return Err(JbpsError::Infeasible(sol.infeasibility)),
        other => return Err(JbpsError::Solver(other)),
    }

    let k_users = params.k;
    let mut z = Vec::with_capacity(k_users);
    let mut rho = Vec::with_capacity(k_users);
    let mut v = Vec::with_capacity(k_users);
    let mut duals = Vec::with_capacity(k_users);
    let mut cap_violation = Vec::with_capacity(k_users);
    let mut objective = 0.0;
    for k in 0..k_users {
        let zk = sol.blocks[k].as_hermitian().clone();
        let (_, _, block_rho) = sol.blocks[k_users + 2 * k].as_sym2x2();
        // Top eigenpair gives the beamformer.
        let eig = hermitian_eig(&zk).expect("solver returns Hermitian blocks");
        let lam1 = eig.eigenvalues[0].max(0.0);
        let top = eig.eigenvectors.column(0);
        v.push(top.iter().map(|e| e * lam1.sqrt()).collect());
        objective += zk.trace().re;
        cap_violation.push(zk.trace().re > params.p_max);
        duals.push((
            sol.dual_by_label(&problem, &sinr_label(k)).unwrap(),
            sol.dual_by_label(&problem, &harvest_label(k)).unwrap(),
        ));
        rho.push(block_rho.clamp(RHO_MARGIN, 1.0 - RHO_MARGIN));
        z.push(zk);
    }

    // Either QoS row can carry the tiny multiplier, and the row with the
    // tiny multiplier retains a slack of gap/multiplier at any finite
    // barrier gap. Both constraints hold with equality at the exact optimum,
    // so rho is re-read from the solved Z through each tightness relation in
    // turn and the candidate with the smaller worst-case slack wins. The two
    // candidates agree to within the Z accuracy; the choice only decides
    // which constraint absorbs the residual.
    for k in 0..k_users {
        let h = &ch.h_dl[k];
        let quad = |m: &ComplexMatrix| cdot(h, &m.mul_vec(h)).re;
        let signal = quad(&z[k]);
        let interference: f64 = (0..k_users).filter(|&j| j != k).map(|j| quad(&z[j])).sum();
        let received = signal + interference;

        let harvest_denom = received + bounds.g_tilde[k] + params.sigma2_ms;
        let sinr_denom = signal / params.gamma_dl
            - interference
            - bounds.g_bar[k]
            - params.sigma2_ms;
        let mut candidates = vec![rho[k]];
        if harvest_denom > params.q_bar {
            candidates.push(1.0 - params.q_bar / harvest_denom);
        }
        if sinr_denom > 0.0 {
            candidates.push(params.delta2_ms / sinr_denom);
        }
        let worst_slack = |r: f64| -> f64 {
            let s = sinr_from_z(params, ch, bounds, &z, &swap_rho(&rho, k, r), k);
            let q = harvest_from_z(params, ch, bounds, &z, &swap_rho(&rho, k, r), k);
            let sinr_dev = (s - params.gamma_dl).abs() / params.gamma_dl;
            let harvest_dev = (q - params.q_bar).abs() / params.q_bar;
            sinr_dev.max(harvest_dev)
        };
        rho[k] = candidates
            .into_iter()
            .map(|r| r.clamp(RHO_MARGIN, 1.0 - RHO_MARGIN))
            .min_by(|a, b| worst_slack(*a).partial_cmp(&worst_slack(*b)).unwrap())
            .unwrap();
    }

    let mut out = DownlinkSolution {
        v,
        rho,
        z,
        objective,
        duals,
        certificates: Vec::new(),
        rank_flagged: false,
        cap_violation,
        solver_iterations: sol.iterations,
        kkt: sol.kkt,
    };
    out.certificates = certify(&out, params, ch, bounds);
    out.rank_flagged = out
        .certificates
        .iter()
        .any(|c| c.rank_ratio > RANK_RATIO_WARN);
    Ok(out)
}

/// Achieved worst-case SINR of user `k` evaluated on the PSD matrices.
pub fn sinr_from_z(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
    z: &[ComplexMatrix],
    rho: &[f64],
    k: usize,
) -> f64 {
    let h = &ch.h_dl[k];
    let quad = |m: &ComplexMatrix| cdot(h, &m.mul_vec(h)).re;
    let signal = quad(&z[k]);
    let interference: f64 = (0..z.len()).filter(|&j| j != k).map(|j| quad(&z[j])).sum();
    rho[k] * signal
        / (rho[k] * (interference + bounds.g_bar[k] + params.sigma2_ms) + params.delta2_ms)
}

/// Worst-case harvested power of user `k` evaluated on the PSD matrices.
pub fn harvest_from_z(
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
    z: &[ComplexMatrix],
    rho: &[f64],
    k: usize,
) -> f64 {
    let h = &ch.h_dl[k];
    let received: f64 = z.iter().map(|m| cdot(h, &m.mul_vec(h)).re).sum();
    params.eta * (1.0 - rho[k]) * (received + bounds.g_tilde[k] + params.sigma2_ms)
}

/// Recomputes the optimality certificates from problem data and multipliers.
///
/// Builds `A_k` from the dual solution, reports its smallest eigenvalue and
/// the complementarity defect with `Z_k`, plus the relative activity of both
/// QoS constraints. Report-only: no thresholds are enforced here.
pub fn certify(
    sol: &DownlinkSolution,
    params: &SystemParams,
    ch: &ChannelRealization,
    bounds: &RobustBounds,
) -> Vec<UserCertificate> {
    let k_users = params.k;
    let n_t = params.n_t;

    // B = I + sum_j (lambda_j - mu_j) h_j h_j^H is shared by all users.
    let mut base = ComplexMatrix::identity(n_t);
    for j in 0..k_users {
        let (lambda_j, mu_j) = sol.duals[j];
        base = base.add(&ComplexMatrix::outer(&ch.h_dl[j], lambda_j - mu_j));
    }

    (0..k_users)
        .map(|k| {
            let (lambda_k, mu_k) = sol.duals[k];
            let coeff = lambda_k / params.gamma_dl + lambda_k;
            let mut cert = base.sub(&ComplexMatrix::outer(&ch.h_dl[k], coeff));
            cert.hermitianize();

            let eig = hermitian_eig(&cert).expect("certificate is Hermitian");
            let cert_min_eig = *eig.eigenvalues.last().unwrap();
            let cert_norm = eig.eigenvalues[0]
                .abs()
                .max(eig.eigenvalues.last().unwrap().abs());
            let cert_compl_norm = cert.mul(&sol.z[k]).frobenius_norm();

            let z_eig = hermitian_eig(&sol.z[k]).expect("Z is Hermitian");
            let lam1 = z_eig.eigenvalues[0].max(f64::MIN_POSITIVE);
            let lam2 = if n_t > 1 { z_eig.eigenvalues[1].max(0.0) } else { 0.0 };

            let sinr = sinr_from_z(params, ch, bounds, &sol.z, &sol.rho, k);
            let harvest = harvest_from_z(params, ch, bounds, &sol.z, &sol.rho, k);

            UserCertificate {
                rank_ratio: lam2 / lam1,
                sinr_slack: (sinr - params.gamma_dl).abs() / params.gamma_dl,
                harvest_slack: (harvest - params.q_bar).abs() / params.q_bar,
                cert_min_eig,
                cert_compl_norm,
                cert_norm,
                trace_z: sol.z[k].trace().re,
                lambda: lambda_k,
                mu: mu_k,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_bounds, sample_channels, SeedTag};
    use crate::sdp::BlockValue;
    use crate::zf;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn structure_single_user_single_antenna() {
        let mut params = SystemParams::default_scenario();
        params.k = 1;
        params.n_t = 1;
        let ch = sample_channels(&params, 0, 1);
        let bounds = compute_bounds(&params, &ch);
        let problem = build_sdr(&params, &ch, &bounds);
        // One PSD(1) block plus the two hyperbolic 2x2 blocks.
        assert_eq!(
            problem.blocks,
            vec![
                BlockKind::HermitianPsd(1),
                BlockKind::Real2x2Psd,
                BlockKind::Real2x2Psd
            ]
        );
        // Two QoS inequality rows; the rest is block plumbing.
        let qos = problem
            .constraints
            .iter()
            .filter(|c| c.label.starts_with("sinr") || c.label.starts_with("harvest"))
            .count();
        assert_eq!(qos, 2);
        assert_eq!(problem.constraints.len(), 7);
        problem.validate().unwrap();
    }

    #[test]
    fn hand_feasible_point_satisfies_rows() {
        let params = SystemParams::default_scenario();
        let ch = sample_channels(&params, 2, 9);
        let bounds = compute_bounds(&params, &ch);
        let problem = build_sdr(&params, &ch, &bounds);

        // Z_k = large * h_k h_k^H / |h_k|^2, rho = 1/2, blocks on their
        // respective PSD boundaries.
        let large = 1e3;
        let delta = params.delta2_ms.sqrt();
        let mut values: Vec<BlockValue> = Vec::new();
        for k in 0..params.k {
            let h = &ch.h_dl[k];
            let n2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
            values.push(BlockValue::Hermitian(ComplexMatrix::outer(h, large / n2)));
        }
        for _ in 0..params.k {
            values.push(BlockValue::Sym2x2 {
                e00: 2.0 * params.delta2_ms,
                e01: delta,
                e11: 0.5,
            });
            values.push(BlockValue::Sym2x2 {
                e00: 2.0 * params.q_bar,
                e01: params.q_bar.sqrt(),
                e11: 0.5,
            });
        }
        for con in &problem.constraints {
            let v = con.expr.eval(&values);
            match con.relation {
                Relation::Ge => assert!(
                    v >= con.rhs - 1e-9,
                    "row {} violated: {v} < {}",
                    con.label,
                    con.rhs
                ),
                Relation::Eq => assert!(
                    (v - con.rhs).abs() <= 1e-9,
                    "row {} violated: {v} != {}",
                    con.label,
                    con.rhs
                ),
            }
        }
    }

    #[test]
    fn vanishing_requirements_vanishing_power() {
        let mut params = SystemParams::default_scenario();
        params.k = 1;
        params.n_t = 1;
        params.gamma_dl = 1e-6;
        params.q_bar = 1e-8;
        let ch = sample_channels(&params, 0, 2);
        let bounds = compute_bounds(&params, &ch);
        let sol = solve_downlink(&params, &ch, &bounds).unwrap();
        assert!(
            sol.objective < 1e-3,
            "objective {} should vanish with the targets",
            sol.objective
        );
    }

    #[test]
    fn single_user_matches_zero_forcing() {
        for (n_t, seed) in [(1usize, 11u64), (2, 12), (4, 13)] {
            let mut params = SystemParams::default_scenario();
            params.k = 1;
            params.n_t = n_t;
            let ch = sample_channels(&params, 0, seed);
            let bounds = compute_bounds(&params, &ch);
            let sdr = solve_downlink(&params, &ch, &bounds).unwrap();
            let closed = zf::zf_solve(&params, &ch, &bounds).unwrap();
            let rel = (sdr.objective - closed.objective).abs() / (1.0 + closed.objective);
            assert!(
                rel <= 1e-5,
                "n_t = {n_t}: relaxation {} vs closed form {}",
                sdr.objective,
                closed.objective
            );
        }
    }

    #[test]
    fn swap_symmetric_users_get_equal_power() {
        let mut params = SystemParams::default_scenario();
        params.k = 2;
        params.n_t = 2;
        // h2 is h1 with swapped coordinates; the same loop estimate for both
        // users makes the whole instance symmetric under the user swap.
        let h1 = vec![c(0.9, -0.2), c(0.3, 0.4)];
        let h2 = vec![h1[1], h1[0]];
        let ch = ChannelRealization {
            h_dl: vec![h1, h2],
            h_ul: vec![vec![c(1.0, 0.0), c(0.0, 0.0)]; 2],
            h_si_ms: vec![c(0.3, 0.1); 2],
            h_si_bs: ComplexMatrix::identity(2).scale(0.4),
            seed_tag: SeedTag { seed: 0, trial_index: 0 },
        };
        let bounds = compute_bounds(&params, &ch);
        let sol = solve_downlink(&params, &ch, &bounds).unwrap();
        let p0 = sol.z[0].trace().re;
        let p1 = sol.z[1].trace().re;
        assert!(
            (p0 - p1).abs() <= 1e-6 * (1.0 + p0.max(p1)),
            "symmetric users should use equal power: {p0} vs {p1}"
        );
        assert!((sol.rho[0] - sol.rho[1]).abs() <= 1e-6);
    }

    #[test]
    fn tighter_target_needs_more_power() {
        let params = SystemParams::default_scenario();
        let ch = sample_channels(&params, 4, 44);
        let bounds = compute_bounds(&params, &ch);
        let base = solve_downlink(&params, &ch, &bounds).unwrap();
        let mut harder = params.clone();
        harder.gamma_dl *= 2.0;
        let bounds2 = compute_bounds(&harder, &ch);
        let tight = solve_downlink(&harder, &ch, &bounds2).unwrap();
        assert!(
            tight.objective > base.objective,
            "doubling the SINR target must cost power: {} vs {}",
            tight.objective,
            base.objective
        );
    }

    #[test]
    fn certificates_hold_on_random_instances() {
        let params = SystemParams::default_scenario();
        for trial in 0..20 {
            let ch = sample_channels(&params, trial, 99);
            let bounds = compute_bounds(&params, &ch);
            let sol = solve_downlink(&params, &ch, &bounds).unwrap();
            for (k, cert) in sol.certificates.iter().enumerate() {
                assert!(
                    cert.rank_ratio <= 1e-6,
                    "trial {trial} user {k}: rank ratio {}",
                    cert.rank_ratio
                );
                assert!(
                    cert.sinr_slack <= 1e-6 && cert.harvest_slack <= 1e-6,
                    "trial {trial} user {k}: slacks {} / {}",
                    cert.sinr_slack,
                    cert.harvest_slack
                );
                assert!(
                    cert.cert_min_eig >= -1e-7 * (1.0 + cert.cert_norm),
                    "trial {trial} user {k}: certificate min eig {}",
                    cert.cert_min_eig
                );
                assert!(
                    cert.cert_compl_norm <= 1e-6 * cert.trace_z,
                    "trial {trial} user {k}: complementarity {}",
                    cert.cert_compl_norm
                );
                assert!(cert.lambda > 1e-10 && cert.mu > 1e-10);
            }
        }
    }

    #[test]
    fn recovered_beamformer_reproduces_slacks() {
        let params = SystemParams::default_scenario();
        let ch = sample_channels(&params, 6, 7);
        let bounds = compute_bounds(&params, &ch);
        let sol = solve_downlink(&params, &ch, &bounds).unwrap();
        // Rebuild Z from the extracted beamformers and compare the slacks.
        let z_rebuilt: Vec<ComplexMatrix> =
            sol.v.iter().map(|v| ComplexMatrix::outer(v, 1.0)).collect();
        for k in 0..params.k {
            let before = sinr_from_z(&params, &ch, &bounds, &sol.z, &sol.rho, k);
            let after = sinr_from_z(&params, &ch, &bounds, &z_rebuilt, &sol.rho, k);
            assert!(
                ((before - after) / params.gamma_dl).abs() <= 1e-8,
                "user {k}: SINR slack moved by {:e}",
                (before - after) / params.gamma_dl
            );
            let qb = harvest_from_z(&params, &ch, &bounds, &sol.z, &sol.rho, k);
            let qa = harvest_from_z(&params, &ch, &bounds, &z_rebuilt, &sol.rho, k);
            assert!(((qb - qa) / params.q_bar).abs() <= 1e-8);
        }
    }

    #[test]
    fn zero_forcing_is_never_better() {
        let params = SystemParams::default_scenario();
        for trial in 0..15 {
            let ch = sample_channels(&params, trial, 55);
            let bounds = compute_bounds(&params, &ch);
            let sdr = solve_downlink(&params, &ch, &bounds).unwrap();
            let closed = zf::zf_solve(&params, &ch, &bounds).unwrap();
            assert!(
                sdr.objective <= closed.objective + 1e-6 * (1.0 + sdr.objective),
                "trial {trial}: relaxation {} above zero-forcing {}",
                sdr.objective,
                closed.objective
            );
        }
    }
}
