//! Homogeneous self-dual interior-point engine on real symmetric blocks.
//!
//! Standard form after lowering: minimize `<c, x>` subject to `<a_i, x> = b_i`
//! and `x` in a product of dense PSD cones (order-1 blocks are nonnegative
//! scalars). The search direction uses Nesterov-Todd scaling with a Mehrotra
//! predictor-corrector step; the Schur complement is formed densely and
//! factored by Cholesky, which is appropriate for the ~50-variable instances
//! this crate produces.

use crate::linalg::sym_eig_desc;

/// Lowered problem data. One dense symmetric matrix per block per row.
pub(crate) struct SdpData {
    pub sizes: Vec<usize>,
    /// Objective, one row-major symmetric matrix per block.
    pub c: Vec<Vec<f64>>,
    /// Constraint matrices: `rows[i][b]` is the coefficient of block `b` in
    /// constraint `i`.
    pub rows: Vec<Vec<Vec<f64>>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct IpmOptions {
    /// Target for the engine; iteration continues until this or breakdown.
    pub tol: f64,
    /// The caller's tolerance: among iterates meeting it, the one with the
    /// smallest complementarity gap is preferred.
    pub accept_tol: f64,
    pub max_iter: usize,
    pub init_scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum IpmStatus {
    Optimal,
    PrimalInfeasible,
    DualInfeasible,
    MaxIter,
    NumericalTrouble,
}

#[derive(Debug, Clone)]
pub(crate) struct IpmResult {
    pub status: IpmStatus,
    /// Primal blocks, divided by tau on Optimal (raw ray otherwise).
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
    pub s: Vec<Vec<f64>>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    pub primal_res: f64,
    pub dual_res: f64,
    pub rel_gap: f64,
    pub iterations: usize,
    /// For infeasible declarations: `b^T y` along the ray and the dual-ray
    /// residual `|A^T y + s|_F`, both after normalizing the ray.
    pub ray: Option<(f64, f64)>,
}

const TAU_KAPPA_RATIO: f64 = 1e-8;
const STEP_FRACTION: f64 = 0.99;

// ─── Dense symmetric helpers (row-major) ────────────────────────────────────

fn mat_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

fn mat_t_mul(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for k in 0..n {
        for i in 0..n {
            let aki = a[k * n + i];
            if aki == 0.0 {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aki * b[k * n + j];
            }
        }
    }
    out
}

/// `a * b^T`.
fn mat_mul_bt(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a[i * n + k] * b[j * n + k];
            }
            out[i * n + j] = acc;
        }
    }
    out
}

fn symmetrize(n: usize, a: &mut [f64]) {
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[i * n + j] + a[j * n + i]);
            a[i * n + j] = v;
            a[j * n + i] = v;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn block_dot(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| dot(x, y)).sum()
}

fn block_axpy(alpha: f64, x: &[Vec<f64>], y: &mut [Vec<f64>]) {
    for (xb, yb) in x.iter().zip(y.iter_mut()) {
        for (xv, yv) in xb.iter().zip(yb.iter_mut()) {
            *yv += alpha * xv;
        }
    }
}

fn block_identity(sizes: &[usize], scale: f64) -> Vec<Vec<f64>> {
    sizes
        .iter()
        .map(|&n| {
            let mut m = vec![0.0; n * n];
            for i in 0..n {
                m[i * n + i] = scale;
            }
            m
        })
        .collect()
}

fn block_zeros(sizes: &[usize]) -> Vec<Vec<f64>> {
    sizes.iter().map(|&n| vec![0.0; n * n]).collect()
}

/// Smallest eigenvalue of a symmetric block.
fn min_eig(n: usize, a: &[f64]) -> f64 {
    if n == 1 {
        return a[0];
    }
    match sym_eig_desc(n, a) {
        Ok((vals, _)) => *vals.last().unwrap(),
        Err(_) => f64::NEG_INFINITY,
    }
}

// ─── NT scaling ─────────────────────────────────────────────────────────────

/// Per-block Nesterov-Todd scaling: `r^-1 x r^-T = r^T s r = diag(lambda)`.
struct NtScaling {
    n: usize,
    r: Vec<f64>,
    rinv: Vec<f64>,
    lambda: Vec<f64>,
}

impl NtScaling {
    fn compute(n: usize, x: &[f64], s: &[f64]) -> Option<Self> {
        if n == 1 {
            if x[0] <= 0.0 || s[0] <= 0.0 {
                return None;
            }
            let r = (x[0] / s[0]).sqrt().sqrt();
            return Some(Self {
                n,
                r: vec![r],
                rinv: vec![1.0 / r],
                lambda: vec![(x[0] * s[0]).sqrt()],
            });
        }
        let (dx, qx) = sym_eig_desc(n, x).ok()?;
        if *dx.last().unwrap() <= 0.0 {
            return None;
        }
        let mut x_half = vec![0.0; n * n];
        let mut x_mhalf = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut h = 0.0;
                let mut mh = 0.0;
                for k in 0..n {
                    let q = qx[i * n + k] * qx[j * n + k];
                    h += q * dx[k].sqrt();
                    mh += q / dx[k].sqrt();
                }
                x_half[i * n + j] = h;
                x_mhalf[i * n + j] = mh;
            }
        }
        let mut t = mat_mul(n, &x_half, &mat_mul(n, s, &x_half));
        symmetrize(n, &mut t);
        let (dt, qt) = sym_eig_desc(n, &t).ok()?;
        if *dt.last().unwrap() <= 0.0 {
            return None;
        }
        // r = x^{1/2} qt dt^{-1/4}, rinv = dt^{1/4} qt^T x^{-1/2}.
        let mut r = mat_mul(n, &x_half, &qt);
        let mut rinv = mat_t_mul(n, &qt, &x_mhalf);
        for j in 0..n {
            let quarter = dt[j].sqrt().sqrt();
            for i in 0..n {
                r[i * n + j] /= quarter;
                rinv[j * n + i] *= quarter;
            }
        }
        let lambda = dt.iter().map(|d| d.sqrt()).collect();
        Some(Self { n, r, rinv, lambda })
    }

    /// `r^T a r` — moves constraint/residual matrices into scaled space.
    fn scale_mat(&self, a: &[f64]) -> Vec<f64> {
        if self.n == 1 {
            return vec![a[0] * self.r[0] * self.r[0]];
        }
        let mut out = mat_t_mul(self.n, &self.r, &mat_mul(self.n, a, &self.r));
        symmetrize(self.n, &mut out);
        out
    }

    /// `r u r^T` — moves a scaled primal direction back to the original space.
    fn unscale_primal(&self, u: &[f64]) -> Vec<f64> {
        if self.n == 1 {
            return vec![u[0] * self.r[0] * self.r[0]];
        }
        let mut out = mat_mul_bt(self.n, &mat_mul(self.n, &self.r, u), &self.r);
        symmetrize(self.n, &mut out);
        out
    }

    /// `r^-T u r^-1` — moves a scaled dual direction back to the original space.
    fn unscale_dual(&self, u: &[f64]) -> Vec<f64> {
        if self.n == 1 {
            return vec![u[0] * self.rinv[0] * self.rinv[0]];
        }
        let mut out = mat_t_mul(self.n, &self.rinv, &mat_mul(self.n, u, &self.rinv));
        symmetrize(self.n, &mut out);
        out
    }
}

/// Largest step `alpha` with `diag(lambda) + alpha * d` PSD, capped at `cap`.
fn max_step(n: usize, lambda: &[f64], d: &[f64], cap: f64) -> f64 {
    if n == 1 {
        if d[0] >= 0.0 {
            return cap;
        }
        return cap.min(-lambda[0] / d[0]);
    }
    let mut scaled = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            scaled[i * n + j] = d[i * n + j] / (lambda[i] * lambda[j]).sqrt();
        }
    }
    let m = min_eig(n, &scaled);
    if m >= 0.0 {
        cap
    } else {
        cap.min(-1.0 / m)
    }
}

// ─── Cholesky for the Schur complement ──────────────────────────────────────

struct Chol {
    n: usize,
    l: Vec<f64>,
}

impl Chol {
    fn factor(n: usize, m: &[f64]) -> Option<Self> {
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut d = m[j * n + j];
            for k in 0..j {
                d -= l[j * n + k] * l[j * n + k];
            }
            if d <= 0.0 || !d.is_finite() {
                return None;
            }
            let djj = d.sqrt();
            l[j * n + j] = djj;
            for i in j + 1..n {
                let mut s = m[i * n + j];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / djj;
            }
        }
        Some(Self { n, l })
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                let v = y[k];
                y[i] -= self.l[i * n + k] * v;
            }
            y[i] /= self.l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                let v = y[k];
                y[i] -= self.l[k * n + i] * v;
            }
            y[i] /= self.l[i * n + i];
        }
        y
    }

    /// Solve with one pass of iterative refinement against `m`.
    fn solve_refined(&self, m: &[f64], rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = self.solve(rhs);
        let mut r = rhs.to_vec();
        for i in 0..n {
            for j in 0..n {
                r[i] -= m[i * n + j] * x[j];
            }
        }
        let dx = self.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        x
    }
}

// ─── The engine ─────────────────────────────────────────────────────────────

struct Direction {
    dx_hat: Vec<Vec<f64>>,
    ds_hat: Vec<Vec<f64>>,
    dy: Vec<f64>,
    dtau: f64,
    dkappa: f64,
}

pub(crate) fn solve_ipm(data: &SdpData, opts: &IpmOptions) -> IpmResult {
    let sizes = &data.sizes;
    let m = data.b.len();
    let nu: f64 = sizes.iter().map(|&n| n as f64).sum::<f64>();

    let mut x = block_identity(sizes, opts.init_scale);
    let mut s = block_identity(sizes, opts.init_scale);
    let mut y = vec![0.0; m];
    let mut tau = 1.0;
    let mut kappa = 1.0;

    let b_norm = data.b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_norm = block_dot(&data.c, &data.c).sqrt();

    // Best iterate seen so far, by the worst of the three normalized
    // metrics; any numerical breakdown falls back to it.
    struct Best {
        score: f64,
        x: Vec<Vec<f64>>,
        y: Vec<f64>,
        s: Vec<Vec<f64>>,
        primal_objective: f64,
        dual_objective: f64,
        primal_res: f64,
        dual_res: f64,
        rel_gap: f64,
    }
    let mut best: Option<Best> = None;

    let mut consecutive_short_steps = 0usize;
    let mut iterations = 0usize;
    let mut broke_down = false;

    'iterations: for iter in 0..opts.max_iter {
        // Residuals of the homogeneous model.
        let mut p_res = vec![0.0; m]; // A(x) - b*tau
        for i in 0..m {
            p_res[i] = block_dot(&data.rows[i], &x) - data.b[i] * tau;
        }
        let mut d_res = block_zeros(sizes); // A^T(y) + s - c*tau
        for i in 0..m {
            block_axpy(y[i], &data.rows[i], &mut d_res);
        }
        block_axpy(1.0, &s, &mut d_res);
        block_axpy(-tau, &data.c, &mut d_res);
        let cx = block_dot(&data.c, &x);
        let by = dot(&data.b, &y);
        let g_res = cx - by + kappa;

        // Unscaled convergence metrics.
        let pobj = cx / tau;
        let dobj = by / tau;
        let pres_norm = p_res.iter().map(|v| v * v).sum::<f64>().sqrt() / tau / (1.0 + b_norm);
        let dres_norm = block_dot(&d_res, &d_res).sqrt() / tau / (1.0 + c_norm);
        let xs = block_dot(&x, &s);
        let rel_gap = (xs / (tau * tau)) / (1.0 + pobj.abs().max(dobj.abs()));

        if std::env::var_os("FDSWIPT_IPM_TRACE").is_some() {
            eprintln!(
                "iter {iter:3} pres {pres_norm:9.2e} dres {dres_norm:9.2e} gap {rel_gap:9.2e} tau {tau:9.2e} kappa {kappa:9.2e} mu {:9.2e}",
                (xs + tau * kappa) / (nu + 1.0)
            );
        }

        if !pres_norm.is_finite() || !dres_norm.is_finite() || !rel_gap.is_finite() {
            broke_down = true;
            break;
        }

        // Iterates inside the caller's tolerance are ranked by gap alone:
        // the gap keeps improving after the feasibility residuals hit their
        // floating-point floor, and complementarity quality follows the gap.
        let worst = pres_norm.max(dres_norm).max(rel_gap.max(0.0));
        let score = if worst <= opts.accept_tol {
            rel_gap.max(0.0) * 1e-6
        } else {
            worst
        };
        if best.as_ref().map_or(true, |b| score < b.score) {
            let inv_tau = 1.0 / tau;
            best = Some(Best {
                score,
                x: x.iter()
                    .map(|b| b.iter().map(|v| v * inv_tau).collect())
                    .collect(),
                y: y.iter().map(|v| v * inv_tau).collect(),
                s: s.iter()
                    .map(|b| b.iter().map(|v| v * inv_tau).collect())
                    .collect(),
                primal_objective: pobj,
                dual_objective: dobj,
                primal_res: pres_norm,
                dual_res: dres_norm,
                rel_gap,
            });
        }
        iterations = iter;

        if pres_norm <= opts.tol && dres_norm <= opts.tol && rel_gap <= opts.tol {
            break;
        }

        // Infeasibility via the tau/kappa ratio test. The better-normalized
        // certificate decides between primal infeasibility (dual ray with
        // b^T y > 0) and unboundedness (primal ray with c^T x < 0).
        if tau <= TAU_KAPPA_RATIO * kappa {
            // |A^T y + s| along the candidate dual ray.
            let mut dual_ray = d_res.clone();
            block_axpy(tau, &data.c, &mut dual_ray);
            let dual_ray_res = block_dot(&dual_ray, &dual_ray).sqrt();
            // |A(x)| along the candidate primal ray.
            let primal_ray_res = p_res
                .iter()
                .zip(&data.b)
                .map(|(r, bi)| (r + tau * bi).powi(2))
                .sum::<f64>()
                .sqrt();
            let q_infeas = if by > 0.0 {
                dual_ray_res / by
            } else {
                f64::INFINITY
            };
            let q_unbounded = if cx < 0.0 {
                primal_ray_res / -cx
            } else {
                f64::INFINITY
            };
            let status = if q_infeas.is_infinite() && q_unbounded.is_infinite() {
                IpmStatus::NumericalTrouble
            } else if q_infeas <= q_unbounded {
                IpmStatus::PrimalInfeasible
            } else {
                IpmStatus::DualInfeasible
            };
            let ray = if status == IpmStatus::PrimalInfeasible {
                // Normalize the dual ray so b^T y = 1 and report its residual.
                Some((1.0, dual_ray_res / by))
            } else {
                None
            };
            return IpmResult {
                status,
                x,
                y,
                s,
                primal_objective: pobj,
                dual_objective: dobj,
                primal_res: pres_norm,
                dual_res: dres_norm,
                rel_gap,
                iterations: iter,
                ray,
            };
        }

        let mu = (xs + tau * kappa) / (nu + 1.0);
        if !(mu.is_finite() && mu > 0.0) {
            broke_down = true;
            break;
        }

        // NT scaling per block.
        let mut scalings = Vec::with_capacity(sizes.len());
        for (bi, &n) in sizes.iter().enumerate() {
            match NtScaling::compute(n, &x[bi], &s[bi]) {
                Some(sc) => scalings.push(sc),
                None => {
                    broke_down = true;
                    break 'iterations;
                }
            }
        }

        // Scaled data: a_hat[i][b] = r^T a r, c_hat likewise.
        let a_hat: Vec<Vec<Vec<f64>>> = data
            .rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&scalings)
                    .map(|(ab, sc)| sc.scale_mat(ab))
                    .collect()
            })
            .collect();
        let c_hat: Vec<Vec<f64>> = data
            .c
            .iter()
            .zip(&scalings)
            .map(|(cb, sc)| sc.scale_mat(cb))
            .collect();
        let d_hat: Vec<Vec<f64>> = d_res
            .iter()
            .zip(&scalings)
            .map(|(db, sc)| sc.scale_mat(db))
            .collect();

        // Schur complement M_ij = <a_hat_i, a_hat_j>, factored once.
        let mut schur = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = block_dot(&a_hat[i], &a_hat[j]);
                schur[i * m + j] = v;
                schur[j * m + i] = v;
            }
        }
        let chol = match Chol::factor(m, &schur) {
            Some(c) => Some(c),
            None => {
                // One regularized retry before giving up on the iteration.
                let max_diag = (0..m).map(|i| schur[i * m + i]).fold(0.0f64, f64::max);
                let mut reg = schur.clone();
                for i in 0..m {
                    reg[i * m + i] += 1e-12 * max_diag.max(1e-300);
                }
                Chol::factor(m, &reg)
            }
        };
        let chol = match chol {
            Some(c) => c,
            None => {
                broke_down = true;
                break;
            }
        };

        let lambdas: Vec<&[f64]> = scalings.iter().map(|sc| sc.lambda.as_slice()).collect();

        // q2 / y2 / x2_hat do not depend on the right-hand side choice.
        let q2: Vec<f64> = (0..m)
            .map(|i| block_dot(&a_hat[i], &c_hat) + data.b[i])
            .collect();
        let y2 = chol.solve_refined(&schur, &q2);
        let mut x2_hat = block_zeros(sizes);
        for i in 0..m {
            block_axpy(y2[i], &a_hat[i], &mut x2_hat);
        }
        block_axpy(-1.0, &c_hat, &mut x2_hat);

        // Shared direction solve given the complementarity right-hand sides.
        let solve_direction = |rhs4: &Vec<Vec<f64>>, rhs5: f64| -> Direction {
            // d2 = L_lambda^{-1}(rhs4), entrywise in scaled space.
            let mut d2 = rhs4.clone();
            for (bi, &n) in sizes.iter().enumerate() {
                let lam = lambdas[bi];
                for i in 0..n {
                    for j in 0..n {
                        d2[bi][i * n + j] *= 2.0 / (lam[i] + lam[j]);
                    }
                }
            }
            let mut d2_plus_dhat = d2.clone();
            block_axpy(1.0, &d_hat, &mut d2_plus_dhat);

            let q1: Vec<f64> = (0..m)
                .map(|i| -p_res[i] - block_dot(&a_hat[i], &d2_plus_dhat))
                .collect();
            let y1 = chol.solve_refined(&schur, &q1);

            let mut x1_hat = d2_plus_dhat;
            for i in 0..m {
                block_axpy(y1[i], &a_hat[i], &mut x1_hat);
            }

            let num = -g_res - block_dot(&c_hat, &x1_hat) + dot(&data.b, &y1) - rhs5 / tau;
            let den = block_dot(&c_hat, &x2_hat) - dot(&data.b, &y2) - kappa / tau;
            let dtau = if den.abs() > f64::MIN_POSITIVE {
                num / den
            } else {
                0.0
            };

            let mut dx_hat = x1_hat;
            block_axpy(dtau, &x2_hat, &mut dx_hat);
            let mut ds_hat = d2;
            block_axpy(-1.0, &dx_hat, &mut ds_hat);
            let dy: Vec<f64> = y1.iter().zip(&y2).map(|(a, b)| a + dtau * b).collect();
            let dkappa = (rhs5 - kappa * dtau) / tau;
            Direction {
                dx_hat,
                ds_hat,
                dy,
                dtau,
                dkappa,
            }
        };

        let step_bound = |dir: &Direction, cap: f64| -> f64 {
            let mut alpha = cap;
            for (bi, &n) in sizes.iter().enumerate() {
                alpha = max_step(n, lambdas[bi], &dir.dx_hat[bi], alpha);
                alpha = max_step(n, lambdas[bi], &dir.ds_hat[bi], alpha);
            }
            if dir.dtau < 0.0 {
                alpha = alpha.min(-tau / dir.dtau);
            }
            if dir.dkappa < 0.0 {
                alpha = alpha.min(-kappa / dir.dkappa);
            }
            alpha
        };

        // Predictor (affine) direction.
        let mut rhs4_aff = block_zeros(sizes);
        for (bi, &n) in sizes.iter().enumerate() {
            for i in 0..n {
                rhs4_aff[bi][i * n + i] = -lambdas[bi][i] * lambdas[bi][i];
            }
        }
        let aff = solve_direction(&rhs4_aff, -tau * kappa);
        let alpha_aff = step_bound(&aff, 1.0);

        // Mehrotra centering parameter from the affine trial point.
        let lam_sq: f64 = xs; // sum of lambda^2 over blocks
        let lam_dx: f64 = sizes
            .iter()
            .enumerate()
            .map(|(bi, &n)| (0..n).map(|i| lambdas[bi][i] * aff.dx_hat[bi][i * n + i]).sum::<f64>())
            .sum();
        let lam_ds: f64 = sizes
            .iter()
            .enumerate()
            .map(|(bi, &n)| (0..n).map(|i| lambdas[bi][i] * aff.ds_hat[bi][i * n + i]).sum::<f64>())
            .sum();
        let dxds: f64 = block_dot(&aff.dx_hat, &aff.ds_hat);
        let trial_xs = lam_sq
            + alpha_aff * (lam_dx + lam_ds)
            + alpha_aff * alpha_aff * dxds
            + (tau + alpha_aff * aff.dtau) * (kappa + alpha_aff * aff.dkappa);
        let sigma = ((trial_xs / (xs + tau * kappa)).clamp(0.0, 1.0)).powi(3);

        // Corrector right-hand side: sigma*mu*I - lambda^2 - sym(dx_aff ds_aff).
        let mut rhs4 = block_zeros(sizes);
        for (bi, &n) in sizes.iter().enumerate() {
            let prod = mat_mul(n, &aff.dx_hat[bi], &aff.ds_hat[bi]);
            for i in 0..n {
                for j in 0..n {
                    let sym = 0.5 * (prod[i * n + j] + prod[j * n + i]);
                    rhs4[bi][i * n + j] = -sym;
                }
                rhs4[bi][i * n + i] += sigma * mu - lambdas[bi][i] * lambdas[bi][i];
            }
        }
        let rhs5 = sigma * mu - tau * kappa - aff.dtau * aff.dkappa;
        let dir = solve_direction(&rhs4, rhs5);

        let alpha = STEP_FRACTION * step_bound(&dir, 1.0 / STEP_FRACTION);
        let alpha = alpha.min(1.0);
        if alpha < 1e-10 {
            consecutive_short_steps += 1;
            if consecutive_short_steps >= 3 {
                broke_down = true;
                break;
            }
        } else {
            consecutive_short_steps = 0;
        }

        // Unscale the directions and take the step.
        for (bi, sc) in scalings.iter().enumerate() {
            let dx = sc.unscale_primal(&dir.dx_hat[bi]);
            let ds = sc.unscale_dual(&dir.ds_hat[bi]);
            for (xv, dv) in x[bi].iter_mut().zip(&dx) {
                *xv += alpha * dv;
            }
            for (sv, dv) in s[bi].iter_mut().zip(&ds) {
                *sv += alpha * dv;
            }
            let n = sizes[bi];
            symmetrize(n, &mut x[bi]);
            symmetrize(n, &mut s[bi]);
        }
        for (yv, dv) in y.iter_mut().zip(&dir.dy) {
            *yv += alpha * dv;
        }
        tau += alpha * dir.dtau;
        kappa += alpha * dir.dkappa;
        if tau <= 0.0 || kappa <= 0.0 || !tau.is_finite() || !kappa.is_finite() {
            broke_down = true;
            break;
        }
    }

    // Ran out of iterations or broke down: hand back the best iterate when
    // it is anywhere near usable, otherwise report numerical trouble.
    match best {
        Some(b) if !broke_down || b.score <= 1e-4 => IpmResult {
            status: IpmStatus::MaxIter,
            x: b.x,
            y: b.y,
            s: b.s,
            primal_objective: b.primal_objective,
            dual_objective: b.dual_objective,
            primal_res: b.primal_res,
            dual_res: b.dual_res,
            rel_gap: b.rel_gap,
            iterations,
            ray: None,
        },
        _ => IpmResult {
            status: IpmStatus::NumericalTrouble,
            x: block_zeros(sizes),
            y: vec![0.0; m],
            s: block_zeros(sizes),
            primal_objective: f64::NAN,
            dual_objective: f64::NAN,
            primal_res: f64::NAN,
            dual_res: f64::NAN,
            rel_gap: f64::NAN,
            iterations,
            ray: None,
        },
    }
}
