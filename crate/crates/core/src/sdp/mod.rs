//! Small dense conic solver for problems with complex Hermitian PSD blocks,
//! 2x2 real PSD blocks, nonnegative scalars and free scalars under real
//! linear constraints.
//!
//! Hermitian blocks are realified internally with the standard
//! `[[Re, -Im], [Im, Re]]` embedding (the duplicated spectrum is absorbed by
//! halving the embedded coefficients), free scalars are split into
//! differences of nonnegative scalars, and inequality rows receive slack
//! blocks. The resulting pure standard-form SDP goes to the homogeneous
//! self-dual engine in [`ipm`]. Infeasibility is declared by the embedding's
//! tau/kappa ratio test.
//!
//! Hyperbolic constraints `t * rho >= c^2` are modelled by the caller as 2x2
//! PSD blocks `[[t, c], [c, rho]]` with the off-diagonal pinned by an
//! equality row; no second-order cone type exists here.

mod ipm;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{hermitian_eig, ComplexMatrix};
use ipm::{solve_ipm, IpmOptions, IpmStatus, SdpData};

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("tolerance {0:e} outside supported range [1e-12, 1e-4]")]
    InvalidTolerance(f64),
}

/// Cone block descriptors. Variables are the entries of the blocks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    /// Complex Hermitian PSD block of the given order.
    HermitianPsd(usize),
    /// Real symmetric 2x2 PSD block.
    Real2x2Psd,
    /// Scalar constrained to be nonnegative.
    NonnegScalar,
    /// Unconstrained scalar.
    FreeScalar,
}

/// Coefficient of one block inside a linear functional.
///
/// The functional value contributed by a block is `Re tr(C^H X)` for
/// Hermitian blocks, `c00*x00 + 2*c01*x01 + c11*x11` for 2x2 blocks and
/// plain products for scalars.
#[derive(Debug, Clone)]
pub enum BlockCoeff {
    Hermitian(ComplexMatrix),
    Sym2x2 { e00: f64, e01: f64, e11: f64 },
    Scalar(f64),
}

/// Real linear functional over block entries.
#[derive(Debug, Clone, Default)]
pub struct LinearExpr {
    pub terms: Vec<(usize, BlockCoeff)>,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self { terms: Vec::new() }
    }

    pub fn with(mut self, block: usize, coeff: BlockCoeff) -> Self {
        self.terms.push((block, coeff));
        self
    }

    /// Evaluates the functional at the given block values.
    pub fn eval(&self, values: &[BlockValue]) -> f64 {
        self.terms
            .iter()
            .map(|(b, coeff)| match (coeff, &values[*b]) {
                (BlockCoeff::Hermitian(c), BlockValue::Hermitian(x)) => c.real_inner(x),
                (
                    BlockCoeff::Sym2x2 { e00, e01, e11 },
                    BlockValue::Sym2x2 {
                        e00: x00,
                        e01: x01,
                        e11: x11,
                    },
                ) => e00 * x00 + 2.0 * e01 * x01 + e11 * x11,
                (BlockCoeff::Scalar(c), BlockValue::Scalar(x)) => c * x,
                _ => panic!("coefficient kind does not match block value"),
            })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub expr: LinearExpr,
    pub relation: Relation,
    pub rhs: f64,
    /// Free-form tag so callers can find this row's dual multiplier.
    pub label: String,
}

/// Block-structured conic problem: minimize a linear functional over the
/// product of the declared cones subject to linear rows.
#[derive(Debug, Clone, Default)]
pub struct ConicProblem {
    pub blocks: Vec<BlockKind>,
    pub objective: LinearExpr,
    pub constraints: Vec<Constraint>,
}

/// Primal value of one block.
#[derive(Debug, Clone)]
pub enum BlockValue {
    Hermitian(ComplexMatrix),
    Sym2x2 { e00: f64, e01: f64, e11: f64 },
    Scalar(f64),
}

impl BlockValue {
    pub fn as_hermitian(&self) -> &ComplexMatrix {
        match self {
            BlockValue::Hermitian(m) => m,
            _ => panic!("block is not Hermitian"),
        }
    }

    pub fn as_sym2x2(&self) -> (f64, f64, f64) {
        match self {
            BlockValue::Sym2x2 { e00, e01, e11 } => (*e00, *e01, *e11),
            _ => panic!("block is not a 2x2 block"),
        }
    }

    pub fn as_scalar(&self) -> f64 {
        match self {
            BlockValue::Scalar(v) => *v,
            _ => panic!("block is not a scalar"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    MaxIter,
    NumericalTrouble,
}

/// Normalized residual summary attached to a solution.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct KktSummary {
    pub primal_res: f64,
    pub dual_res: f64,
    pub gap: f64,
}

/// Dual improving ray report attached to infeasible declarations.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    /// `b^T y` along the normalized ray (positive proves infeasibility).
    pub ray_objective: f64,
    /// Residual `|A^T y + s|` of the normalized ray.
    pub ray_residual: f64,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: SolveStatus,
    /// Primal block values, same order as the problem's blocks.
    pub blocks: Vec<BlockValue>,
    /// One multiplier per constraint; nonnegative for `Ge` rows.
    pub duals: Vec<f64>,
    pub objective: f64,
    pub kkt: KktSummary,
    pub iterations: usize,
    pub infeasibility: Option<InfeasibilityCertificate>,
}

impl ConicSolution {
    /// Dual multiplier of the first constraint whose label matches.
    pub fn dual_by_label(&self, problem: &ConicProblem, label: &str) -> Option<f64> {
        problem
            .constraints
            .iter()
            .position(|c| c.label == label)
            .map(|i| self.duals[i])
    }
}

// ─── Validation ─────────────────────────────────────────────────────────────

fn coeff_matches(kind: &BlockKind, coeff: &BlockCoeff) -> bool {
    matches!(
        (kind, coeff),
        (BlockKind::HermitianPsd(_), BlockCoeff::Hermitian(_))
            | (BlockKind::Real2x2Psd, BlockCoeff::Sym2x2 { .. })
            | (BlockKind::NonnegScalar, BlockCoeff::Scalar(_))
            | (BlockKind::FreeScalar, BlockCoeff::Scalar(_))
    )
}

fn validate_expr(problem: &ConicProblem, expr: &LinearExpr, what: &str) -> Result<(), SdpError> {
    for (b, coeff) in &expr.terms {
        let kind = problem
            .blocks
            .get(*b)
            .ok_or_else(|| SdpError::InvalidProblem(format!("{what} references block {b}")))?;
        if !coeff_matches(kind, coeff) {
            return Err(SdpError::InvalidProblem(format!(
                "{what}: coefficient kind does not match block {b}"
            )));
        }
        match coeff {
            BlockCoeff::Hermitian(c) => {
                let n = match kind {
                    BlockKind::HermitianPsd(n) => *n,
                    _ => unreachable!(),
                };
                if c.rows() != n || c.cols() != n {
                    return Err(SdpError::InvalidProblem(format!(
                        "{what}: coefficient for block {b} must be {n}x{n}"
                    )));
                }
                if !c.is_hermitian(1e-12 * (1.0 + c.frobenius_norm())) {
                    return Err(SdpError::InvalidProblem(format!(
                        "{what}: coefficient for block {b} is not Hermitian"
                    )));
                }
            }
            BlockCoeff::Sym2x2 { e00, e01, e11 } => {
                if ![e00, e01, e11].iter().all(|v| v.is_finite()) {
                    return Err(SdpError::InvalidProblem(format!(
                        "{what}: non-finite 2x2 coefficient for block {b}"
                    )));
                }
            }
            BlockCoeff::Scalar(v) => {
                if !v.is_finite() {
                    return Err(SdpError::InvalidProblem(format!(
                        "{what}: non-finite scalar coefficient for block {b}"
                    )));
                }
            }
        }
    }
    Ok(())
}

impl ConicProblem {
    pub fn validate(&self) -> Result<(), SdpError> {
        validate_expr(self, &self.objective, "objective")?;
        for (i, con) in self.constraints.iter().enumerate() {
            validate_expr(self, &con.expr, &format!("constraint {i}"))?;
            if !con.rhs.is_finite() {
                return Err(SdpError::InvalidProblem(format!(
                    "constraint {i} has non-finite right-hand side"
                )));
            }
            if con.expr.terms.is_empty() {
                return Err(SdpError::InvalidProblem(format!(
                    "constraint {i} has no terms"
                )));
            }
        }
        Ok(())
    }

    /// Line-oriented text dump for cross-checking against external solvers.
    ///
    /// Format (stable, one record per line):
    /// `version 1`, then `block <idx> <kind> [order]` per block, then
    /// `objective` followed by `term <block> <entry> <coeff>` lines, then per
    /// constraint `constraint <idx> <eq|ge> <rhs> <label>` followed by its
    /// `term` lines. Entries are `re i j` / `im i j` for Hermitian blocks
    /// (upper triangle, coefficients of off-diagonal entries already include
    /// the symmetry factor 2), `e00|e01|e11` for 2x2 blocks (`e01` includes
    /// the factor 2) and `s` for scalars, so a functional value is literally
    /// `sum coeff * entry`.
    pub fn dump_text(&self) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        writeln!(out, "version 1").unwrap();
        writeln!(out, "blocks {}", self.blocks.len()).unwrap();
        for (i, b) in self.blocks.iter().enumerate() {
            match b {
                BlockKind::HermitianPsd(n) => writeln!(out, "block {i} hermitian_psd {n}"),
                BlockKind::Real2x2Psd => writeln!(out, "block {i} real2x2_psd"),
                BlockKind::NonnegScalar => writeln!(out, "block {i} nonneg_scalar"),
                BlockKind::FreeScalar => writeln!(out, "block {i} free_scalar"),
            }
            .unwrap();
        }
        let dump_expr = |out: &mut String, expr: &LinearExpr| {
            for (b, coeff) in &expr.terms {
                match coeff {
                    BlockCoeff::Hermitian(c) => {
                        let n = c.rows();
                        for i in 0..n {
                            for j in i..n {
                                let z = c.get(i, j);
                                let factor = if i == j { 1.0 } else { 2.0 };
                                if z.re != 0.0 {
                                    writeln!(out, "term {b} re {i} {j} {:e}", factor * z.re)
                                        .unwrap();
                                }
                                if i != j && z.im != 0.0 {
                                    writeln!(out, "term {b} im {i} {j} {:e}", factor * z.im)
                                        .unwrap();
                                }
                            }
                        }
                    }
                    BlockCoeff::Sym2x2 { e00, e01, e11 } => {
                        if *e00 != 0.0 {
                            writeln!(out, "term {b} e00 {:e}", e00).unwrap();
                        }
                        if *e01 != 0.0 {
                            writeln!(out, "term {b} e01 {:e}", 2.0 * e01).unwrap();
                        }
                        if *e11 != 0.0 {
                            writeln!(out, "term {b} e11 {:e}", e11).unwrap();
                        }
                    }
                    BlockCoeff::Scalar(v) => {
                        if *v != 0.0 {
                            writeln!(out, "term {b} s {:e}", v).unwrap();
                        }
                    }
                }
            }
        };
        writeln!(out, "objective").unwrap();
        dump_expr(&mut out, &self.objective);
        writeln!(out, "constraints {}", self.constraints.len()).unwrap();
        for (i, con) in self.constraints.iter().enumerate() {
            let rel = match con.relation {
                Relation::Eq => "eq",
                Relation::Ge => "ge",
            };
            writeln!(out, "constraint {i} {rel} {:e} {}", con.rhs, con.label).unwrap();
            dump_expr(&mut out, &con.expr);
        }
        out
    }
}

// ─── Lowering to real standard form ─────────────────────────────────────────

enum LoweredBlock {
    Herm { idx: usize, n: usize },
    Sym2 { idx: usize },
    Nonneg { idx: usize },
    Free { plus: usize, minus: usize },
}

struct Lowering {
    sizes: Vec<usize>,
    map: Vec<LoweredBlock>,
}

fn lower_blocks(blocks: &[BlockKind]) -> Lowering {
    let mut sizes = Vec::new();
    let mut map = Vec::new();
    for kind in blocks {
        match kind {
            BlockKind::HermitianPsd(n) => {
                map.push(LoweredBlock::Herm {
                    idx: sizes.len(),
                    n: *n,
                });
                sizes.push(2 * n);
            }
            BlockKind::Real2x2Psd => {
                map.push(LoweredBlock::Sym2 { idx: sizes.len() });
                sizes.push(2);
            }
            BlockKind::NonnegScalar => {
                map.push(LoweredBlock::Nonneg { idx: sizes.len() });
                sizes.push(1);
            }
            BlockKind::FreeScalar => {
                map.push(LoweredBlock::Free {
                    plus: sizes.len(),
                    minus: sizes.len() + 1,
                });
                sizes.push(1);
                sizes.push(1);
            }
        }
    }
    Lowering { sizes, map }
}

fn add_coeff(target: &mut [Vec<f64>], lowered: &LoweredBlock, coeff: &BlockCoeff, w: f64) {
    match (lowered, coeff) {
        (LoweredBlock::Herm { idx, n }, BlockCoeff::Hermitian(c)) => {
            let n = *n;
            let m = 2 * n;
            let blk = &mut target[*idx];
            // Embedded coefficient embed(C)/2 so that <emb(C)/2, emb(Z)> = Re tr(C^H Z).
            for i in 0..n {
                for j in 0..n {
                    let z = c.get(i, j);
                    blk[i * m + j] += w * 0.5 * z.re;
                    blk[(n + i) * m + (n + j)] += w * 0.5 * z.re;
                    blk[i * m + (n + j)] += w * -0.5 * z.im;
                    blk[(n + i) * m + j] += w * 0.5 * z.im;
                }
            }
        }
        (LoweredBlock::Sym2 { idx }, BlockCoeff::Sym2x2 { e00, e01, e11 }) => {
            let blk = &mut target[*idx];
            blk[0] += w * e00;
            blk[1] += w * e01;
            blk[2] += w * e01;
            blk[3] += w * e11;
        }
        (LoweredBlock::Nonneg { idx }, BlockCoeff::Scalar(v)) => {
            target[*idx][0] += w * v;
        }
        (LoweredBlock::Free { plus, minus }, BlockCoeff::Scalar(v)) => {
            target[*plus][0] += w * v;
            target[*minus][0] -= w * v;
        }
        _ => unreachable!("validated problems cannot mismatch"),
    }
}

fn extract_block(kind: &BlockKind, lowered: &LoweredBlock, x: &[Vec<f64>]) -> BlockValue {
    match (kind, lowered) {
        (BlockKind::HermitianPsd(n), LoweredBlock::Herm { idx, .. }) => {
            let n = *n;
            let m = 2 * n;
            let blk = &x[*idx];
            let mut z = ComplexMatrix::zeros(n, n);
            for i in 0..n {
                for j in 0..n {
                    let re = 0.5 * (blk[i * m + j] + blk[(n + i) * m + (n + j)]);
                    let im = 0.5 * (blk[(n + i) * m + j] - blk[i * m + (n + j)]);
                    z.set(i, j, Complex64::new(re, im));
                }
            }
            z.hermitianize();
            BlockValue::Hermitian(z)
        }
        (BlockKind::Real2x2Psd, LoweredBlock::Sym2 { idx }) => {
            let blk = &x[*idx];
            BlockValue::Sym2x2 {
                e00: blk[0],
                e01: 0.5 * (blk[1] + blk[2]),
                e11: blk[3],
            }
        }
        (BlockKind::NonnegScalar, LoweredBlock::Nonneg { idx }) => BlockValue::Scalar(x[*idx][0]),
        (BlockKind::FreeScalar, LoweredBlock::Free { plus, minus }) => {
            BlockValue::Scalar(x[*plus][0] - x[*minus][0])
        }
        _ => unreachable!(),
    }
}

// ─── Solve ──────────────────────────────────────────────────────────────────

/// Solves the conic problem to the requested tolerance.
///
/// Statuses other than `Optimal` are reported inside the solution; `Err` is
/// reserved for malformed problems. On `NumericalTrouble` the solve restarts
/// once from a 100x larger interior initialization.
pub fn solve(
    problem: &ConicProblem,
    tol: f64,
    max_iter: usize,
) -> Result<ConicSolution, SdpError> {
    if !(1e-12..=1e-4).contains(&tol) {
        return Err(SdpError::InvalidTolerance(tol));
    }
    problem.validate()?;

    let lowering = lower_blocks(&problem.blocks);
    let mut sizes = lowering.sizes.clone();
    let m = problem.constraints.len();

    // Objective, normalized to unit Frobenius scale.
    let mut c = vec_blocks(&sizes);
    for (b, coeff) in &problem.objective.terms {
        add_coeff(&mut c, &lowering.map[*b], coeff, 1.0);
    }
    let obj_scale = c
        .iter()
        .flat_map(|b| b.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1.0);
    for blk in c.iter_mut() {
        for v in blk.iter_mut() {
            *v /= obj_scale;
        }
    }

    // Rows: build, append slack blocks for inequalities, normalize.
    let mut rows: Vec<Vec<Vec<f64>>> = Vec::with_capacity(m);
    let mut b_vec = Vec::with_capacity(m);
    let mut slack_of_row: Vec<Option<usize>> = Vec::with_capacity(m);
    for con in &problem.constraints {
        let mut row = vec_blocks(&sizes);
        for (b, coeff) in &con.expr.terms {
            add_coeff(&mut row, &lowering.map[*b], coeff, 1.0);
        }
        if con.relation == Relation::Ge {
            slack_of_row.push(Some(sizes.len()));
            sizes.push(1);
        } else {
            slack_of_row.push(None);
        }
        rows.push(row);
        b_vec.push(con.rhs);
    }
    // Resize all block lists to the final block count and install slacks.
    while c.len() < sizes.len() {
        c.push(vec![0.0; 1]);
    }
    for (i, row) in rows.iter_mut().enumerate() {
        while row.len() < sizes.len() {
            row.push(vec![0.0; 1]);
        }
        if let Some(slack) = slack_of_row[i] {
            row[slack][0] = -1.0;
        }
    }

    // Row normalization; duals are rescaled back on extraction.
    let mut row_weight = vec![1.0; m];
    for (i, row) in rows.iter_mut().enumerate() {
        let norm = row
            .iter()
            .flat_map(|b| b.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        if norm > 0.0 {
            row_weight[i] = norm;
            for blk in row.iter_mut() {
                for v in blk.iter_mut() {
                    *v /= norm;
                }
            }
            b_vec[i] /= norm;
        }
    }

    let data = SdpData {
        sizes: sizes.clone(),
        c,
        rows,
        b: b_vec,
    };

    let base_scale = 1.0_f64.max(
        data.b
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()))
            .sqrt(),
    );
    // The engine runs to its numerical floor regardless of the requested
    // tolerance; `tol` only decides which iterates are acceptable. Squeezing
    // the complementarity gap as far as the arithmetic allows is what makes
    // the rank-one extraction and the dual certificates sharp.
    let internal_tol = 1e-16;
    let mut result = solve_ipm(
        &data,
        &IpmOptions {
            tol: internal_tol,
            accept_tol: 0.5 * tol,
            max_iter,
            init_scale: base_scale,
        },
    );
    if result.status == IpmStatus::NumericalTrouble {
        result = solve_ipm(
            &data,
            &IpmOptions {
                tol: internal_tol,
                accept_tol: 0.5 * tol,
                max_iter,
                init_scale: 100.0 * base_scale,
            },
        );
    }

    let status = match result.status {
        IpmStatus::Optimal => SolveStatus::Optimal,
        IpmStatus::PrimalInfeasible => SolveStatus::Infeasible,
        IpmStatus::DualInfeasible => SolveStatus::Unbounded,
        IpmStatus::MaxIter => SolveStatus::MaxIter,
        IpmStatus::NumericalTrouble => SolveStatus::NumericalTrouble,
    };

    let blocks: Vec<BlockValue> = problem
        .blocks
        .iter()
        .zip(&lowering.map)
        .map(|(kind, low)| extract_block(kind, low, &result.x))
        .collect();
    let duals: Vec<f64> = (0..m)
        .map(|i| result.y[i] * obj_scale / row_weight[i])
        .collect();

    let objective = problem.objective.eval(&blocks);
    let mut solution = ConicSolution {
        status,
        blocks,
        duals,
        objective,
        kkt: KktSummary {
            primal_res: f64::NAN,
            dual_res: f64::NAN,
            gap: f64::NAN,
        },
        iterations: result.iterations,
        infeasibility: result.ray.map(|(obj, res)| InfeasibilityCertificate {
            ray_objective: obj,
            ray_residual: res,
        }),
    };

    if status == SolveStatus::Optimal || status == SolveStatus::MaxIter {
        // Row violations are normalized by each row's own data scale, cone
        // violations by the block scale; this matches what the engine can
        // actually deliver on badly scaled rows.
        let mut primal: f64 = 0.0;
        for (i, con) in problem.constraints.iter().enumerate() {
            let v = con.expr.eval(&solution.blocks);
            let viol = match con.relation {
                Relation::Eq => (v - con.rhs).abs(),
                Relation::Ge => (con.rhs - v).max(0.0),
            };
            primal = primal.max(viol / (1.0 + row_weight[i] + con.rhs.abs()));
        }
        for (kind, value) in problem.blocks.iter().zip(&solution.blocks) {
            let me = block_min_eig(kind, value);
            if me.is_finite() {
                primal = primal.max((-me).max(0.0));
            }
        }
        let (_, d, g) = kkt_residuals(problem, &solution);
        let duality = dual_objective(problem, &solution);
        solution.kkt = KktSummary {
            primal_res: primal,
            dual_res: d / (1.0 + obj_scale),
            gap: g.abs() / (1.0 + objective.abs().max(duality.abs())),
        };
        // A stall that already meets the caller's tolerance is an optimum.
        if status == SolveStatus::MaxIter
            && solution.kkt.primal_res <= tol
            && solution.kkt.dual_res <= tol
            && solution.kkt.gap <= tol
        {
            solution.status = SolveStatus::Optimal;
        }
    }
    Ok(solution)
}

fn vec_blocks(sizes: &[usize]) -> Vec<Vec<f64>> {
    sizes.iter().map(|&n| vec![0.0; n * n]).collect()
}

fn dual_objective(problem: &ConicProblem, solution: &ConicSolution) -> f64 {
    problem
        .constraints
        .iter()
        .zip(&solution.duals)
        .map(|(c, y)| c.rhs * y)
        .sum()
}

/// Smallest eigenvalue of a public block value (free scalars have no cone).
fn block_min_eig(kind: &BlockKind, value: &BlockValue) -> f64 {
    match (kind, value) {
        (BlockKind::HermitianPsd(_), BlockValue::Hermitian(z)) => hermitian_eig(z)
            .map(|e| *e.eigenvalues.last().unwrap_or(&0.0))
            .unwrap_or(f64::NEG_INFINITY),
        (BlockKind::Real2x2Psd, BlockValue::Sym2x2 { e00, e01, e11 }) => {
            0.5 * ((e00 + e11) - ((e00 - e11).powi(2) + 4.0 * e01 * e01).sqrt())
        }
        (BlockKind::NonnegScalar, BlockValue::Scalar(v)) => *v,
        (BlockKind::FreeScalar, BlockValue::Scalar(_)) => f64::INFINITY,
        _ => panic!("block kind/value mismatch"),
    }
}

/// Independent KKT residuals, computed from problem data only.
///
/// Returns `(primal_res, dual_res, gap)`: the largest primal violation
/// (constraint rows and cone membership), the largest dual violation (cone
/// membership of the slack `C - sum_i y_i A_i`, sign of inequality
/// multipliers, and exactness of free-scalar slacks), and the signed duality
/// gap `<c, x> - b^T y`.
pub fn kkt_residuals(problem: &ConicProblem, solution: &ConicSolution) -> (f64, f64, f64) {
    // Primal: row violations plus cone violations.
    let mut primal: f64 = 0.0;
    for con in &problem.constraints {
        let v = con.expr.eval(&solution.blocks);
        let viol = match con.relation {
            Relation::Eq => (v - con.rhs).abs(),
            Relation::Ge => (con.rhs - v).max(0.0),
        };
        primal = primal.max(viol);
    }
    for (kind, value) in problem.blocks.iter().zip(&solution.blocks) {
        let me = block_min_eig(kind, value);
        if me.is_finite() {
            primal = primal.max((-me).max(0.0));
        }
    }

    // Dual: slack per block from data and multipliers only.
    let mut dual: f64 = 0.0;
    for (b, kind) in problem.blocks.iter().enumerate() {
        let mut slack = match kind {
            BlockKind::HermitianPsd(n) => SlackAccum::Herm(ComplexMatrix::zeros(*n, *n)),
            BlockKind::Real2x2Psd => SlackAccum::Sym([0.0; 3]),
            BlockKind::NonnegScalar | BlockKind::FreeScalar => SlackAccum::Scalar(0.0),
        };
        accumulate(&mut slack, &problem.objective, b, 1.0);
        for (con, y) in problem.constraints.iter().zip(&solution.duals) {
            accumulate(&mut slack, &con.expr, b, -y);
        }
        let viol = match (kind, slack) {
            (BlockKind::FreeScalar, SlackAccum::Scalar(v)) => v.abs(),
            (BlockKind::NonnegScalar, SlackAccum::Scalar(v)) => (-v).max(0.0),
            (BlockKind::Real2x2Psd, SlackAccum::Sym([a, c, d])) => {
                (-0.5 * ((a + d) - ((a - d).powi(2) + 4.0 * c * c).sqrt())).max(0.0)
            }
            (BlockKind::HermitianPsd(_), SlackAccum::Herm(mut z)) => {
                z.hermitianize();
                let me = hermitian_eig(&z)
                    .map(|e| *e.eigenvalues.last().unwrap_or(&0.0))
                    .unwrap_or(f64::NEG_INFINITY);
                (-me).max(0.0)
            }
            _ => unreachable!(),
        };
        dual = dual.max(viol);
    }
    for (con, y) in problem.constraints.iter().zip(&solution.duals) {
        if con.relation == Relation::Ge {
            dual = dual.max((-y).max(0.0));
        }
    }

    let gap = problem.objective.eval(&solution.blocks) - dual_objective(problem, solution);
    (primal, dual, gap)
}

enum SlackAccum {
    Herm(ComplexMatrix),
    Sym([f64; 3]),
    Scalar(f64),
}

fn accumulate(acc: &mut SlackAccum, expr: &LinearExpr, block: usize, w: f64) {
    for (b, coeff) in &expr.terms {
        if *b != block {
            continue;
        }
        match (&mut *acc, coeff) {
            (SlackAccum::Herm(z), BlockCoeff::Hermitian(c)) => {
                for i in 0..z.rows() {
                    for j in 0..z.cols() {
                        let v = z.get(i, j) + c.get(i, j) * w;
                        z.set(i, j, v);
                    }
                }
            }
            (SlackAccum::Sym(s), BlockCoeff::Sym2x2 { e00, e01, e11 }) => {
                s[0] += w * e00;
                s[1] += w * e01;
                s[2] += w * e11;
            }
            (SlackAccum::Scalar(s), BlockCoeff::Scalar(v)) => *s += w * v,
            _ => panic!("coefficient kind does not match block"),
        }
    }
}

#[cfg(test)]
mod tests;
