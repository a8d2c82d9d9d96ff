use super::*;
use crate::linalg::ComplexMatrix;
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

const TOL: f64 = 1e-9;

fn herm_coeff(n: usize, f: impl FnMut(usize, usize) -> Complex64) -> BlockCoeff {
    let mut m = ComplexMatrix::from_fn(n, n, f);
    m.hermitianize();
    BlockCoeff::Hermitian(m)
}

/// minimize tr(X) s.t. X >= I, via the shifted variable Y = X - I >= 0.
#[test]
fn shifted_cone_identity() {
    let problem = ConicProblem {
        blocks: vec![BlockKind::HermitianPsd(2)],
        objective: LinearExpr::new().with(0, herm_coeff(2, |i, j| c((i == j) as u8 as f64, 0.0))),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, herm_coeff(2, |i, j| c((i == j) as u8 as f64, 0.0))),
            relation: Relation::Ge,
            rhs: 0.0,
            label: "trace-nonneg".into(),
        }],
    };
    let sol = solve(&problem, TOL, 100).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    // Y* = 0, so X* = Y* + I = I and tr(X*) = 2.
    let y = sol.blocks[0].as_hermitian();
    assert!(y.frobenius_norm() < 1e-6, "Y should vanish");
    let x_trace = y.trace().re + 2.0;
    assert!((x_trace - 2.0).abs() < 1e-6);
    let (p, d, _g) = kkt_residuals(&problem, &sol);
    assert!(p < 1e-8 && d < 1e-8);
}

/// minimize t s.t. [[t, 1], [1, rho]] >= 0 with rho pinned at 0.5: t* = 2.
#[test]
fn hyperbolic_boundary() {
    let problem = ConicProblem {
        blocks: vec![BlockKind::Real2x2Psd],
        objective: LinearExpr::new().with(
            0,
            BlockCoeff::Sym2x2 {
                e00: 1.0,
                e01: 0.0,
                e11: 0.0,
            },
        ),
        constraints: vec![
            Constraint {
                expr: LinearExpr::new().with(
                    0,
                    BlockCoeff::Sym2x2 {
                        e00: 0.0,
                        e01: 0.5,
                        e11: 0.0,
                    },
                ),
                relation: Relation::Eq,
                rhs: 1.0,
                label: "offdiag".into(),
            },
            Constraint {
                expr: LinearExpr::new().with(
                    0,
                    BlockCoeff::Sym2x2 {
                        e00: 0.0,
                        e01: 0.0,
                        e11: 1.0,
                    },
                ),
                relation: Relation::Eq,
                rhs: 0.5,
                label: "rho".into(),
            },
        ],
    };
    let sol = solve(&problem, TOL, 100).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let (t, off, rho) = sol.blocks[0].as_sym2x2();
    assert!((t - 2.0).abs() < 1e-6, "t = {t}");
    assert!((off - 1.0).abs() < 1e-7);
    assert!((rho - 0.5).abs() < 1e-7);
    let (p, d, _) = kkt_residuals(&problem, &sol);
    assert!(p < 1e-8 && d < 1e-8);
}

/// Contradictory box {x >= 1, x <= 0} on a free scalar.
#[test]
fn contradictory_box_is_infeasible() {
    let problem = ConicProblem {
        blocks: vec![BlockKind::FreeScalar],
        objective: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
        constraints: vec![
            Constraint {
                expr: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
                relation: Relation::Ge,
                rhs: 1.0,
                label: "lower".into(),
            },
            Constraint {
                expr: LinearExpr::new().with(0, BlockCoeff::Scalar(-1.0)),
                relation: Relation::Ge,
                rhs: 0.0,
                label: "upper".into(),
            },
        ],
    };
    let sol = solve(&problem, TOL, 200).unwrap();
    assert_eq!(sol.status, SolveStatus::Infeasible);
    let cert = sol.infeasibility.expect("certificate should be attached");
    assert!(cert.ray_objective > 0.0);
    assert!(
        cert.ray_residual < 1e-6,
        "dual ray residual {} should be small",
        cert.ray_residual
    );
}

#[test]
fn unbounded_direction_detected() {
    // minimize -x with x >= 1 only: unbounded below.
    let problem = ConicProblem {
        blocks: vec![BlockKind::NonnegScalar],
        objective: LinearExpr::new().with(0, BlockCoeff::Scalar(-1.0)),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
            relation: Relation::Ge,
            rhs: 1.0,
            label: "lower".into(),
        }],
    };
    let sol = solve(&problem, TOL, 200).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
}

/// minimize tr(X) s.t. h^H X h >= 1 has the analytic optimum 1/|h|^2.
#[test]
fn rank_one_sensing_analytic_optimum() {
    let h = vec![c(0.6, 0.3), c(-0.2, 0.9), c(0.1, -0.4)];
    let h_norm2: f64 = h.iter().map(|z| z.norm_sqr()).sum();
    let problem = ConicProblem {
        blocks: vec![BlockKind::HermitianPsd(3)],
        objective: LinearExpr::new().with(0, BlockCoeff::Hermitian(ComplexMatrix::identity(3))),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, BlockCoeff::Hermitian(ComplexMatrix::outer(&h, 1.0))),
            relation: Relation::Ge,
            rhs: 1.0,
            label: "sense".into(),
        }],
    };
    let sol = solve(&problem, TOL, 100).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(
        (sol.objective - 1.0 / h_norm2).abs() < 1e-7,
        "objective {} vs analytic {}",
        sol.objective,
        1.0 / h_norm2
    );
    // Weak duality.
    let dual_obj: f64 = sol.duals[0];
    assert!(dual_obj <= sol.objective + 10.0 * TOL);
    assert!(sol.duals[0] >= 0.0);
}

/// Solving the complex instance and its hand-built 2n x 2n real embedding
/// yields the same objective.
#[test]
fn complex_embedding_consistency() {
    let h = vec![c(0.8, -0.1), c(0.3, 0.5)];
    let complex_problem = ConicProblem {
        blocks: vec![BlockKind::HermitianPsd(2)],
        objective: LinearExpr::new().with(0, BlockCoeff::Hermitian(ComplexMatrix::identity(2))),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, BlockCoeff::Hermitian(ComplexMatrix::outer(&h, 1.0))),
            relation: Relation::Ge,
            rhs: 1.0,
            label: "sense".into(),
        }],
    };
    let complex_sol = solve(&complex_problem, TOL, 100).unwrap();

    // Real embedding: X is a 4x4 real PSD block; coefficients embed(C)/2.
    let hh = ComplexMatrix::outer(&h, 1.0);
    let embed_half = |m: &ComplexMatrix| {
        let n = m.rows();
        ComplexMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let v = match (i < n, j < n) {
                (true, true) => m.get(i, j).re,
                (false, false) => m.get(i - n, j - n).re,
                (true, false) => -m.get(i, j - n).im,
                (false, true) => m.get(i - n, j).im,
            };
            c(0.5 * v, 0.0)
        })
    };
    let real_problem = ConicProblem {
        blocks: vec![BlockKind::HermitianPsd(4)],
        objective: LinearExpr::new().with(
            0,
            BlockCoeff::Hermitian(embed_half(&ComplexMatrix::identity(2))),
        ),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, BlockCoeff::Hermitian(embed_half(&hh))),
            relation: Relation::Ge,
            rhs: 1.0,
            label: "sense".into(),
        }],
    };
    let real_sol = solve(&real_problem, TOL, 100).unwrap();
    assert_eq!(real_sol.status, SolveStatus::Optimal);
    assert!(
        (real_sol.objective - complex_sol.objective).abs() <= 10.0 * TOL,
        "{} vs {}",
        real_sol.objective,
        complex_sol.objective
    );
}

/// Scaling the objective by a positive constant scales the optimum and keeps
/// the argmin.
#[test]
fn objective_scaling_invariance() {
    let h = vec![c(1.0, 0.2), c(0.4, -0.7)];
    let build = |scale: f64| ConicProblem {
        blocks: vec![BlockKind::HermitianPsd(2)],
        objective: LinearExpr::new().with(
            0,
            BlockCoeff::Hermitian(ComplexMatrix::identity(2).scale(scale)),
        ),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, BlockCoeff::Hermitian(ComplexMatrix::outer(&h, 1.0))),
            relation: Relation::Ge,
            rhs: 1.0,
            label: "sense".into(),
        }],
    };
    let base = solve(&build(1.0), TOL, 100).unwrap();
    let scaled = solve(&build(7.0), TOL, 100).unwrap();
    assert!((scaled.objective - 7.0 * base.objective).abs() <= 7.0 * 10.0 * TOL);
    let diff = base.blocks[0]
        .as_hermitian()
        .sub(scaled.blocks[0].as_hermitian())
        .frobenius_norm();
    assert!(diff <= 1e-6, "argmin moved by {diff}");
}

#[test]
fn maxiter_status_reported() {
    let problem = ConicProblem {
        blocks: vec![BlockKind::NonnegScalar],
        objective: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
            relation: Relation::Ge,
            rhs: 3.0,
            label: "lower".into(),
        }],
    };
    let sol = solve(&problem, TOL, 1).unwrap();
    assert!(matches!(
        sol.status,
        SolveStatus::MaxIter | SolveStatus::Optimal
    ));
    let converged = solve(&problem, TOL, 100).unwrap();
    assert_eq!(converged.status, SolveStatus::Optimal);
    assert!((converged.objective - 3.0).abs() < 1e-7);
}

// ─── kkt_residuals on hand-constructed points ──────────────────────────────

fn scalar_lp() -> ConicProblem {
    // minimize x s.t. x >= 3, x >= 0.
    ConicProblem {
        blocks: vec![BlockKind::NonnegScalar],
        objective: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(0, BlockCoeff::Scalar(1.0)),
            relation: Relation::Ge,
            rhs: 3.0,
            label: "lower".into(),
        }],
    }
}

fn hand_solution(x: f64, y: f64) -> ConicSolution {
    ConicSolution {
        status: SolveStatus::Optimal,
        blocks: vec![BlockValue::Scalar(x)],
        duals: vec![y],
        objective: x,
        kkt: KktSummary {
            primal_res: 0.0,
            dual_res: 0.0,
            gap: 0.0,
        },
        iterations: 0,
        infeasibility: None,
    }
}

#[test]
fn kkt_exact_optimum_is_zero() {
    let problem = scalar_lp();
    let (p, d, g) = kkt_residuals(&problem, &hand_solution(3.0, 1.0));
    assert_eq!((p, d, g), (0.0, 0.0, 0.0));
}

#[test]
fn kkt_perturbed_primal_shows_in_gap() {
    let problem = scalar_lp();
    let (p, d, g) = kkt_residuals(&problem, &hand_solution(3.0 + 1e-3, 1.0));
    assert_eq!(p, 0.0);
    assert_eq!(d, 0.0);
    assert!((g - 1e-3).abs() < 1e-12, "gap should be 1e-3 * dual");
}

#[test]
fn kkt_feasible_non_optimal_has_positive_gap() {
    let problem = scalar_lp();
    let (p, _d, g) = kkt_residuals(&problem, &hand_solution(5.0, 0.5));
    assert_eq!(p, 0.0);
    assert!(g > 0.0);
}

#[test]
fn kkt_flags_violations() {
    let problem = scalar_lp();
    // Infeasible primal point.
    let (p, _, _) = kkt_residuals(&problem, &hand_solution(2.0, 1.0));
    assert!((p - 1.0).abs() < 1e-12);
    // Negative multiplier on a Ge row is a dual violation.
    let (_, d, _) = kkt_residuals(&problem, &hand_solution(3.0, -0.25));
    assert!(d >= 0.25);
}

// ─── Validation and dump ────────────────────────────────────────────────────

#[test]
fn validation_rejects_bad_problems() {
    let bad_ref = ConicProblem {
        blocks: vec![BlockKind::NonnegScalar],
        objective: LinearExpr::new().with(3, BlockCoeff::Scalar(1.0)),
        constraints: vec![],
    };
    assert!(bad_ref.validate().is_err());

    let not_herm = ConicProblem {
        blocks: vec![BlockKind::HermitianPsd(2)],
        objective: LinearExpr::new().with(
            0,
            BlockCoeff::Hermitian(
                ComplexMatrix::new(
                    2,
                    2,
                    vec![c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
                )
                .unwrap(),
            ),
        ),
        constraints: vec![],
    };
    assert!(not_herm.validate().is_err());

    let problem = scalar_lp();
    assert!(matches!(
        solve(&problem, 1e-2, 10),
        Err(SdpError::InvalidTolerance(_))
    ));
}

#[test]
fn dump_round_trips_functional_values() {
    let problem = ConicProblem {
        blocks: vec![BlockKind::HermitianPsd(2), BlockKind::Real2x2Psd],
        objective: LinearExpr::new()
            .with(0, BlockCoeff::Hermitian(ComplexMatrix::identity(2)))
            .with(
                1,
                BlockCoeff::Sym2x2 {
                    e00: 1.0,
                    e01: 0.25,
                    e11: -2.0,
                },
            ),
        constraints: vec![Constraint {
            expr: LinearExpr::new().with(
                0,
                herm_coeff(2, |i, j| if i != j { c(0.5, 0.25) } else { c(1.0, 0.0) }),
            ),
            relation: Relation::Ge,
            rhs: 1.5,
            label: "mixed".into(),
        }],
    };
    let dump = problem.dump_text();
    assert!(dump.starts_with("version 1\n"));
    assert!(dump.contains("block 0 hermitian_psd 2"));
    assert!(dump.contains("block 1 real2x2_psd"));
    assert!(dump.contains("constraint 0 ge 1.5e0 mixed"));

    // Evaluate the dumped functional at a known point and compare with eval().
    let x = vec![
        BlockValue::Hermitian(
            ComplexMatrix::new(
                2,
                2,
                vec![c(2.0, 0.0), c(0.3, -0.7), c(0.3, 0.7), c(1.0, 0.0)],
            )
            .unwrap(),
        ),
        BlockValue::Sym2x2 {
            e00: 1.0,
            e01: 0.5,
            e11: 2.0,
        },
    ];
    let entry_value = |blk: usize, entry: &[&str]| -> f64 {
        match (&x[blk], entry) {
            (BlockValue::Hermitian(z), ["re", i, j]) => {
                z.get(i.parse().unwrap(), j.parse().unwrap()).re
            }
            (BlockValue::Hermitian(z), ["im", i, j]) => {
                z.get(i.parse().unwrap(), j.parse().unwrap()).im
            }
            (BlockValue::Sym2x2 { e00, .. }, ["e00"]) => *e00,
            (BlockValue::Sym2x2 { e01, .. }, ["e01"]) => *e01,
            (BlockValue::Sym2x2 { e11, .. }, ["e11"]) => *e11,
            _ => panic!("unexpected entry"),
        }
    };
    let mut in_constraint = false;
    let mut total = 0.0;
    for line in dump.lines() {
        if line.starts_with("constraint 0") {
            in_constraint = true;
            continue;
        }
        if in_constraint {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.first() != Some(&"term") {
                break;
            }
            let blk: usize = parts[1].parse().unwrap();
            let coeff: f64 = parts.last().unwrap().parse().unwrap();
            total += coeff * entry_value(blk, &parts[2..parts.len() - 1]);
        }
    }
    let direct = problem.constraints[0].expr.eval(&x);
    assert!(
        (total - direct).abs() < 1e-12,
        "dump functional {total} vs eval {direct}"
    );
}
