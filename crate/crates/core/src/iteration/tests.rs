use super::*;
use crate::matcore::{is_psd, Matrix};
use crate::model::{ccare_residual, ivanov_example1};

fn benchmark() -> CcareProblem {
    ivanov_example1().to_problem().unwrap()
}

fn sym(rows: &[Vec<f64>]) -> SymMatrix {
    SymMatrix::from_matrix(&Matrix::from_rows(rows).unwrap()).unwrap()
}

/// Reference minimal solution of the bundled benchmark, 8 decimals.
fn minimal_solution() -> Vec<SymMatrix> {
    vec![
        sym(&[vec![0.0, 0.0], vec![0.0, 0.28204532]]),
        sym(&[vec![0.0, 0.0], vec![0.0, 0.27641488]]),
    ]
}

/// Reference maximal solution of the bundled benchmark, 8 decimals.
fn maximal_solution() -> Vec<SymMatrix> {
    vec![
        sym(&[vec![0.50718185, 0.24899225], vec![0.24899225, 0.45594482]]),
        sym(&[vec![0.32609148, -0.16073063], vec![-0.16073063, 0.48929635]]),
    ]
}

fn max_entry_gap(got: &[SymMatrix], want: &[SymMatrix]) -> f64 {
    got.iter()
        .zip(want)
        .map(|(g, w)| {
            let n = g.n();
            (0..n)
                .flat_map(|r| (0..n).map(move |c| (r, c)))
                .map(|(r, c)| (g[(r, c)] - w[(r, c)]).abs())
                .fold(0.0f64, f64::max)
        })
        .fold(0.0f64, f64::max)
}

fn cfg(variant: Variant, initial: InitSpec, rho: f64) -> IterationConfig {
    IterationConfig {
        variant,
        initial,
        shifts: ShiftSpec::Explicit(ShiftVector::uniform(2, rho).unwrap()),
        ..IterationConfig::default()
    }
}

/// A strongly coupled problem with no PSD solution: the couplings outrun the
/// quadratic damping in the kernel direction of `S`, so the second diagonal
/// entry of each iterate grows by about 3/2 per regular sweep.
fn divergent_problem() -> CcareProblem {
    CcareProblem::new(
        vec![Matrix::identity(2).scale(-1.0), Matrix::identity(2).scale(-1.0)],
        vec![SymMatrix::from_diag(&[1.0, 0.0]), SymMatrix::from_diag(&[1.0, 0.0])],
        vec![SymMatrix::identity(2), SymMatrix::identity(2)],
        Matrix::from_rows(&[vec![0.0, 3.0], vec![3.0, 0.0]]).unwrap(),
    )
    .unwrap()
}

#[test]
fn accelerated_zero_start_reaches_minimal_solution() {
    let p = benchmark();
    let report = run(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.01)).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 12);
    assert!(max_entry_gap(&report.solution, &minimal_solution()) < 1e-6);
    assert_eq!(report.monotone_direction, MonotoneDirection::Increasing);
    assert!(report.final_residual < 1e-7);
}

#[test]
fn regular_upper_start_reaches_maximal_solution() {
    let p = benchmark();
    let report = run(&p, &cfg(Variant::Regular, InitSpec::ScaledIdentity(3.0), 1.01)).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 35);
    assert!(max_entry_gap(&report.solution, &maximal_solution()) < 1e-6);
    assert_eq!(report.monotone_direction, MonotoneDirection::Decreasing);
}

#[test]
fn zero_q_stable_problem_is_stationary_at_zero() {
    let p = CcareProblem::new(
        vec![Matrix::identity(2).scale(-1.0), Matrix::identity(2).scale(-2.0)],
        vec![SymMatrix::identity(2), SymMatrix::identity(2)],
        vec![SymMatrix::zeros(2), SymMatrix::zeros(2)],
        Matrix::from_rows(&[vec![0.0, 0.5], vec![0.5, 0.0]]).unwrap(),
    )
    .unwrap();
    let config = IterationConfig {
        variant: Variant::Accelerated,
        shifts: ShiftSpec::Auto { margin: 0.01 },
        ..IterationConfig::default()
    };
    let report = run(&p, &config).unwrap();
    assert!(report.converged);
    assert_eq!(report.iterations, 1);
    assert_eq!(report.monotone_direction, MonotoneDirection::Stationary);
    for x in &report.solution {
        assert!(x.fro_norm() < 1e-12);
    }
}

#[test]
fn trace_records_are_complete_and_stability_holds() {
    let p = benchmark();
    let report = run(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.01)).unwrap();
    assert_eq!(report.trace.records.len(), report.iterations);
    for (k, rec) in report.trace.records.iter().enumerate() {
        assert_eq!(rec.sweep, k + 1);
        assert_eq!(rec.modes.len(), 2);
        assert!(rec.delta >= 0.0 && rec.residual >= 0.0);
        for mode in &rec.modes {
            assert!(mode.closed_loop_abscissa.unwrap() < 0.0);
            assert_eq!(mode.monotone_up, Some(true));
            assert_eq!(mode.eigs.len(), 2);
        }
    }
}

#[test]
fn increasing_regime_invariants_along_the_run() {
    // Zero start: iterates grow, stay below the published maximal solution,
    // and keep the residual operator positive semidefinite;
    // the upper bound itself leaves the shifted closed loop Hurwitz.
    let p = benchmark();
    let config = cfg(Variant::Accelerated, InitSpec::Zero, 1.01);
    let out = run_internal(&p, &config, true).unwrap();
    assert!(out.report.converged);
    let upper = maximal_solution();
    for i in 0..2 {
        let mut cl = p.a(i).sub(&p.s(i).as_matrix().matmul(upper[i].as_matrix()));
        for d in 0..2 {
            cl[(d, d)] -= 1.01;
        }
        assert!(crate::matcore::is_stable(&cl, 1e-12).unwrap(), "upper bound not stabilizing");
    }
    for state in &out.history {
        for i in 0..2 {
            let r = ccare_residual(&p, &state.x, i).unwrap();
            assert!(
                is_psd(&r, MONOTONE_ORDER_TOL).unwrap(),
                "sweep {} mode {i}: residual not PSD",
                state.sweep_index
            );
            let rel = loewner_compare(&upper[i], &state.x[i], MONOTONE_ORDER_TOL).unwrap();
            assert!(rel.relation.is_ge(), "sweep {}: iterate above the maximal solution", state.sweep_index);
        }
    }
}

#[test]
fn extremal_solutions_are_ordered_strictly_somewhere() {
    let minimal = minimal_solution();
    let maximal = maximal_solution();
    let mut strict = 0;
    for (lo, hi) in minimal.iter().zip(&maximal) {
        let rel = loewner_compare(hi, lo, MONOTONE_ORDER_TOL).unwrap();
        assert!(rel.relation.is_ge());
        if rel.relation == OrderRelation::GreaterEqual {
            strict += 1;
        }
    }
    assert!(strict >= 1);
}

#[test]
fn compare_run_zero_start_keeps_accelerated_above() {
    let p = benchmark();
    let report = compare_run(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.5)).unwrap();
    assert_eq!(report.regular.iterations, 17);
    assert_eq!(report.accelerated.iterations, 14);
    assert!(!report.orderings.is_empty());
    for o in &report.orderings {
        assert!(
            o.result.relation.is_ge(),
            "sweep {} mode {}: accelerated not above regular",
            o.sweep,
            o.mode + 1
        );
    }
}

#[test]
fn compare_run_upper_start_keeps_accelerated_below() {
    let p = benchmark();
    let report =
        compare_run(&p, &cfg(Variant::Accelerated, InitSpec::ScaledIdentity(3.0), 1.1)).unwrap();
    assert_eq!(report.regular.iterations, 36);
    assert_eq!(report.accelerated.iterations, 32);
    for o in &report.orderings {
        assert!(o.result.relation.is_le());
    }
}

#[test]
fn single_mode_variants_coincide() {
    let p = benchmark();
    let single = CcareProblem::new(
        vec![p.a(0).clone()],
        vec![p.s(0).clone()],
        vec![p.q(0).clone()],
        Matrix::zeros(1, 1),
    )
    .unwrap();
    let config = IterationConfig {
        variant: Variant::Accelerated,
        initial: InitSpec::Zero,
        shifts: ShiftSpec::Explicit(ShiftVector::uniform(1, 1.01).unwrap()),
        ..IterationConfig::default()
    };
    let report = compare_run(&single, &config).unwrap();
    assert_eq!(report.accelerated.iterations, report.regular.iterations);
    for o in &report.orderings {
        assert_eq!(o.result.relation, OrderRelation::Equal);
    }
}

#[test]
fn shift_sweep_counts_shrink_with_the_shift() {
    let p = benchmark();
    let shifts: Vec<ShiftVector> = [1.5, 1.1, 1.01]
        .iter()
        .map(|&v| ShiftVector::uniform(2, v).unwrap())
        .collect();
    let rows = shift_sweep(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.01), &shifts);
    assert_eq!(rows.len(), 6);
    // Rows come sorted by descending shift, regular before accelerated.
    let counts: Vec<(f64, &str, usize)> = rows
        .iter()
        .map(|r| (r.rho.get(0), r.variant.label(), r.iterations))
        .collect();
    assert_eq!(
        counts,
        vec![
            (1.5, "regular", 17),
            (1.5, "accelerated", 14),
            (1.1, "regular", 16),
            (1.1, "accelerated", 13),
            (1.01, "regular", 16),
            (1.01, "accelerated", 12),
        ]
    );
    for row in &rows {
        assert!(row.converged && row.error.is_none());
        assert!(row.final_residual <= 1e-7);
    }
}

#[test]
fn shift_sweep_records_failed_rows_and_continues() {
    let p = benchmark();
    // Unshifted, the benchmark fails the PBH detectability precondition;
    // the valid shift still produces its rows.
    let shifts = vec![
        ShiftVector::uniform(2, 0.0).unwrap(),
        ShiftVector::uniform(2, 1.01).unwrap(),
    ];
    let rows = shift_sweep(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.01), &shifts);
    assert_eq!(rows.len(), 4);
    assert!(rows[0].rho.get(0) > rows[2].rho.get(0));
    assert!(rows[0].error.is_none() && rows[0].converged);
    assert!(rows[2].error.is_some() && !rows[2].converged);
    assert!(rows[2].error.as_ref().unwrap().contains("mode 1"));
}

#[test]
fn shift_sweep_identical_shifts_give_identical_rows() {
    let p = benchmark();
    let shifts = vec![
        ShiftVector::uniform(2, 1.1).unwrap(),
        ShiftVector::uniform(2, 1.1).unwrap(),
    ];
    let rows = shift_sweep(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.1), &shifts);
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].iterations, rows[2].iterations);
    assert_eq!(rows[1].iterations, rows[3].iterations);
    assert_eq!(rows[0].final_residual, rows[2].final_residual);
}

#[test]
fn augmented_first_step_zero_increment_is_equal() {
    let p = benchmark();
    let rels = augmented_first_step(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.01), &[0.0, 0.0])
        .unwrap();
    for r in rels {
        assert_eq!(r.relation, OrderRelation::Equal);
    }
}

#[test]
fn augmented_first_step_increasing_regime() {
    let p = benchmark();
    let rels = augmented_first_step(
        &p,
        &cfg(Variant::Accelerated, InitSpec::Zero, 1.01),
        &[0.49, 0.49],
    )
    .unwrap();
    for (i, r) in rels.iter().enumerate() {
        assert_eq!(r.relation, OrderRelation::GreaterEqual, "mode {}: {:?}", i + 1, r);
    }
}

#[test]
fn augmented_first_step_decreasing_regime() {
    let p = benchmark();
    let rels = augmented_first_step(
        &p,
        &cfg(Variant::Accelerated, InitSpec::ScaledIdentity(3.0), 1.01),
        &[0.49, 0.49],
    )
    .unwrap();
    for (i, r) in rels.iter().enumerate() {
        assert_eq!(r.relation, OrderRelation::LessEqual, "mode {}: {:?}", i + 1, r);
    }
}

#[test]
fn unsolvable_problem_does_not_converge() {
    let p = divergent_problem();
    // Regular variant under a tight sweep cap: runs out of budget without
    // converging and without yet tripping the divergence cutoff.
    let short = IterationConfig {
        variant: Variant::Regular,
        max_iter: 20,
        shifts: ShiftSpec::Auto { margin: 0.01 },
        ..IterationConfig::default()
    };
    let report = run(&p, &short).unwrap();
    assert!(!report.converged);
    assert!(!report.diverged);
    assert_eq!(report.iterations, 20);
    // With room to run, the divergence cutoff ends the run early.
    let long = IterationConfig {
        variant: Variant::Accelerated,
        max_iter: 500,
        ..short
    };
    let report = run(&p, &long).unwrap();
    assert!(!report.converged);
    assert!(report.diverged);
    assert!(report.iterations < 50);
}

#[test]
fn pbh_failure_names_mode_and_test() {
    let p = CcareProblem::new(
        vec![
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap(),
            Matrix::identity(2).scale(-1.0),
        ],
        vec![SymMatrix::zeros(2), SymMatrix::zeros(2)],
        vec![SymMatrix::identity(2), SymMatrix::identity(2)],
        Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap(),
    )
    .unwrap();
    let config = IterationConfig {
        shifts: ShiftSpec::Explicit(ShiftVector::uniform(2, 0.0).unwrap()),
        ..IterationConfig::default()
    };
    match run(&p, &config) {
        Err(IterationError::PreconditionFailed { context }) => {
            assert!(context.contains("mode 1"), "{context}");
            assert!(context.contains("stabilizability"), "{context}");
        }
        other => panic!("expected a precondition failure, got {other:?}"),
    }
}

#[test]
fn runs_are_bit_deterministic() {
    let p = benchmark();
    let config = cfg(Variant::Accelerated, InitSpec::Zero, 1.01);
    let a = run(&p, &config).unwrap();
    let b = run(&p, &config).unwrap();
    assert_eq!(trace_to_csv(&a), trace_to_csv(&b));
    for (xa, xb) in a.solution.iter().zip(&b.solution) {
        assert_eq!(xa.as_matrix().as_slice(), xb.as_matrix().as_slice());
    }
}

#[test]
fn converged_runs_satisfy_fixed_point_consistency() {
    let p = benchmark();
    for (variant, init) in [
        (Variant::Accelerated, InitSpec::Zero),
        (Variant::Regular, InitSpec::Zero),
        (Variant::Accelerated, InitSpec::ScaledIdentity(3.0)),
    ] {
        let report = run(&p, &cfg(variant, init, 1.01)).unwrap();
        assert!(report.converged);
        let recomputed = residual_max_fro(&p, &report.solution).unwrap();
        assert!(recomputed <= 100.0 * 1e-8, "residual {recomputed}");
    }
}

#[test]
fn residual_stop_is_additional_not_replacement() {
    let p = benchmark();
    let mut config = cfg(Variant::Accelerated, InitSpec::Zero, 1.01);
    config.residual_stop = Some(1e-9);
    let strict = run(&p, &config).unwrap();
    let plain = run(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.01)).unwrap();
    // The extra requirement can only delay termination.
    assert!(strict.iterations >= plain.iterations);
    assert!(strict.converged);
    assert!(strict.final_residual <= 1e-9);
}

#[test]
fn csv_row_count_matches_modes_times_iterations() {
    let p = benchmark();
    let report = run(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.01)).unwrap();
    let csv = trace_to_csv(&report);
    let rows = csv.lines().count() - 1;
    assert_eq!(rows, 2 * report.iterations);
    assert!(csv.starts_with(
        "sweep,delta,residual,mode,eig_min,eig_max,closed_loop_abscissa,monotone_up,monotone_down\n"
    ));
}

#[test]
fn report_text_prints_eight_decimals() {
    let p = benchmark();
    let report = run(&p, &cfg(Variant::Accelerated, InitSpec::Zero, 1.01)).unwrap();
    let text = report_to_text(&report);
    assert!(text.contains("converged: true"));
    assert!(text.contains("iterations: 12"));
    assert!(text.contains("0.28204532"), "{text}");
}

#[test]
fn random_solvable_instances_follow_both_regimes() {
    let mut rng = crate::synth::rng(53);
    for trial in 0..6 {
        let n = 1 + trial % 4;
        let modes = 1 + trial % 3;
        let p = crate::synth::random_solvable_ccare(&mut rng, n, modes);
        for (init, increasing) in [(InitSpec::Zero, true), (InitSpec::ScaledIdentity(3.0), false)] {
            for variant in [Variant::Regular, Variant::Accelerated] {
                let config = IterationConfig {
                    variant,
                    initial: init.clone(),
                    shifts: ShiftSpec::Auto { margin: 0.01 },
                    ..IterationConfig::default()
                };
                let report = run(&p, &config).unwrap();
                assert!(report.converged, "trial {trial} {variant:?} did not converge");
                for rec in &report.trace.records {
                    for mode in &rec.modes {
                        if increasing {
                            assert_eq!(mode.monotone_up, Some(true), "trial {trial} sweep {}", rec.sweep);
                        } else {
                            assert_eq!(mode.monotone_down, Some(true), "trial {trial} sweep {}", rec.sweep);
                        }
                    }
                }
            }
        }
    }
}
