//! The two fixed-point algorithms for coupled Riccati equations and their
//! instrumentation.
//!
//! Each sweep solves one shifted CARE per mode. The regular variant reads
//! only previous-sweep iterates, so its inner solves are order-independent;
//! the accelerated variant walks the modes serially and feeds each solve the
//! components already updated in the same sweep. Termination follows the
//! per-sweep criterion `max_i ||X_i^(k) - X_i^(k-1)||_F < tol`; an optional
//! residual threshold can be required in addition but never instead.
//!
//! Non-convergence is an outcome, not an error: a divergence cutoff or the
//! sweep cap ends the run with `converged = false`, which for the zero-start
//! increasing regime signals that the coupled equation may have no positive
//! semidefinite solution.

mod export;

pub use export::{orderings_to_csv, report_to_text, sweep_table_to_csv, trace_to_csv};

use thiserror::Error;

use crate::care::{solve_care, CareError};
use crate::matcore::{
    loewner_compare, sym_eigvals, MatError, OrderRelation, OrderResult, SymMatrix,
};
use crate::model::{
    assemble_step_care, auto_shifts, residual_max_fro, CcareProblem, IterateState, ModelError,
    ShiftVector, DEFAULT_SHIFT_MARGIN,
};

/// Loewner tolerance used for all order-tracking comparisons: per-sweep
/// monotonicity flags, variant orderings, and shift-augmentation checks.
pub const MONOTONE_ORDER_TOL: f64 = 1e-7;

/// A sweep step larger than `1e6 * (1 + initial scale)` aborts the run as
/// diverging. The iteration itself only promises convergence iff a solution
/// exists; the cutoff merely keeps hopeless runs finite. It must stay well
/// below the scale at which the inner Hamiltonian eigenproblems become too
/// ill-conditioned to certify (their eigenvalue condition numbers grow with
/// the assembled constant term, so solve accuracy degrades near 1e8).
const DIVERGENCE_FACTOR: f64 = 1e6;

#[derive(Debug, Clone, Error)]
pub enum IterationError {
    #[error("precondition failed: {context}")]
    PreconditionFailed { context: String },

    #[error("CARE solve failed at sweep {sweep}, mode {mode}: {source}")]
    SubmoduleError { sweep: usize, mode: usize, source: CareError },

    #[error(transparent)]
    Model(#[from] ModelError),

    #[error(transparent)]
    Mat(#[from] MatError),
}

/// Which update rule a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// All modes read previous-sweep iterates only.
    Regular,
    /// Serial Gauss-Seidel-style sweeps consuming already-updated components.
    Accelerated,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::Regular => "regular",
            Variant::Accelerated => "accelerated",
        }
    }
}

/// How shifts are chosen before a run.
#[derive(Debug, Clone)]
pub enum ShiftSpec {
    /// `rho_i = max(0, abscissa(A_i) + margin)`.
    Auto { margin: f64 },
    Explicit(ShiftVector),
}

/// Initial iterates.
#[derive(Debug, Clone)]
pub enum InitSpec {
    Zero,
    /// `c * I` for every mode; `c >= 0`.
    ScaledIdentity(f64),
    Explicit(Vec<SymMatrix>),
}

#[derive(Debug, Clone)]
pub struct IterationConfig {
    pub variant: Variant,
    /// Per-sweep stopping tolerance on `max_i ||X_i^(k) - X_i^(k-1)||_F`.
    pub tol: f64,
    pub max_iter: usize,
    pub shifts: ShiftSpec,
    pub initial: InitSpec,
    /// Record per-sweep monotonicity flags in the trace.
    pub check_monotone: bool,
    /// Record per-sweep closed-loop abscissae in the trace.
    pub check_closed_loop: bool,
    /// Optional extra stopping requirement on the residual; the per-sweep
    /// delta criterion always applies as well.
    pub residual_stop: Option<f64>,
}

impl Default for IterationConfig {
    fn default() -> Self {
        Self {
            variant: Variant::Accelerated,
            tol: 1e-8,
            max_iter: 500,
            shifts: ShiftSpec::Auto { margin: DEFAULT_SHIFT_MARGIN },
            initial: InitSpec::Zero,
            check_monotone: true,
            check_closed_loop: true,
            residual_stop: None,
        }
    }
}

/// Per-mode measurements recorded at one sweep.
#[derive(Debug, Clone)]
pub struct ModeRecord {
    /// Eigenvalues of the iterate, ascending.
    pub eigs: Vec<f64>,
    /// Spectral abscissa of `A_i - rho_i I - S_i X_i^(k)`.
    pub closed_loop_abscissa: Option<f64>,
    pub monotone_up: Option<bool>,
    pub monotone_down: Option<bool>,
}

/// One sweep of the trace.
#[derive(Debug, Clone)]
pub struct SweepRecord {
    /// Sweep index, starting at 1.
    pub sweep: usize,
    /// `max_i ||X_i^(k) - X_i^(k-1)||_F`.
    pub delta: f64,
    /// `max_i ||R_i(X^(k))||_F`.
    pub residual: f64,
    pub modes: Vec<ModeRecord>,
}

#[derive(Debug, Clone, Default)]
pub struct IterationTrace {
    pub records: Vec<SweepRecord>,
}

/// Overall shape of the iterate sequences, classified from every consecutive
/// Loewner comparison across sweeps and modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneDirection {
    Increasing,
    Decreasing,
    Mixed,
    Stationary,
}

impl MonotoneDirection {
    pub fn label(self) -> &'static str {
        match self {
            MonotoneDirection::Increasing => "increasing",
            MonotoneDirection::Decreasing => "decreasing",
            MonotoneDirection::Mixed => "mixed",
            MonotoneDirection::Stationary => "stationary",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub converged: bool,
    /// Number of sweeps performed.
    pub iterations: usize,
    pub solution: Vec<SymMatrix>,
    pub final_residual: f64,
    pub trace: IterationTrace,
    pub shifts_used: ShiftVector,
    pub variant: Variant,
    pub monotone_direction: MonotoneDirection,
    /// Set when the divergence cutoff ended the run.
    pub diverged: bool,
}

/// Loewner relation between the two variants' iterates at one sweep.
#[derive(Debug, Clone)]
pub struct SweepOrdering {
    pub sweep: usize,
    /// Zero-based mode index.
    pub mode: usize,
    pub result: OrderResult,
}

/// Paired run of the two variants from identical starts.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub accelerated: SolveReport,
    pub regular: SolveReport,
    /// `loewner_compare(accelerated X_i^(k), regular Y_i^(k))` for every
    /// common sweep and mode.
    pub orderings: Vec<SweepOrdering>,
}

/// One row of a shift-sweep table.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub rho: ShiftVector,
    pub variant: Variant,
    pub iterations: usize,
    pub final_residual: f64,
    pub converged: bool,
    /// Populated when the run failed outright; the sweep continues.
    pub error: Option<String>,
}

fn resolve_shifts(p: &CcareProblem, cfg: &IterationConfig) -> Result<ShiftVector, IterationError> {
    match &cfg.shifts {
        ShiftSpec::Auto { margin } => Ok(auto_shifts(p, *margin)?),
        ShiftSpec::Explicit(rho) => {
            if rho.len() != p.n_modes() {
                return Err(IterationError::PreconditionFailed {
                    context: format!("{} shifts given for {} modes", rho.len(), p.n_modes()),
                });
            }
            Ok(rho.clone())
        }
    }
}

fn initial_iterates(p: &CcareProblem, cfg: &IterationConfig) -> Result<Vec<SymMatrix>, IterationError> {
    let n = p.n();
    let modes = p.n_modes();
    let x0 = match &cfg.initial {
        InitSpec::Zero => vec![SymMatrix::zeros(n); modes],
        InitSpec::ScaledIdentity(c) => {
            if !c.is_finite() || *c < 0.0 {
                return Err(IterationError::PreconditionFailed {
                    context: format!("scaled-identity start requires c >= 0, got {c}"),
                });
            }
            vec![SymMatrix::scaled_identity(n, *c); modes]
        }
        InitSpec::Explicit(xs) => {
            if xs.len() != modes {
                return Err(IterationError::PreconditionFailed {
                    context: format!("{} initial iterates given for {modes} modes", xs.len()),
                });
            }
            for (i, x) in xs.iter().enumerate() {
                if x.n() != n {
                    return Err(IterationError::PreconditionFailed {
                        context: format!("initial iterate {} has order {}, expected {n}", i + 1, x.n()),
                    });
                }
            }
            xs.clone()
        }
    };
    let state = IterateState::new(x0, 0);
    if !state.all_psd(crate::matcore::DEFAULT_PSD_TOL)? {
        return Err(IterationError::PreconditionFailed {
            context: "initial iterates must be positive semidefinite".into(),
        });
    }
    Ok(state.x)
}

fn check_problem_and_pbh(p: &CcareProblem, rho: &ShiftVector) -> Result<(), IterationError> {
    let violations = p.validate()?;
    if !violations.is_empty() {
        let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
        return Err(IterationError::PreconditionFailed {
            context: format!("problem data invalid: {}", list.join("; ")),
        });
    }
    for i in 0..p.n_modes() {
        let mut shifted = p.a(i).clone();
        for d in 0..p.n() {
            shifted[(d, d)] -= rho.get(i);
        }
        if !crate::care::pbh_stabilizable(&shifted, p.s(i), crate::care::DEFAULT_PBH_TOL)
            .map_err(|e| IterationError::SubmoduleError { sweep: 0, mode: i, source: e })?
        {
            return Err(IterationError::PreconditionFailed {
                context: format!("mode {}: (A - rho I, S) fails the PBH stabilizability test", i + 1),
            });
        }
        if !crate::care::pbh_detectable(&shifted, p.q(i), crate::care::DEFAULT_PBH_TOL)
            .map_err(|e| IterationError::SubmoduleError { sweep: 0, mode: i, source: e })?
        {
            return Err(IterationError::PreconditionFailed {
                context: format!("mode {}: (A - rho I, Q) fails the PBH detectability test", i + 1),
            });
        }
    }
    Ok(())
}

/// One full sweep; returns the new iterates with their closed-loop abscissae.
fn sweep_once(
    p: &CcareProblem,
    rho: &ShiftVector,
    variant: Variant,
    x_old: &[SymMatrix],
    sweep: usize,
) -> Result<Vec<(SymMatrix, f64)>, IterationError> {
    let modes = p.n_modes();
    let mut done: Vec<(SymMatrix, f64)> = Vec::with_capacity(modes);
    let mut updated: Vec<SymMatrix> = Vec::with_capacity(modes);
    for i in 0..modes {
        let x_new: &[SymMatrix] = match variant {
            Variant::Regular => &[],
            Variant::Accelerated => &updated,
        };
        let inst = assemble_step_care(p, rho, i, x_new, x_old)?;
        let sol = solve_care(&inst)
            .map_err(|e| IterationError::SubmoduleError { sweep, mode: i, source: e })?;
        updated.push(sol.x.clone());
        done.push((sol.x, sol.closed_loop_abscissa));
    }
    Ok(done)
}

fn classify_direction(relations: &[OrderRelation]) -> MonotoneDirection {
    let mut any_up = false;
    let mut any_down = false;
    let mut all_ge = true;
    let mut all_le = true;
    for rel in relations {
        match rel {
            OrderRelation::Equal => {}
            OrderRelation::GreaterEqual => {
                any_up = true;
                all_le = false;
            }
            OrderRelation::LessEqual => {
                any_down = true;
                all_ge = false;
            }
            OrderRelation::Incomparable => {
                all_ge = false;
                all_le = false;
            }
        }
    }
    if all_ge && any_up {
        MonotoneDirection::Increasing
    } else if all_le && any_down {
        MonotoneDirection::Decreasing
    } else if all_ge && all_le {
        MonotoneDirection::Stationary
    } else {
        MonotoneDirection::Mixed
    }
}

fn validate_config(cfg: &IterationConfig) -> Result<(), IterationError> {
    if !cfg.tol.is_finite() || cfg.tol <= 0.0 {
        return Err(IterationError::PreconditionFailed {
            context: format!("tolerance must be positive, got {}", cfg.tol),
        });
    }
    if cfg.max_iter == 0 {
        return Err(IterationError::PreconditionFailed {
            context: "iteration cap must be at least 1".into(),
        });
    }
    Ok(())
}

struct RunOutput {
    report: SolveReport,
    /// Iterates per sweep, index 0 holding the initial state.
    history: Vec<IterateState>,
}

fn run_internal(p: &CcareProblem, cfg: &IterationConfig, keep_history: bool) -> Result<RunOutput, IterationError> {
    validate_config(cfg)?;
    let rho = resolve_shifts(p, cfg)?;
    check_problem_and_pbh(p, &rho)?;
    let mut x = initial_iterates(p, cfg)?;
    let init_scale = x.iter().map(SymMatrix::fro_norm).fold(0.0f64, f64::max);

    let mut history = Vec::new();
    if keep_history {
        history.push(IterateState::new(x.clone(), 0));
    }
    let mut records = Vec::new();
    let mut relations: Vec<OrderRelation> = Vec::new();
    let mut converged = false;
    let mut diverged = false;
    let mut final_residual = f64::NAN;
    let mut sweeps = 0;

    for k in 1..=cfg.max_iter {
        sweeps = k;
        let next = sweep_once(p, &rho, cfg.variant, &x, k)?;
        let delta = next
            .iter()
            .zip(&x)
            .map(|((xn, _), xo)| xn.sub(xo).fro_norm())
            .fold(0.0f64, f64::max);
        let next_x: Vec<SymMatrix> = next.iter().map(|(m, _)| m.clone()).collect();
        let residual = residual_max_fro(p, &next_x)?;

        let mut mode_records = Vec::with_capacity(p.n_modes());
        for (i, (xi, abscissa)) in next.iter().enumerate() {
            let rel = loewner_compare(xi, &x[i], MONOTONE_ORDER_TOL)?.relation;
            relations.push(rel);
            mode_records.push(ModeRecord {
                eigs: sym_eigvals(xi)?,
                closed_loop_abscissa: cfg.check_closed_loop.then_some(*abscissa),
                monotone_up: cfg.check_monotone.then_some(rel.is_ge()),
                monotone_down: cfg.check_monotone.then_some(rel.is_le()),
            });
        }
        records.push(SweepRecord { sweep: k, delta, residual, modes: mode_records });

        x = next_x;
        if keep_history {
            history.push(IterateState::new(x.clone(), k));
        }
        final_residual = residual;

        let residual_ok = cfg.residual_stop.is_none_or(|r| residual <= r);
        if delta < cfg.tol && residual_ok {
            converged = true;
            break;
        }
        if delta > DIVERGENCE_FACTOR * (1.0 + init_scale) {
            diverged = true;
            break;
        }
    }

    let report = SolveReport {
        converged,
        iterations: sweeps,
        solution: x,
        final_residual,
        trace: IterationTrace { records },
        shifts_used: rho,
        variant: cfg.variant,
        monotone_direction: classify_direction(&relations),
        diverged,
    };
    Ok(RunOutput { report, history })
}

/// Run one iteration variant to termination.
pub fn run(p: &CcareProblem, cfg: &IterationConfig) -> Result<SolveReport, IterationError> {
    Ok(run_internal(p, cfg, false)?.report)
}

/// Run both variants from identical starts and compare their iterates at
/// every common sweep.
pub fn compare_run(p: &CcareProblem, cfg: &IterationConfig) -> Result<CompareReport, IterationError> {
    let accel_cfg = IterationConfig { variant: Variant::Accelerated, ..cfg.clone() };
    let regular_cfg = IterationConfig { variant: Variant::Regular, ..cfg.clone() };
    let accel = run_internal(p, &accel_cfg, true)?;
    let regular = run_internal(p, &regular_cfg, true)?;

    let common = accel.history.len().min(regular.history.len());
    let mut orderings = Vec::new();
    for k in 1..common {
        for i in 0..p.n_modes() {
            let result = loewner_compare(
                &accel.history[k].x[i],
                &regular.history[k].x[i],
                MONOTONE_ORDER_TOL,
            )?;
            orderings.push(SweepOrdering { sweep: k, mode: i, result });
        }
    }
    Ok(CompareReport { accelerated: accel.report, regular: regular.report, orderings })
}

/// Run every `(shift, variant)` pair and tabulate the outcomes. Failed runs
/// become rows carrying their error; the sweep continues.
///
/// Rows are sorted by descending shift, the regular variant first within
/// each shift.
pub fn shift_sweep(
    p: &CcareProblem,
    cfg: &IterationConfig,
    shift_values: &[ShiftVector],
) -> Vec<SweepRow> {
    let mut shifts: Vec<ShiftVector> = shift_values.to_vec();
    shifts.sort_by(|a, b| {
        b.as_slice()
            .partial_cmp(a.as_slice())
            .expect("shifts are finite")
    });
    let mut rows = Vec::with_capacity(shifts.len() * 2);
    for rho in &shifts {
        for variant in [Variant::Regular, Variant::Accelerated] {
            let run_cfg = IterationConfig {
                variant,
                shifts: ShiftSpec::Explicit(rho.clone()),
                ..cfg.clone()
            };
            match run(p, &run_cfg) {
                Ok(report) => rows.push(SweepRow {
                    rho: rho.clone(),
                    variant,
                    iterations: report.iterations,
                    final_residual: report.final_residual,
                    converged: report.converged,
                    error: None,
                }),
                Err(e) => rows.push(SweepRow {
                    rho: rho.clone(),
                    variant,
                    iterations: 0,
                    final_residual: f64::NAN,
                    converged: false,
                    error: Some(e.to_string()),
                }),
            }
        }
    }
    rows
}

/// Compare the first accelerated sweep under `rho` against the first sweep
/// under `rho + delta_rho`, mode by mode. In the increasing regime the base
/// recursion dominates; in the decreasing regime it is dominated.
pub fn augmented_first_step(
    p: &CcareProblem,
    cfg: &IterationConfig,
    delta_rho: &[f64],
) -> Result<Vec<OrderResult>, IterationError> {
    validate_config(cfg)?;
    if delta_rho.len() != p.n_modes() {
        return Err(IterationError::PreconditionFailed {
            context: format!("{} shift increments for {} modes", delta_rho.len(), p.n_modes()),
        });
    }
    if let Some(bad) = delta_rho.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(IterationError::PreconditionFailed {
            context: format!("shift increment {bad} is not a nonnegative real"),
        });
    }
    let rho = resolve_shifts(p, cfg)?;
    check_problem_and_pbh(p, &rho)?;
    let augmented = ShiftVector::new(
        rho.as_slice()
            .iter()
            .zip(delta_rho)
            .map(|(r, d)| r + d)
            .collect(),
    )?;
    check_problem_and_pbh(p, &augmented)?;
    let x0 = initial_iterates(p, cfg)?;

    let base = sweep_once(p, &rho, Variant::Accelerated, &x0, 1)?;
    let bumped = sweep_once(p, &augmented, Variant::Accelerated, &x0, 1)?;
    let mut out = Vec::with_capacity(p.n_modes());
    for i in 0..p.n_modes() {
        out.push(loewner_compare(&base[i].0, &bumped[i].0, MONOTONE_ORDER_TOL)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests;
