//! Plain-text exports: the per-sweep trace and shift-sweep tables as CSV,
//! plus the human-readable run report with solutions at 8 decimal places.

use std::fmt::Write as _;

use super::{SolveReport, SweepOrdering, SweepRow};

/// CSV with one row per `(sweep, mode)`; optional measurements stay empty.
pub fn trace_to_csv(report: &SolveReport) -> String {
    let mut out = String::from(
        "sweep,delta,residual,mode,eig_min,eig_max,closed_loop_abscissa,monotone_up,monotone_down\n",
    );
    for rec in &report.trace.records {
        for (i, mode) in rec.modes.iter().enumerate() {
            let eig_min = mode.eigs.first().copied().unwrap_or(f64::NAN);
            let eig_max = mode.eigs.last().copied().unwrap_or(f64::NAN);
            let cl = mode
                .closed_loop_abscissa
                .map(|v| format!("{v:.12e}"))
                .unwrap_or_default();
            let up = mode.monotone_up.map(|b| b.to_string()).unwrap_or_default();
            let down = mode.monotone_down.map(|b| b.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{:.12e},{:.12e},{},{:.12e},{:.12e},{},{},{}",
                rec.sweep,
                rec.delta,
                rec.residual,
                i + 1,
                eig_min,
                eig_max,
                cl,
                up,
                down
            );
        }
    }
    out
}

/// CSV of per-sweep Loewner relations between the two variants.
pub fn orderings_to_csv(orderings: &[SweepOrdering]) -> String {
    let mut out = String::from("sweep,mode,relation\n");
    for o in orderings {
        let _ = writeln!(out, "{},{},{}", o.sweep, o.mode + 1, o.result.relation.label());
    }
    out
}

fn shift_label(rho: &crate::model::ShiftVector) -> String {
    let s = rho.as_slice();
    if s.iter().all(|v| v == &s[0]) {
        format!("{}", s[0])
    } else {
        s.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(";")
    }
}

/// CSV of a shift-sweep table; failed rows keep their error message.
pub fn sweep_table_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("rho,variant,iterations,residual,converged\n");
    for row in rows {
        let residual = if row.final_residual.is_finite() {
            format!("{:.12e}", row.final_residual)
        } else {
            String::new()
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            shift_label(&row.rho),
            row.variant.label(),
            row.iterations,
            residual,
            if let Some(err) = &row.error { format!("error: {err}") } else { row.converged.to_string() }
        );
    }
    out
}

/// Human-readable run summary with solution matrices at 8 decimal places.
pub fn report_to_text(report: &SolveReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "converged: {}", report.converged);
    let _ = writeln!(out, "iterations: {}", report.iterations);
    let _ = writeln!(out, "variant: {}", report.variant.label());
    let _ = writeln!(
        out,
        "shifts: {}",
        report
            .shifts_used
            .as_slice()
            .iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(", ")
    );
    let _ = writeln!(out, "final residual: {:.6e}", report.final_residual);
    let _ = writeln!(out, "monotone direction: {}", report.monotone_direction.label());
    if report.diverged {
        let _ = writeln!(out, "note: run aborted as diverging");
    }
    for (i, x) in report.solution.iter().enumerate() {
        let _ = writeln!(out, "solution mode {}:", i + 1);
        for r in 0..x.n() {
            let row: Vec<String> = (0..x.n())
                .map(|c| {
                    // Entries that round to zero print without a sign.
                    let v = x[(r, c)];
                    let v = if v.abs() < 5e-9 { 0.0 } else { v };
                    format!("{v:>13.8}")
                })
                .collect();
            let _ = writeln!(out, "  {}", row.join(" "));
        }
    }
    out
}
