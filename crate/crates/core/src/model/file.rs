//! On-disk problem format: a single JSON document with fields `n`, `N`,
//! `modes` (one record per mode holding `A`, exactly one of `S` or `B`, and
//! `Q`), and the `N x N` coupling matrix `delta`. A factor `B` stands for
//! `S = B B'` and is converted on load; only `S` is kept in memory.

use serde::{Deserialize, Serialize};

use super::{CcareProblem, ModelError};
use crate::matcore::{Matrix, SymMatrix};

/// Names accepted by the bundled-example lookup.
pub const BUILTIN_EXAMPLE_NAMES: &[&str] = &["ivanov_example1"];

/// One mode record as it appears on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<Vec<f64>>>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<f64>>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<f64>>,
}

/// The document root.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    pub n: usize,
    #[serde(rename = "N")]
    pub n_modes: usize,
    pub modes: Vec<ModeFile>,
    pub delta: Vec<Vec<f64>>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse { context: e.to_string() })
    }

    /// Canonical serialization; emitting the same document twice is
    /// byte-identical, which the round-trip contract relies on.
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("problem files always serialize");
        out.push('\n');
        out
    }

    /// Validate shapes, resolve `B` factors into `S`, and build the problem.
    pub fn to_problem(&self) -> Result<CcareProblem, ModelError> {
        if self.modes.len() != self.n_modes {
            return Err(ModelError::Parse {
                context: format!("N = {} but {} mode records present", self.n_modes, self.modes.len()),
            });
        }
        let n = self.n;
        let mut a = Vec::with_capacity(self.n_modes);
        let mut s = Vec::with_capacity(self.n_modes);
        let mut q = Vec::with_capacity(self.n_modes);
        for (idx, mode) in self.modes.iter().enumerate() {
            let label = |field: &str| format!("mode {}: {}", idx + 1, field);
            let a_i = parse_matrix(&mode.a, n, n, &label("A"))?;
            let s_i = match (&mode.s, &mode.b) {
                (Some(_), Some(_)) => {
                    return Err(ModelError::Parse {
                        context: label("both S and B given; exactly one is allowed"),
                    })
                }
                (None, None) => {
                    return Err(ModelError::Parse {
                        context: label("neither S nor B given; exactly one is required"),
                    })
                }
                (Some(s_rows), None) => {
                    let m = parse_matrix(s_rows, n, n, &label("S"))?;
                    SymMatrix::from_matrix(&m).map_err(|e| ModelError::Parse {
                        context: label(&format!("S: {e}")),
                    })?
                }
                (None, Some(b_rows)) => {
                    if b_rows.len() != n {
                        return Err(ModelError::Parse {
                            context: label(&format!("B has {} rows, expected {n}", b_rows.len())),
                        });
                    }
                    let cols = b_rows[0].len();
                    let b = parse_matrix(b_rows, n, cols, &label("B"))?;
                    SymMatrix::symmetrized(&b.matmul(&b.transpose()))
                }
            };
            let q_m = parse_matrix(&mode.q, n, n, &label("Q"))?;
            let q_i = SymMatrix::from_matrix(&q_m)
                .map_err(|e| ModelError::Parse { context: label(&format!("Q: {e}")) })?;
            a.push(a_i);
            s.push(s_i);
            q.push(q_i);
        }
        let delta = parse_matrix(&self.delta, self.n_modes, self.n_modes, "delta")?;
        CcareProblem::new(a, s, q, delta)
    }

    /// Express an in-memory problem on disk (always in `S` form).
    pub fn from_problem(p: &CcareProblem) -> Self {
        let dump = |m: &Matrix| -> Vec<Vec<f64>> {
            (0..m.rows()).map(|i| (0..m.cols()).map(|j| m[(i, j)]).collect()).collect()
        };
        ProblemFile {
            n: p.n(),
            n_modes: p.n_modes(),
            modes: (0..p.n_modes())
                .map(|i| ModeFile {
                    a: dump(p.a(i)),
                    s: Some(dump(p.s(i).as_matrix())),
                    b: None,
                    q: dump(p.q(i).as_matrix()),
                })
                .collect(),
            delta: dump(&Matrix::from_fn(p.n_modes(), p.n_modes(), |i, j| p.delta(i, j))),
        }
    }
}

fn parse_matrix(rows: &[Vec<f64>], want_rows: usize, want_cols: usize, what: &str) -> Result<Matrix, ModelError> {
    if rows.len() != want_rows {
        return Err(ModelError::Parse {
            context: format!("{what}: {} rows, expected {want_rows}", rows.len()),
        });
    }
    for (i, r) in rows.iter().enumerate() {
        if r.len() != want_cols {
            return Err(ModelError::Parse {
                context: format!("{what}: row {} has {} entries, expected {want_cols}", i + 1, r.len()),
            });
        }
    }
    let owned: Vec<Vec<f64>> = rows.to_vec();
    Matrix::from_rows(&owned).map_err(|e| ModelError::Parse { context: format!("{what}: {e}") })
}

/// The bundled two-mode benchmark problem, in its published `B`-factor form.
pub fn ivanov_example1() -> ProblemFile {
    ProblemFile {
        n: 2,
        n_modes: 2,
        modes: vec![
            ModeFile {
                a: vec![vec![1.0, -2.0], vec![0.0, -1.0]],
                s: None,
                b: Some(vec![vec![5.0], vec![-5.0]]),
                q: vec![vec![0.0, 0.0], vec![0.0, 2.0]],
            },
            ModeFile {
                a: vec![vec![1.0, -1.0], vec![0.0, -3.0]],
                s: None,
                b: Some(vec![vec![6.0], vec![3.0]]),
                q: vec![vec![0.0, 0.0], vec![0.0, 1.5]],
            },
        ],
        delta: vec![vec![0.0, 2.0], vec![3.0, 0.0]],
    }
}

/// Look up a bundled example by name.
pub fn builtin_example(name: &str) -> Option<ProblemFile> {
    match name {
        "ivanov_example1" => Some(ivanov_example1()),
        _ => None,
    }
}

/// Parse a JSON array of `count` symmetric `n x n` matrices, as used for
/// explicit initial iterates.
pub fn parse_sym_matrix_list(
    text: &str,
    n: usize,
    count: usize,
) -> Result<Vec<SymMatrix>, ModelError> {
    let raw: Vec<Vec<Vec<f64>>> =
        serde_json::from_str(text).map_err(|e| ModelError::Parse { context: e.to_string() })?;
    if raw.len() != count {
        return Err(ModelError::Parse {
            context: format!("{} matrices given, expected {count}", raw.len()),
        });
    }
    raw.iter()
        .enumerate()
        .map(|(i, rows)| {
            let m = parse_matrix(rows, n, n, &format!("matrix {}", i + 1))?;
            SymMatrix::from_matrix(&m)
                .map_err(|e| ModelError::Parse { context: format!("matrix {}: {e}", i + 1) })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_example_round_trips_byte_identically() {
        let text = ivanov_example1().to_json();
        let parsed = ProblemFile::from_json(&text).unwrap();
        assert_eq!(parsed.to_json(), text);
        assert!(parsed.to_problem().unwrap().validate().unwrap().is_empty());
    }

    #[test]
    fn rejects_malformed_documents() {
        assert!(matches!(ProblemFile::from_json("{ truncated"), Err(ModelError::Parse { .. })));
        // Both S and B present.
        let mut f = ivanov_example1();
        f.modes[0].s = Some(vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(matches!(f.to_problem(), Err(ModelError::Parse { .. })));
        // Neither S nor B.
        let mut f = ivanov_example1();
        f.modes[0].b = None;
        assert!(matches!(f.to_problem(), Err(ModelError::Parse { .. })));
        // Wrong matrix shape.
        let mut f = ivanov_example1();
        f.modes[1].a = vec![vec![1.0, 2.0]];
        assert!(matches!(f.to_problem(), Err(ModelError::Parse { .. })));
        // Mode count disagrees with N.
        let mut f = ivanov_example1();
        f.n_modes = 3;
        assert!(matches!(f.to_problem(), Err(ModelError::Parse { .. })));
    }

    #[test]
    fn s_form_export_parses_back() {
        let p = ivanov_example1().to_problem().unwrap();
        let exported = ProblemFile::from_problem(&p);
        let text = exported.to_json();
        let back = ProblemFile::from_json(&text).unwrap().to_problem().unwrap();
        assert_eq!(back.s(0).as_matrix().as_slice(), p.s(0).as_matrix().as_slice());
        assert_eq!(back.q(1).as_matrix().as_slice(), p.q(1).as_matrix().as_slice());
    }

    #[test]
    fn builtin_lookup() {
        assert!(builtin_example("ivanov_example1").is_some());
        assert!(builtin_example("unknown").is_none());
        assert_eq!(BUILTIN_EXAMPLE_NAMES, &["ivanov_example1"]);
    }
}
