//! Row-stochastic transition matrices for Markov correlation models.
//!
//! A backward matrix holds P(x_t | x_{t-1}); a forward matrix holds
//! P(x_t | x_{t+1}). Both are square, row-stochastic, and dense. This
//! module owns construction, validation, (de)serialization, and the
//! generators used by tests, benchmarks, and the CLI.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Row sums within this tolerance of 1 are accepted verbatim.
pub const ROW_SUM_EXACT_TOL: f64 = 1e-9;

/// Row sums within this tolerance of 1 are renormalized; beyond it the
/// matrix is rejected.
pub const ROW_SUM_RENORM_TOL: f64 = 1e-6;

/// Errors arising from matrix construction, parsing, or generation.
#[derive(Debug, thiserror::Error)]
pub enum MatrixError {
    /// Input text could not be parsed as a matrix.
    #[error("malformed input: {0}")]
    MalformedInput(String),
    /// A row sum deviates from 1 by more than the renormalization tolerance.
    #[error("row {row} sums to {sum}, not a probability distribution")]
    NotStochastic {
        /// Zero-based row index.
        row: usize,
        /// Offending row sum.
        sum: f64,
    },
    /// An entry is negative (or not a finite number).
    #[error("row {row}, column {col}: entry {value} is not a valid probability")]
    NegativeEntry {
        /// Zero-based row index.
        row: usize,
        /// Zero-based column index.
        col: usize,
        /// Offending entry.
        value: f64,
    },
    /// Laplacian smoothing requires a strictly positive parameter.
    #[error("smoothing parameter must be positive, got {0}")]
    NonPositiveS(f64),
    /// The requested or declared dimension is unusable.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
}

/// Convenience alias for matrix operations.
pub type Result<T> = std::result::Result<T, MatrixError>;

/// Direction of the conditional a matrix encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// Rows condition on the previous state: P(x_t | x_{t-1}).
    Backward,
    /// Rows condition on the next state: P(x_t | x_{t+1}).
    Forward,
}

/// A validated dense row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    n: usize,
    rows: Vec<Vec<f64>>,
    kind: MatrixKind,
}

impl TransitionMatrix {
    /// Validates and wraps raw rows.
    ///
    /// Rows must form a square matrix with `n >= 2`, every entry finite
    /// and nonnegative, and every row sum within [`ROW_SUM_RENORM_TOL`]
    /// of 1. Rows whose sum deviates by more than [`ROW_SUM_EXACT_TOL`]
    /// are renormalized to sum exactly 1; rows already within that
    /// tolerance are kept bit-for-bit so that parsing and serializing a
    /// valid matrix is the identity.
    pub fn new(rows: Vec<Vec<f64>>, kind: MatrixKind) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(MatrixError::InvalidDimension(format!(
                "need at least 2 states, got {n}"
            )));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MatrixError::MalformedInput(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            for (j, &p) in row.iter().enumerate() {
                if !p.is_finite() || p < 0.0 {
                    return Err(MatrixError::NegativeEntry {
                        row: i,
                        col: j,
                        value: p,
                    });
                }
            }
        }
        let mut rows = rows;
        for (i, row) in rows.iter_mut().enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_RENORM_TOL {
                return Err(MatrixError::NotStochastic { row: i, sum });
            }
            // Renormalizing a row that is already exact would perturb its
            // bits, so only rows outside the exact tolerance are scaled.
            // A zero-sum row cannot be rescued by scaling.
            if (sum - 1.0).abs() > ROW_SUM_EXACT_TOL || row.iter().any(|&p| p > 1.0) {
                if sum <= 0.0 {
                    return Err(MatrixError::NotStochastic { row: i, sum });
                }
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
        }
        Ok(Self { n, rows, kind })
    }

    /// Number of states.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Direction of the conditional.
    pub fn kind(&self) -> MatrixKind {
        self.kind
    }

    /// Row `i` as a slice of length `n`.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i]
    }

    /// All rows, row-major.
    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Returns a copy tagged with a different direction.
    pub fn with_kind(&self, kind: MatrixKind) -> Self {
        Self {
            n: self.n,
            rows: self.rows.clone(),
            kind,
        }
    }

    /// Whether all rows are identical, in which case the chain carries no
    /// information about adjacent timesteps and leakage cannot compound.
    pub fn is_uniform_rows(&self) -> bool {
        self.rows.iter().skip(1).all(|r| r == &self.rows[0])
    }

    /// Laplacian smoothing: every entry becomes `(p + s) / (rowsum + n*s)`.
    ///
    /// Larger `s` pushes rows toward the uniform distribution, weakening
    /// the encoded correlation. Requires `s > 0`.
    pub fn smooth(&self, s: f64) -> Result<Self> {
        if s <= 0.0 || !s.is_finite() {
            return Err(MatrixError::NonPositiveS(s));
        }
        let n = self.n;
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let denom: f64 = row.iter().sum::<f64>() + n as f64 * s;
                row.iter().map(|&p| (p + s) / denom).collect()
            })
            .collect();
        Self::new(rows, self.kind)
    }
}

// ============================================================================
// Parsing and serialization
// ============================================================================

/// JSON wire form of a matrix.
#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n: usize,
    kind: MatrixKind,
    rows: Vec<Vec<f64>>,
}

/// Parses CSV text: one row per line, entries comma-separated.
///
/// Blank lines and surrounding whitespace are ignored. The matrix must be
/// square. The direction is not part of the CSV form and is supplied by
/// the caller.
pub fn parse_csv(text: &str, kind: MatrixKind) -> Result<TransitionMatrix> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col, field) in line.split(',').enumerate() {
            let p: f64 = field.trim().parse().map_err(|_| {
                MatrixError::MalformedInput(format!(
                    "line {}, field {}: cannot parse {:?} as a number",
                    lineno + 1,
                    col + 1,
                    field.trim()
                ))
            })?;
            row.push(p);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(MatrixError::MalformedInput("empty input".to_string()));
    }
    TransitionMatrix::new(rows, kind)
}

/// Parses the JSON wire form `{"n": .., "kind": "backward"|"forward", "rows": [[..]]}`.
pub fn parse_json(text: &str) -> Result<TransitionMatrix> {
    let repr: MatrixRepr =
        serde_json::from_str(text).map_err(|e| MatrixError::MalformedInput(e.to_string()))?;
    if repr.rows.len() != repr.n {
        return Err(MatrixError::MalformedInput(format!(
            "declared n={} but found {} rows",
            repr.n,
            repr.rows.len()
        )));
    }
    TransitionMatrix::new(repr.rows, repr.kind)
}

/// Serializes to CSV with shortest round-trip decimal form per entry.
pub fn to_csv(m: &TransitionMatrix) -> String {
    let mut out = String::new();
    for row in m.rows() {
        let fields: Vec<String> = row.iter().map(|p| format!("{p}")).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// Serializes to the JSON wire form.
pub fn to_json(m: &TransitionMatrix) -> String {
    let repr = MatrixRepr {
        n: m.n(),
        kind: m.kind(),
        rows: m.rows().to_vec(),
    };
    serde_json::to_string_pretty(&repr).expect("matrix serialization cannot fail")
}

// ============================================================================
// Generators
// ============================================================================

/// Uniformly random row-stochastic matrix: i.i.d. U(0,1) draws per entry,
/// each row normalized. Deterministic for a fixed `seed`.
pub fn gen_random_stochastic(n: usize, seed: u64, kind: MatrixKind) -> Result<TransitionMatrix> {
    if n < 2 {
        return Err(MatrixError::InvalidDimension(format!(
            "need at least 2 states, got {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
            let sum: f64 = row.iter().sum();
            // n independent U(0,1) draws summing to 0 has probability 0;
            // guard anyway so normalization is total.
            if sum <= 0.0 {
                row = vec![1.0 / n as f64; n];
            } else {
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
            row
        })
        .collect();
    TransitionMatrix::new(rows, kind)
}

/// Identity matrix: the state never changes, maximal correlation.
pub fn gen_identity(n: usize, kind: MatrixKind) -> Result<TransitionMatrix> {
    if n < 2 {
        return Err(MatrixError::InvalidDimension(format!(
            "need at least 2 states, got {n}"
        )));
    }
    let rows = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    TransitionMatrix::new(rows, kind)
}

/// Uniform matrix: every entry `1/n`, no correlation at all.
pub fn gen_uniform(n: usize, kind: MatrixKind) -> Result<TransitionMatrix> {
    if n < 2 {
        return Err(MatrixError::InvalidDimension(format!(
            "need at least 2 states, got {n}"
        )));
    }
    let rows = vec![vec![1.0 / n as f64; n]; n];
    TransitionMatrix::new(rows, kind)
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn accepts_valid_matrix() {
        let m = TransitionMatrix::new(vec![vec![0.8, 0.2], vec![0.2, 0.8]], MatrixKind::Backward)
            .unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.kind(), MatrixKind::Backward);
        assert_eq!(m.row(0), &[0.8, 0.2]);
    }

    #[test]
    fn rejects_non_square() {
        let err = TransitionMatrix::new(vec![vec![0.5, 0.5], vec![1.0]], MatrixKind::Backward)
            .unwrap_err();
        assert!(matches!(err, MatrixError::MalformedInput(_)));
    }

    #[test]
    fn rejects_too_small() {
        let err = TransitionMatrix::new(vec![vec![1.0]], MatrixKind::Backward).unwrap_err();
        assert!(matches!(err, MatrixError::InvalidDimension(_)));
    }

    #[test]
    fn rejects_negative_entry() {
        let err =
            TransitionMatrix::new(vec![vec![1.2, -0.2], vec![0.5, 0.5]], MatrixKind::Backward)
                .unwrap_err();
        assert!(matches!(
            err,
            MatrixError::NegativeEntry { row: 0, col: 1, .. }
        ));
    }

    #[test]
    fn rejects_bad_row_sum() {
        let err = TransitionMatrix::new(vec![vec![0.5, 0.4], vec![0.5, 0.5]], MatrixKind::Backward)
            .unwrap_err();
        assert!(matches!(err, MatrixError::NotStochastic { row: 0, .. }));
    }

    #[test]
    fn renormalizes_near_stochastic_row() {
        let m = TransitionMatrix::new(
            vec![vec![0.5, 0.5 + 2e-7], vec![0.5, 0.5]],
            MatrixKind::Backward,
        )
        .unwrap();
        let sum: f64 = m.row(0).iter().sum();
        assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn keeps_exact_rows_bit_identical() {
        let rows = vec![
            vec![0.1, 0.2, 0.7],
            vec![0.3, 0.3, 0.4],
            vec![0.5, 0.3, 0.2],
        ];
        let m = TransitionMatrix::new(rows.clone(), MatrixKind::Backward).unwrap();
        assert_eq!(m.rows(), &rows[..]);
    }

    #[test]
    fn csv_round_trip_is_identity() {
        let m = gen_random_stochastic(5, 42, MatrixKind::Forward).unwrap();
        let text = to_csv(&m);
        let back = parse_csv(&text, MatrixKind::Forward).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn json_round_trip_is_identity() {
        let m = gen_random_stochastic(4, 7, MatrixKind::Backward).unwrap();
        let back = parse_json(&to_json(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn parse_csv_rejects_garbage() {
        assert!(matches!(
            parse_csv("0.5,0.5\n0.5,abc\n", MatrixKind::Backward),
            Err(MatrixError::MalformedInput(_))
        ));
        assert!(matches!(
            parse_csv("", MatrixKind::Backward),
            Err(MatrixError::MalformedInput(_))
        ));
    }

    #[test]
    fn parse_json_checks_declared_dimension() {
        let text = r#"{"n": 3, "kind": "backward", "rows": [[0.5,0.5],[0.5,0.5]]}"#;
        assert!(matches!(
            parse_json(text),
            Err(MatrixError::MalformedInput(_))
        ));
    }

    #[test]
    fn smoothing_matches_closed_form() {
        let m = gen_identity(2, MatrixKind::Backward).unwrap();
        let s1 = m.smooth(1.0).unwrap();
        assert_abs_diff_eq!(s1.row(0)[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s1.row(0)[1], 1.0 / 3.0, epsilon = 1e-15);
        let tiny = m.smooth(0.005).unwrap();
        assert_abs_diff_eq!(tiny.row(0)[0], 0.995_049_504_950_495, epsilon = 1e-12);
        assert_abs_diff_eq!(tiny.row(0)[1], 0.004_950_495_049_504_951, epsilon = 1e-12);
    }

    #[test]
    fn smoothing_rejects_non_positive_s() {
        let m = gen_identity(2, MatrixKind::Backward).unwrap();
        assert!(matches!(m.smooth(0.0), Err(MatrixError::NonPositiveS(_))));
        assert!(matches!(m.smooth(-1.0), Err(MatrixError::NonPositiveS(_))));
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_random_stochastic(6, 123, MatrixKind::Backward).unwrap();
        let b = gen_random_stochastic(6, 123, MatrixKind::Backward).unwrap();
        assert_eq!(a, b);
        let c = gen_random_stochastic(6, 124, MatrixKind::Backward).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_generator_has_identical_rows() {
        let m = gen_uniform(4, MatrixKind::Backward).unwrap();
        assert!(m.is_uniform_rows());
        assert!(!gen_identity(4, MatrixKind::Backward)
            .unwrap()
            .is_uniform_rows());
    }
}

#[cfg(test)]
mod property_tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn generated_matrices_are_stochastic(n in 2usize..10, seed in 0u64..1000) {
            let m = gen_random_stochastic(n, seed, MatrixKind::Backward).unwrap();
            for i in 0..n {
                let sum: f64 = m.row(i).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(m.row(i).iter().all(|&p| (0.0..=1.0).contains(&p)));
            }
        }

        #[test]
        fn smoothing_preserves_stochasticity(n in 2usize..8, seed in 0u64..500, s in 1e-3f64..10.0) {
            let m = gen_random_stochastic(n, seed, MatrixKind::Backward).unwrap();
            let sm = m.smooth(s).unwrap();
            for i in 0..n {
                let sum: f64 = sm.row(i).iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(sm.row(i).iter().all(|&p| p > 0.0));
            }
        }

        #[test]
        fn csv_round_trip(n in 2usize..8, seed in 0u64..500) {
            let m = gen_random_stochastic(n, seed, MatrixKind::Backward).unwrap();
            let back = parse_csv(&to_csv(&m), MatrixKind::Backward).unwrap();
            prop_assert_eq!(m, back);
        }
    }
}
