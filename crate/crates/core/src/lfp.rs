//! Linear-fractional programs over privacy-constrained likelihood ratios.
//!
//! The backward or forward loss of one ordered row pair (q, d) is
//!
//! ```text
//! L = sup { ln(q.x / d.x) : x in [1, e^alpha]^n }
//! ```
//!
//! the worst-case log ratio of two posterior mixtures whose components
//! may differ by at most `alpha` in log space. The supremum is attained
//! at a vertex of the box, where each `x_j` is either `1` or `e^alpha`.
//! For probability rows the optimal vertex sets `x_j = e^alpha` exactly
//! on a subset `S` with value `ln((q(S)(e^alpha - 1) + 1) / (d(S)(e^alpha - 1) + 1))`,
//! and the optimal `S` is found by a greedy sweep. This module provides
//! both the exponential-time vertex oracle (ground truth for testing)
//! and the polynomial sweep used everywhere else.

use crate::matrix::TransitionMatrix;

/// Vertex enumeration is capped at this dimension.
pub const ORACLE_MAX_N: usize = 20;

/// Slack below which a subset member is treated as non-improving and
/// dropped during the sweep. Guards against oscillation on ties.
const SWEEP_TOL: f64 = 1e-12;

/// Errors from the pairwise solvers.
#[derive(Debug, thiserror::Error)]
pub enum LfpError {
    /// The two rows have different lengths.
    #[error("row length mismatch: q has {q}, d has {d}")]
    DimensionMismatch {
        /// Length of the numerator row.
        q: usize,
        /// Length of the denominator row.
        d: usize,
    },
    /// The privacy budget must be nonnegative.
    #[error("alpha must be nonnegative and finite, got {0}")]
    NegativeAlpha(f64),
    /// Vertex enumeration would take 2^n steps; refused above the cap.
    #[error("oracle dimension {n} exceeds cap {max}")]
    TooLarge {
        /// Requested dimension.
        n: usize,
        /// Enumeration cap.
        max: usize,
    },
}

/// Convenience alias for LFP operations.
pub type Result<T> = std::result::Result<T, LfpError>;

/// Value of a linear-fractional supremum, which is unbounded exactly
/// when the denominator row is identically zero while the numerator
/// is not.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LfpValue {
    /// Attained finite supremum.
    Finite(f64),
    /// The ratio is unbounded over the box.
    Infinite,
}

impl LfpValue {
    /// The finite value, or `f64::INFINITY`.
    pub fn to_f64(self) -> f64 {
        match self {
            LfpValue::Finite(v) => v,
            LfpValue::Infinite => f64::INFINITY,
        }
    }
}

/// Optimal subset solution for one ordered row pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSolution {
    /// Supremum of the log ratio.
    pub value: f64,
    /// Sum of numerator-row entries over the selected subset.
    pub q: f64,
    /// Sum of denominator-row entries over the selected subset.
    pub d: f64,
    /// Selected column indices, ascending.
    pub selected: Vec<usize>,
}

/// Objective value `ln((q(e^alpha - 1) + 1) / (d(e^alpha - 1) + 1))` for
/// subset sums `q` and `d`.
///
/// Evaluated as `ln_1p((q - d)E / (dE + 1))` with `E = e^alpha - 1`,
/// which is exact at `q = d` and loses no precision for small losses.
/// The pair `q = 1, d = 0` returns `alpha` itself: the identity-row case
/// must reproduce the budget without round-trip error through `exp`.
pub fn log_ratio(q: f64, d: f64, alpha: f64) -> f64 {
    if d == 0.0 && q == 1.0 {
        return alpha;
    }
    let e = alpha.exp_m1();
    ((q - d) * e / (d * e + 1.0)).ln_1p()
}

/// Exact supremum by enumerating all `2^n` vertices of the box.
///
/// Ground truth for testing the sweep solver; cost is exponential, so
/// dimensions above [`ORACLE_MAX_N`] are refused. Rows need not sum
/// to 1. Vertices where both forms vanish are excluded (the ratio is
/// undefined there, not unbounded); if no vertex yields a defined ratio
/// the supremum is reported as 0.
pub fn lfp_oracle(qrow: &[f64], drow: &[f64], alpha: f64) -> Result<LfpValue> {
    let n = check_pair(qrow, drow, alpha)?;
    if n > ORACLE_MAX_N {
        return Err(LfpError::TooLarge {
            n,
            max: ORACLE_MAX_N,
        });
    }
    let hi = alpha.exp();
    let mut best = f64::NEG_INFINITY;
    for mask in 0u64..(1u64 << n) {
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..n {
            let x = if mask >> j & 1 == 1 { hi } else { 1.0 };
            num += qrow[j] * x;
            den += drow[j] * x;
        }
        if den == 0.0 {
            if num > 0.0 {
                return Ok(LfpValue::Infinite);
            }
            continue;
        }
        best = best.max((num / den).ln());
    }
    if best == f64::NEG_INFINITY {
        best = 0.0;
    }
    Ok(LfpValue::Finite(best))
}

/// Optimal subset for one ordered pair of probability rows, by sweep.
///
/// Starts from `S = {j : q_j > d_j}` and repeatedly removes members
/// whose presence does not improve the current ratio, until a full pass
/// removes nothing. Each pass tests `q_j B - d_j A > 0` against the
/// pass-start sums `A = q(S)E + 1`, `B = d(S)E + 1`; a singleton always
/// passes its own test, so the set never empties once non-empty. For
/// rows that sum to 1 the result equals the vertex-oracle supremum.
pub fn solve_pair_direct(qrow: &[f64], drow: &[f64], alpha: f64) -> Result<PairSolution> {
    check_pair(qrow, drow, alpha)?;
    let mut selected: Vec<usize> = (0..qrow.len()).filter(|&j| qrow[j] > drow[j]).collect();
    if selected.is_empty() {
        return Ok(PairSolution {
            value: 0.0,
            q: 0.0,
            d: 0.0,
            selected,
        });
    }
    let e = alpha.exp_m1();
    let mut qs: f64 = selected.iter().map(|&j| qrow[j]).sum();
    let mut ds: f64 = selected.iter().map(|&j| drow[j]).sum();
    loop {
        let a = qs * e + 1.0;
        let b = ds * e + 1.0;
        let before = selected.len();
        selected.retain(|&j| {
            if qrow[j] * b - drow[j] * a > SWEEP_TOL {
                true
            } else {
                qs -= qrow[j];
                ds -= drow[j];
                false
            }
        });
        if selected.len() == before {
            break;
        }
    }
    Ok(PairSolution {
        value: log_ratio(qs, ds, alpha),
        q: qs,
        d: ds,
        selected,
    })
}

/// Loss of a whole matrix at budget `alpha`: the maximum pair solution
/// over all `n(n-1)` ordered row pairs.
pub fn max_loss_direct(m: &TransitionMatrix, alpha: f64) -> Result<f64> {
    let n = m.n();
    let mut best = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            best = best.max(solve_pair_direct(m.row(i), m.row(j), alpha)?.value);
        }
    }
    Ok(best)
}

fn check_pair(qrow: &[f64], drow: &[f64], alpha: f64) -> Result<usize> {
    if qrow.len() != drow.len() {
        return Err(LfpError::DimensionMismatch {
            q: qrow.len(),
            d: drow.len(),
        });
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(LfpError::NegativeAlpha(alpha));
    }
    Ok(qrow.len())
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{gen_identity, gen_uniform, MatrixKind, TransitionMatrix};
    use approx::assert_abs_diff_eq;

    const Q: [f64; 3] = [0.2, 0.3, 0.5];
    const D: [f64; 3] = [0.1, 0.0, 0.9];

    #[test]
    fn three_state_pair_at_unit_budget() {
        let sol = solve_pair_direct(&Q, &D, 1.0).unwrap();
        assert_abs_diff_eq!(sol.value, 0.461_549_428_217_848_33, epsilon = 1e-12);
        assert_eq!(sol.selected, vec![0, 1]);
        assert_abs_diff_eq!(sol.q, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(sol.d, 0.1, epsilon = 1e-15);
    }

    #[test]
    fn three_state_pair_at_larger_budget() {
        let sol = solve_pair_direct(&Q, &D, 2.0).unwrap();
        assert_abs_diff_eq!(sol.value, 1.070_458_610_300_669, epsilon = 1e-12);
    }

    #[test]
    fn oracle_agrees_on_three_state_pair() {
        for &alpha in &[0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let direct = solve_pair_direct(&Q, &D, alpha).unwrap().value;
            match lfp_oracle(&Q, &D, alpha).unwrap() {
                LfpValue::Finite(v) => assert_abs_diff_eq!(direct, v, epsilon = 1e-9),
                LfpValue::Infinite => panic!("stochastic rows cannot be unbounded"),
            }
        }
    }

    #[test]
    fn identity_rows_leak_the_full_budget() {
        let q = [1.0, 0.0];
        let d = [0.0, 1.0];
        for &alpha in &[0.1, 1.0, 3.0] {
            let sol = solve_pair_direct(&q, &d, alpha).unwrap();
            assert_eq!(sol.value, alpha);
        }
    }

    #[test]
    fn equal_rows_leak_nothing() {
        let r = [0.3, 0.7];
        let sol = solve_pair_direct(&r, &r, 5.0).unwrap();
        assert_eq!(sol.value, 0.0);
        assert!(sol.selected.is_empty());
    }

    #[test]
    fn zero_budget_means_zero_loss() {
        let sol = solve_pair_direct(&Q, &D, 0.0).unwrap();
        assert_eq!(sol.value, 0.0);
    }

    #[test]
    fn oracle_handles_degenerate_rows() {
        assert_eq!(
            lfp_oracle(&[0.5, 0.5], &[0.0, 0.0], 1.0).unwrap(),
            LfpValue::Infinite
        );
        assert_eq!(
            lfp_oracle(&[0.0, 0.0], &[0.0, 0.0], 1.0).unwrap(),
            LfpValue::Finite(0.0)
        );
    }

    #[test]
    fn oracle_rejects_large_dimension() {
        let row = vec![1.0 / 21.0; 21];
        assert!(matches!(
            lfp_oracle(&row, &row, 1.0),
            Err(LfpError::TooLarge { n: 21, max: 20 })
        ));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(matches!(
            solve_pair_direct(&[0.5, 0.5], &[1.0], 1.0),
            Err(LfpError::DimensionMismatch { q: 2, d: 1 })
        ));
        assert!(matches!(
            solve_pair_direct(&Q, &D, -0.5),
            Err(LfpError::NegativeAlpha(_))
        ));
        assert!(matches!(
            lfp_oracle(&Q, &D, f64::NAN),
            Err(LfpError::NegativeAlpha(_))
        ));
    }

    #[test]
    fn matrix_loss_on_three_state_example() {
        let m = TransitionMatrix::new(
            vec![
                vec![0.1, 0.2, 0.7],
                vec![0.3, 0.3, 0.4],
                vec![0.5, 0.3, 0.2],
            ],
            MatrixKind::Backward,
        )
        .unwrap();
        assert_abs_diff_eq!(
            max_loss_direct(&m, 1.0).unwrap(),
            0.494_333_514_457_283_7,
            epsilon = 1e-12
        );
    }

    #[test]
    fn uniform_matrix_has_zero_loss() {
        let m = gen_uniform(4, MatrixKind::Backward).unwrap();
        assert_eq!(max_loss_direct(&m, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn identity_matrix_loss_equals_budget() {
        let m = gen_identity(3, MatrixKind::Backward).unwrap();
        for &alpha in &[0.1, 1.0, 7.5] {
            assert_eq!(max_loss_direct(&m, alpha).unwrap(), alpha);
        }
    }
}

#[cfg(test)]
mod property_tests {
    use super::*;
    use crate::matrix::{gen_random_stochastic, MatrixKind};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn sweep_matches_oracle(n in 2usize..8, seed in 0u64..10_000, alpha in 0.0f64..10.0) {
            let m = gen_random_stochastic(n, seed, MatrixKind::Backward).unwrap();
            let q = m.row(0);
            let d = m.row(1);
            let direct = solve_pair_direct(q, d, alpha).unwrap().value;
            match lfp_oracle(q, d, alpha).unwrap() {
                LfpValue::Finite(v) => prop_assert!((direct - v).abs() <= 1e-9),
                LfpValue::Infinite => prop_assert!(false, "stochastic rows cannot be unbounded"),
            }
        }

        #[test]
        fn loss_is_bounded_by_budget(n in 2usize..8, seed in 0u64..10_000, alpha in 0.0f64..10.0) {
            let m = gen_random_stochastic(n, seed, MatrixKind::Backward).unwrap();
            let loss = max_loss_direct(&m, alpha).unwrap();
            prop_assert!(loss >= 0.0);
            prop_assert!(loss <= alpha + 1e-12);
        }

        #[test]
        fn loss_is_monotone_in_budget(n in 2usize..6, seed in 0u64..10_000,
                                      a1 in 0.0f64..5.0, delta in 0.0f64..5.0) {
            let m = gen_random_stochastic(n, seed, MatrixKind::Backward).unwrap();
            let lo = max_loss_direct(&m, a1).unwrap();
            let hi = max_loss_direct(&m, a1 + delta).unwrap();
            prop_assert!(hi >= lo - 1e-12);
        }
    }
}
