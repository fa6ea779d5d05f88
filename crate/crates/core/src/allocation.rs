//! Budget schedules that pin total leakage to a target level.
//!
//! Spending a flat budget leaks more than any single step spends, so
//! meeting a target `alpha` takes either a margin or shaping:
//!
//! * upper bound: one constant rate `eps` whose unbounded-horizon
//!   supremum of the total loss equals `alpha`; safe for any horizon,
//!   conservative for short ones.
//! * exact: over a fixed horizon, first and last steps get dedicated
//!   budgets and interior steps a constant rate, chosen so the total
//!   loss equals `alpha` at every single timestep.
//!
//! Both reduce to one-dimensional root finding on monotone functions.

use serde::Serialize;

use crate::accounting::{quantify_timeline, AccountingError};
use crate::loss::{precompute_params, supremum_loss, Evaluator};
use crate::matrix::TransitionMatrix;

/// Bisection iteration cap for both allocators.
pub const MAX_BISECT: usize = 200;

/// Acceptance tolerance on the root residual.
pub const BISECT_TOL: f64 = 1e-9;

/// Errors from budget allocation.
#[derive(Debug, thiserror::Error)]
pub enum AllocationError {
    /// No positive budget can meet the target.
    #[error("unachievable: {0}")]
    Unachievable(String),
    /// Root finding did not reach tolerance within the iteration cap.
    #[error("no convergence after {iterations} bisection steps")]
    NoConvergence {
        /// Iterations performed.
        iterations: usize,
    },
    /// The interior budget implied by the endpoints is not positive.
    #[error(
        "interior budget {value} is not positive: correlation leaves no room for interior releases"
    )]
    InfeasibleMid {
        /// Implied interior budget.
        value: f64,
    },
    /// Noise scaling needs a positive query sensitivity.
    #[error("sensitivity must be positive and finite, got {0}")]
    NonPositiveSensitivity(f64),
}

/// Convenience alias for allocation operations.
pub type Result<T> = std::result::Result<T, AllocationError>;

/// How a schedule was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AllocationStrategy {
    /// Constant rate bounding the unbounded-horizon supremum.
    UpperBound,
    /// Endpoint-shaped schedule exact over a fixed horizon.
    Exact,
}

/// A per-step budget schedule meeting a target level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetSchedule {
    /// Horizon `T`; `None` means the schedule holds for any horizon.
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    /// Per-step budgets: length `T` when bounded, the single constant
    /// rate when unbounded.
    pub epsilons: Vec<f64>,
    /// The level the schedule was built against.
    pub target_alpha: f64,
    /// Construction strategy.
    pub strategy: AllocationStrategy,
    /// Total leakage the schedule actually reaches: the supremum bound
    /// for [`AllocationStrategy::UpperBound`], the verified maximum over
    /// the horizon for [`AllocationStrategy::Exact`].
    pub achieved: f64,
}

impl BudgetSchedule {
    /// Budgets over `t_len` steps: a bounded schedule must match its
    /// horizon; an unbounded one repeats its constant rate.
    pub fn epsilons_for(&self, t_len: usize) -> crate::Result<Vec<f64>> {
        match self.horizon {
            Some(h) if h != t_len => Err(AccountingError::LengthMismatch {
                expected: h,
                got: t_len,
            }
            .into()),
            Some(_) => Ok(self.epsilons.clone()),
            None => Ok(vec![self.epsilons[0]; t_len]),
        }
    }

    /// Serializes as headerless `t,epsilon` CSV rows with exact
    /// round-trip decimal form; an unbounded schedule is one row.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (t, eps) in self.epsilons.iter().enumerate() {
            // {:?} keeps a trailing .0 on integral budgets, so the
            // column stays recognizably real-valued.
            out.push_str(&format!("{},{:?}\n", t + 1, eps));
        }
        out
    }

    /// Serializes to JSON; `"T": null` marks an unbounded schedule.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serialization cannot fail")
    }
}

fn check_target(target_alpha: f64) -> Result<()> {
    if !target_alpha.is_finite() || target_alpha <= 0.0 {
        return Err(AllocationError::Unachievable(format!(
            "target alpha must be positive and finite, got {target_alpha}"
        )));
    }
    Ok(())
}

/// Supremum of the total loss for constant rate `eps`, as a plain
/// float with unbounded suprema mapped to infinity.
fn tpl_sup(back: &TransitionMatrix, fwd: &TransitionMatrix, eps: f64) -> crate::Result<f64> {
    let b = supremum_loss(back, eps)?;
    let f = supremum_loss(fwd, eps)?;
    Ok(b.value.to_f64() + f.value.to_f64() - eps)
}

/// Constant rate whose total leakage never exceeds `target_alpha`, at
/// any horizon.
///
/// The supremum of the total loss is continuous and strictly increasing
/// in the rate, so the rate solves by bisection on `(0, target_alpha)`;
/// a rate where the supremum is already unbounded counts as overshoot.
/// The target is unachievable exactly when some candidate pair has
/// `q = 1` with `d = 0` in either direction: such correlation compounds
/// without bound under any positive rate.
pub fn allocate_upper_bound(
    back: &TransitionMatrix,
    fwd: &TransitionMatrix,
    target_alpha: f64,
) -> crate::Result<BudgetSchedule> {
    check_target(target_alpha)?;
    for (m, side) in [(back, "backward"), (fwd, "forward")] {
        let p = precompute_params(m);
        for r in 0..p.qm.len() {
            for s in 0..p.n {
                if p.dm[r][s] == 0.0 && p.qm[r][s] >= 1.0 {
                    return Err(AllocationError::Unachievable(format!(
                        "{side} correlation admits unbounded compounding at any positive rate"
                    ))
                    .into());
                }
            }
        }
    }
    let schedule = |eps: f64, achieved: f64| BudgetSchedule {
        horizon: None,
        epsilons: vec![eps],
        target_alpha,
        strategy: AllocationStrategy::UpperBound,
        achieved,
    };
    // With no compounding at all the supremum is the rate itself and
    // the target can be spent in full, exactly.
    let g_at_target = tpl_sup(back, fwd, target_alpha)?;
    if g_at_target <= target_alpha {
        return Ok(schedule(target_alpha, g_at_target));
    }
    let (mut lo, mut hi) = (0.0, target_alpha);
    for _ in 0..MAX_BISECT {
        let mid = 0.5 * (lo + hi);
        let g = tpl_sup(back, fwd, mid)?;
        if (g - target_alpha).abs() <= BISECT_TOL {
            return Ok(schedule(mid, g));
        }
        if g > target_alpha {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Err(AllocationError::NoConvergence {
        iterations: MAX_BISECT,
    }
    .into())
}

/// Schedule over a fixed horizon whose total loss equals the target at
/// every timestep.
///
/// Writing `a` for the first budget, the closure `L_F(alpha - L_B(a)) + a - alpha`
/// is nondecreasing in `a`, nonpositive at 0, and nonnegative at
/// `alpha`; its root fixes the last budget `alpha - L_B(a)` and the
/// constant interior rate `a + last - alpha`, under which the backward
/// loss stays at `a` and the forward loss at `last` for all interior
/// steps, so every step totals exactly `alpha`. The achieved level is
/// re-verified by running the forward recursions on the result.
pub fn allocate_exact(
    back: &Evaluator,
    fwd: &Evaluator,
    target_alpha: f64,
    horizon: usize,
) -> crate::Result<BudgetSchedule> {
    check_target(target_alpha)?;
    if horizon == 0 {
        return Err(AllocationError::Unachievable("horizon must be at least 1".to_string()).into());
    }
    let alpha = target_alpha;
    let epsilons = if horizon == 1 {
        vec![alpha]
    } else {
        let (mut lo, mut hi) = (0.0, alpha);
        let mut root = None;
        for _ in 0..MAX_BISECT {
            let ab = 0.5 * (lo + hi);
            let af = alpha - back.eval(ab)?;
            let h = fwd.eval(af)? + ab - alpha;
            if h.abs() <= BISECT_TOL {
                root = Some((ab, af));
                break;
            }
            if h > 0.0 {
                hi = ab;
            } else {
                lo = ab;
            }
        }
        let (ab, af) = root.ok_or(AllocationError::NoConvergence {
            iterations: MAX_BISECT,
        })?;
        if horizon == 2 {
            vec![ab, af]
        } else {
            let mid = ab + af - alpha;
            if mid <= 0.0 {
                return Err(AllocationError::InfeasibleMid { value: mid }.into());
            }
            let mut eps = vec![mid; horizon];
            eps[0] = ab;
            eps[horizon - 1] = af;
            eps
        }
    };
    let tl = quantify_timeline(back, fwd, &epsilons)?;
    let achieved = tl.tpl.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(BudgetSchedule {
        horizon: Some(horizon),
        epsilons,
        target_alpha,
        strategy: AllocationStrategy::Exact,
        achieved,
    })
}

/// Expected absolute Laplace noise per step, `sensitivity / eps_t`.
pub fn expected_noise(sensitivity: f64, epsilons: &[f64]) -> Result<Vec<f64>> {
    if !sensitivity.is_finite() || sensitivity <= 0.0 {
        return Err(AllocationError::NonPositiveSensitivity(sensitivity));
    }
    Ok(epsilons.iter().map(|&e| sensitivity / e).collect())
}

// ============================================================================
// Tests
// ============================================================================


#[cfg(test)]
mod property_tests {
    use super::*;
    use crate::matrix::{gen_random_stochastic, MatrixKind};
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn exact_schedules_verify(n in 2usize..5, seed in 0u64..10_000,
                                  t_len in 1usize..16, alpha in 0.2f64..4.0) {
            let back = gen_random_stochastic(n, seed, MatrixKind::Backward).unwrap();
            let fwd = gen_random_stochastic(n, seed.wrapping_add(1), MatrixKind::Forward).unwrap();
            let be = Evaluator::Direct(&back);
            let fe = Evaluator::Direct(&fwd);
            let sched = allocate_exact(&be, &fe, alpha, t_len).unwrap();
            prop_assert!(sched.epsilons.iter().all(|&e| e > 0.0 && e <= alpha + 1e-12));
            prop_assert!(sched.achieved <= alpha + 1e-6);
            let tl = quantify_timeline(&be, &fe, &sched.epsilons).unwrap();
            for &tpl in &tl.tpl {
                prop_assert!(tpl <= alpha + 1e-6, "tpl {tpl} exceeds target {alpha}");
            }
        }

        #[test]
        fn upper_bound_holds_at_finite_horizons(n in 2usize..5, seed in 0u64..10_000,
                                                alpha in 0.2f64..4.0) {
            let back = gen_random_stochastic(n, seed, MatrixKind::Backward).unwrap();
            let fwd = gen_random_stochastic(n, seed.wrapping_add(1), MatrixKind::Forward).unwrap();
            let sched = allocate_upper_bound(&back, &fwd, alpha).unwrap();
            prop_assert!(sched.achieved <= alpha + BISECT_TOL);
            let be = Evaluator::Direct(&back);
            let fe = Evaluator::Direct(&fwd);
            for t_len in [1usize, 3, 17] {
                let eps = sched.epsilons_for(t_len).unwrap();
                let tl = quantify_timeline(&be, &fe, &eps).unwrap();
                for &tpl in &tl.tpl {
                    prop_assert!(tpl <= alpha + 1e-6, "tpl {tpl} exceeds target {alpha}");
                }
            }
        }
    }
}
