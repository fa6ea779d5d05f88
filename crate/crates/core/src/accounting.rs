//! Leakage timelines and window composition.
//!
//! Given per-step budgets `eps_1..eps_T`, the backward privacy loss
//! compounds along the release history,
//!
//! ```text
//! bpl_1 = eps_1,    bpl_t = L_B(bpl_{t-1}) + eps_t,
//! ```
//!
//! the forward loss mirrors it from the end,
//!
//! ```text
//! fpl_T = eps_T,    fpl_t = L_F(fpl_{t+1}) + eps_t,
//! ```
//!
//! and the total at step t counts its own budget once,
//! `tpl_t = bpl_t + fpl_t - eps_t`. Because `0 <= L(a) <= a`, every
//! timeline is bounded below by the budgets and above by their sum.

use serde::{Deserialize, Serialize};

use crate::loss::Evaluator;

/// Errors from timeline construction and composition.
#[derive(Debug, thiserror::Error)]
pub enum AccountingError {
    /// Two sequences that must align do not.
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch {
        /// Required length.
        expected: usize,
        /// Provided length.
        got: usize,
    },
    /// A timestep index escapes the horizon.
    #[error("timestep range {lo}..={hi} escapes horizon 1..={horizon}")]
    IndexOutOfRange {
        /// First requested timestep, 1-based.
        lo: usize,
        /// Last requested timestep, 1-based.
        hi: usize,
        /// Available horizon.
        horizon: usize,
    },
    /// Budgets must be strictly positive.
    #[error("epsilon at timestep {index} must be positive and finite, got {value}")]
    NonPositiveEpsilon {
        /// Offending timestep, 1-based.
        index: usize,
        /// Offending value.
        value: f64,
    },
}

/// Convenience alias for accounting operations.
pub type Result<T> = std::result::Result<T, AccountingError>;

/// Per-timestep leakage of one release plan.
///
/// Fields are open for inspection and (de)serialization; code that
/// accepts a timeline from outside should run [`LeakageTimeline::validate`]
/// first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeakageTimeline {
    /// Number of timesteps `T`.
    #[serde(rename = "T")]
    pub horizon: usize,
    /// Per-step budgets, length `T`.
    pub epsilons: Vec<f64>,
    /// Backward privacy loss per step.
    pub bpl: Vec<f64>,
    /// Forward privacy loss per step.
    pub fpl: Vec<f64>,
    /// Total privacy loss per step.
    pub tpl: Vec<f64>,
}

fn check_epsilons(epsilons: &[f64]) -> Result<()> {
    if epsilons.is_empty() {
        return Err(AccountingError::LengthMismatch {
            expected: 1,
            got: 0,
        });
    }
    for (i, &e) in epsilons.iter().enumerate() {
        if !e.is_finite() || e <= 0.0 {
            return Err(AccountingError::NonPositiveEpsilon {
                index: i + 1,
                value: e,
            });
        }
    }
    Ok(())
}

/// Backward privacy loss per step: leakage compounded from the start
/// of the release history.
pub fn compute_bpl(back: &Evaluator, epsilons: &[f64]) -> crate::Result<Vec<f64>> {
    check_epsilons(epsilons)?;
    let mut bpl = Vec::with_capacity(epsilons.len());
    let mut prev = 0.0;
    for &eps in epsilons {
        let cur = back.eval(prev)? + eps;
        bpl.push(cur);
        prev = cur;
    }
    Ok(bpl)
}

/// Forward privacy loss per step: leakage compounded from the end of
/// the release history.
pub fn compute_fpl(fwd: &Evaluator, epsilons: &[f64]) -> crate::Result<Vec<f64>> {
    check_epsilons(epsilons)?;
    let mut fpl = vec![0.0; epsilons.len()];
    let mut next = 0.0;
    for (t, &eps) in epsilons.iter().enumerate().rev() {
        let cur = fwd.eval(next)? + eps;
        fpl[t] = cur;
        next = cur;
    }
    Ok(fpl)
}

/// Full timeline: backward, forward, and total loss per step.
pub fn quantify_timeline(
    back: &Evaluator,
    fwd: &Evaluator,
    epsilons: &[f64],
) -> crate::Result<LeakageTimeline> {
    let bpl = compute_bpl(back, epsilons)?;
    let fpl = compute_fpl(fwd, epsilons)?;
    let tpl: Vec<f64> = bpl
        .iter()
        .zip(&fpl)
        .zip(epsilons)
        .map(|((&b, &f), &e)| b + f - e)
        .collect();
    Ok(LeakageTimeline {
        horizon: epsilons.len(),
        epsilons: epsilons.to_vec(),
        bpl,
        fpl,
        tpl,
    })
}

/// Leakage of the release window `t..=t+j` (timesteps are 1-based).
///
/// The window's backward loss is carried by its first step and its
/// forward loss by its last; interior budgets compose additively.
/// `j = 0` is the single-step total.
pub fn compose(tl: &LeakageTimeline, t: usize, j: usize) -> Result<f64> {
    tl.validate()?;
    let horizon = tl.horizon;
    if t < 1 || t + j > horizon {
        return Err(AccountingError::IndexOutOfRange {
            lo: t,
            hi: t + j,
            horizon,
        });
    }
    if j == 0 {
        return Ok(tl.tpl[t - 1]);
    }
    let interior: f64 = tl.epsilons[t..t + j - 1].iter().sum();
    Ok(tl.bpl[t - 1] + tl.fpl[t + j - 1] + interior)
}

impl LeakageTimeline {
    /// Builds a timeline from parallel columns, validating them.
    pub fn from_columns(
        epsilons: Vec<f64>,
        bpl: Vec<f64>,
        fpl: Vec<f64>,
        tpl: Vec<f64>,
    ) -> Result<Self> {
        let tl = Self {
            horizon: epsilons.len(),
            epsilons,
            bpl,
            fpl,
            tpl,
        };
        tl.validate()?;
        Ok(tl)
    }

    /// Checks internal consistency: aligned columns, positive budgets.
    pub fn validate(&self) -> Result<()> {
        check_epsilons(&self.epsilons)?;
        for len in [
            self.epsilons.len(),
            self.bpl.len(),
            self.fpl.len(),
            self.tpl.len(),
        ] {
            if len != self.horizon {
                return Err(AccountingError::LengthMismatch {
                    expected: self.horizon,
                    got: len,
                });
            }
        }
        Ok(())
    }

    /// Serializes to CSV with header `t,epsilon,bpl,fpl,tpl`, twelve
    /// significant digits per value.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,epsilon,bpl,fpl,tpl\n");
        for t in 0..self.horizon {
            out.push_str(&format!(
                "{},{:.11e},{:.11e},{:.11e},{:.11e}\n",
                t + 1,
                self.epsilons[t],
                self.bpl[t],
                self.fpl[t],
                self.tpl[t]
            ));
        }
        out
    }

    /// Serializes to JSON with exact round-trip values.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("timeline serialization cannot fail")
    }
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{gen_identity, gen_uniform, MatrixKind, TransitionMatrix};
    use approx::assert_abs_diff_eq;

    fn eval_pair(m: &TransitionMatrix) -> (Evaluator<'_>, Evaluator<'_>) {
        (Evaluator::Direct(m), Evaluator::Direct(m))
    }

    #[test]
    fn identity_chain_accumulates_budgets() {
        let m = gen_identity(3, MatrixKind::Backward).unwrap();
        let (be, fe) = eval_pair(&m);
        let eps = vec![0.1; 10];
        let tl = quantify_timeline(&be, &fe, &eps).unwrap();
        for t in 0..10 {
            assert_abs_diff_eq!(tl.bpl[t], 0.1 * (t + 1) as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(tl.fpl[t], 0.1 * (10 - t) as f64, epsilon = 1e-12);
            assert_abs_diff_eq!(tl.tpl[t], 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn uniform_chain_does_not_compound() {
        let m = gen_uniform(3, MatrixKind::Backward).unwrap();
        let (be, fe) = eval_pair(&m);
        let tl = quantify_timeline(&be, &fe, &[0.1; 10]).unwrap();
        for t in 0..10 {
            assert_eq!(tl.bpl[t], 0.1);
            assert_eq!(tl.fpl[t], 0.1);
            assert_eq!(tl.tpl[t], 0.1);
        }
    }

    #[test]
    fn first_and_last_steps_carry_one_sided_loss() {
        let m = TransitionMatrix::new(vec![vec![0.8, 0.2], vec![0.2, 0.8]], MatrixKind::Backward)
            .unwrap();
        let (be, fe) = eval_pair(&m);
        let eps = [0.3, 0.5, 0.2];
        let tl = quantify_timeline(&be, &fe, &eps).unwrap();
        assert_eq!(tl.bpl[0], 0.3);
        assert_eq!(tl.fpl[2], 0.2);
        for t in 0..3 {
            assert!(tl.tpl[t] >= tl.bpl[t].max(tl.fpl[t]) - 1e-15);
        }
    }

    #[test]
    fn rejects_bad_budgets() {
        let m = gen_uniform(2, MatrixKind::Backward).unwrap();
        let (be, _) = eval_pair(&m);
        assert!(matches!(
            compute_bpl(&be, &[]),
            Err(crate::Error::Accounting(
                AccountingError::LengthMismatch { .. }
            ))
        ));
        assert!(matches!(
            compute_bpl(&be, &[0.1, 0.0]),
            Err(crate::Error::Accounting(
                AccountingError::NonPositiveEpsilon { index: 2, .. }
            ))
        ));
    }

    #[test]
    fn window_composition_telescopes() {
        let eps = [0.1, 0.2, 0.3, 0.4];
        // The whole horizon always composes to the full budget sum: the
        // first step's backward loss is its budget, the last step's
        // forward loss likewise.
        let id = gen_identity(2, MatrixKind::Backward).unwrap();
        let (be, fe) = eval_pair(&id);
        let tl = quantify_timeline(&be, &fe, &eps).unwrap();
        assert_abs_diff_eq!(compose(&tl, 1, 3).unwrap(), 1.0, epsilon = 1e-12);
        // A single step is its total loss.
        assert_eq!(compose(&tl, 2, 0).unwrap(), tl.tpl[1]);
        // Identity correlation compounds the entire history into any
        // window that is not anchored at the start.
        assert_abs_diff_eq!(compose(&tl, 2, 2).unwrap(), 1.0, epsilon = 1e-12);
        // Without correlation a window is exactly the sum of its budgets.
        let un = gen_uniform(2, MatrixKind::Backward).unwrap();
        let (be, fe) = eval_pair(&un);
        let tl = quantify_timeline(&be, &fe, &eps).unwrap();
        assert_abs_diff_eq!(compose(&tl, 2, 2).unwrap(), 0.9, epsilon = 1e-12);
    }

    #[test]
    fn composition_checks_the_window() {
        let m = gen_uniform(2, MatrixKind::Backward).unwrap();
        let (be, fe) = eval_pair(&m);
        let tl = quantify_timeline(&be, &fe, &[0.1; 3]).unwrap();
        assert!(matches!(
            compose(&tl, 0, 1),
            Err(AccountingError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            compose(&tl, 2, 2),
            Err(AccountingError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn csv_carries_twelve_significant_digits() {
        let m = TransitionMatrix::new(vec![vec![0.8, 0.2], vec![0.2, 0.8]], MatrixKind::Backward)
            .unwrap();
        let (be, fe) = eval_pair(&m);
        let tl = quantify_timeline(&be, &fe, &[0.123, 0.456, 0.789]).unwrap();
        let text = tl.to_csv();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("t,epsilon,bpl,fpl,tpl"));
        for (t, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            assert_eq!(fields[0], (t + 1).to_string());
            let tpl: f64 = fields[4].parse().unwrap();
            assert_abs_diff_eq!(tpl, tl.tpl[t], epsilon = 1e-11 * tl.tpl[t]);
        }
    }

    #[test]
    fn json_round_trip_is_exact() {
        let m = TransitionMatrix::new(vec![vec![0.8, 0.2], vec![0.2, 0.8]], MatrixKind::Backward)
            .unwrap();
        let (be, fe) = eval_pair(&m);
        let tl = quantify_timeline(&be, &fe, &[0.123, 0.456, 0.789]).unwrap();
        let text = tl.to_json();
        assert!(text.contains("\"T\": 3"));
        let back: LeakageTimeline = serde_json::from_str(&text).unwrap();
        back.validate().unwrap();
        assert_eq!(back, tl);
    }

    #[test]
    fn validation_catches_ragged_columns() {
        let tl = LeakageTimeline {
            horizon: 2,
            epsilons: vec![0.1, 0.2],
            bpl: vec![0.1],
            fpl: vec![0.1, 0.2],
            tpl: vec![0.1, 0.2],
        };
        assert!(matches!(
            tl.validate(),
            Err(AccountingError::LengthMismatch {
                expected: 2,
                got: 1
            })
        ));
        assert!(matches!(
            compose(&tl, 1, 1),
            Err(AccountingError::LengthMismatch { .. })
        ));
    }
}
