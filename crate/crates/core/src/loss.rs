//! Loss functions of a transition matrix over a privacy-budget domain.
//!
//! The per-step loss `L(alpha)` is the maximum pair solution over all
//! ordered row pairs. Three evaluation strategies trade preprocessing
//! for query speed:
//!
//! * direct: run the subset sweep per pair per query (no preprocessing),
//! * precomputed: per pair, sort survivors once by likelihood ratio so a
//!   query only binary-searches a threshold table,
//! * piecewise: collapse the precomputed tables into the upper envelope,
//!   a short list of `(q, d)` segments, so a query is one binary search
//!   over the envelope breakpoints.
//!
//! The module also computes `sup_t` of the compounded leakage as the
//! release horizon grows unboundedly, in closed form per candidate pair.

use serde::{Deserialize, Serialize};

use crate::lfp::{log_ratio, LfpValue};
use crate::matrix::TransitionMatrix;

/// Recursion cap for envelope construction. The width stop terminates
/// far earlier on any realistic input.
pub const ENVELOPE_MAX_DEPTH: usize = 64;

/// Intervals narrower than this (relative to scale) are emitted as-is.
const ENVELOPE_WIDTH_TOL: f64 = 1e-12;

/// Errors from loss-function construction and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum LossError {
    /// An argument lies outside the mathematical domain.
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    /// Evaluation was requested beyond the constructed domain.
    #[error("alpha {alpha} exceeds the constructed domain [0, {a_max}]")]
    OutOfDomain {
        /// Requested budget.
        alpha: f64,
        /// Upper end of the constructed domain.
        a_max: f64,
    },
    /// Envelope recursion exceeded its depth cap.
    #[error("envelope construction exceeded depth {0}: intersections too dense")]
    IntersectionTooDense(usize),
}

/// Convenience alias for loss operations.
pub type Result<T> = std::result::Result<T, LossError>;

// ============================================================================
// Precomputed pair tables
// ============================================================================

/// Sorted threshold tables for every ordered row pair.
///
/// Row `r = i*(n-1) + (j if j < i else j-1)` describes the pair
/// `(row_i, row_j)`. Within a row, slot `s` holds the cumulative sums
/// `q(S)`, `d(S)` of the first `s+1` survivors in likelihood-ratio
/// order, and `am[r][s]` is the budget below which that prefix beats
/// the one before it. Thresholds are nonincreasing across slots, start
/// at `+inf`, and pad with `0` once survivors are exhausted (the sums
/// stay flat there). A pair with no survivor (`q <= d` everywhere)
/// leaves its row all zero and never contributes to the maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedParams {
    /// Number of states `n`.
    pub n: usize,
    /// Cumulative numerator sums, `n(n-1)` rows by `n` slots.
    pub qm: Vec<Vec<f64>>,
    /// Cumulative denominator sums, same shape.
    pub dm: Vec<Vec<f64>>,
    /// Activation thresholds, same shape, nonincreasing per row.
    pub am: Vec<Vec<f64>>,
}

/// Builds the threshold tables for all ordered row pairs.
pub fn precompute_params(m: &TransitionMatrix) -> PrecomputedParams {
    let n = m.n();
    let pairs = n * (n - 1);
    let mut qm = vec![vec![0.0; n]; pairs];
    let mut dm = vec![vec![0.0; n]; pairs];
    let mut am = vec![vec![0.0; n]; pairs];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = i * (n - 1) + if j < i { j } else { j - 1 };
            let q = m.row(i);
            let d = m.row(j);
            let mut surv: Vec<usize> = (0..n).filter(|&c| q[c] > d[c]).collect();
            if surv.is_empty() {
                continue;
            }
            // Descending likelihood ratio q/d, zero denominators first.
            // Cross-multiplied to avoid dividing; the sort is stable so
            // tied ratios keep column order.
            surv.sort_by(|&a, &b| match (d[a] == 0.0, d[b] == 0.0) {
                (true, true) => std::cmp::Ordering::Equal,
                (true, false) => std::cmp::Ordering::Less,
                (false, true) => std::cmp::Ordering::Greater,
                (false, false) => (q[b] * d[a]).total_cmp(&(q[a] * d[b])),
            });
            let mut cq = 0.0;
            let mut cd = 0.0;
            for (s, &c) in surv.iter().enumerate() {
                let (qi, di) = (q[c], d[c]);
                am[r][s] = if s == 0 {
                    f64::INFINITY
                } else {
                    // The prefix including column c beats the one without
                    // it below the budget where their objectives cross.
                    // A nonpositive denominator means c's ratio ties the
                    // running ratio, so the longer prefix always wins.
                    let den = cq * di - cd * qi;
                    if den <= 0.0 {
                        f64::INFINITY
                    } else {
                        ((qi - di) / den).ln_1p()
                    }
                };
                cq += qi;
                cd += di;
                qm[r][s] = cq;
                dm[r][s] = cd;
            }
            for s in surv.len()..n {
                qm[r][s] = cq;
                dm[r][s] = cd;
            }
        }
    }
    PrecomputedParams { n, qm, dm, am }
}

/// Loss at budget `alpha` from the precomputed tables.
///
/// Per pair, binary search locates the last slot whose threshold
/// exceeds `alpha`; only that slot's sums are evaluated.
pub fn eval_precomputed(p: &PrecomputedParams, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let mut best = 0.0f64;
    for r in 0..p.qm.len() {
        let am = &p.am[r];
        if am[0] == 0.0 {
            continue;
        }
        let k = am.partition_point(|&a| a > alpha) - 1;
        best = best.max(log_ratio(p.qm[r][k], p.dm[r][k], alpha));
    }
    Ok(best)
}

// ============================================================================
// Piecewise envelope
// ============================================================================

/// The loss function as an explicit piecewise curve on `[0, a_max]`.
///
/// Segment `s` covers budgets in `(breakpoints[s-1], breakpoints[s]]`
/// (from 0 for the first) and evaluates as `log_ratio(q, d, alpha)`
/// with `(q, d) = coeffs[s]`. Breakpoints are strictly increasing and
/// end at `a_max`. `trivial` marks a matrix with identical rows, whose
/// loss is identically zero.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLoss {
    /// Right endpoint of each segment, ascending; the last equals `a_max`.
    pub breakpoints: Vec<f64>,
    /// Subset sums `(q, d)` defining each segment's formula.
    pub coeffs: Vec<(f64, f64)>,
    /// Upper end of the constructed domain.
    pub a_max: f64,
    /// Whether the loss is identically zero.
    pub trivial: bool,
}

#[derive(Serialize, Deserialize)]
struct SegmentRepr {
    hi: f64,
    q: f64,
    d: f64,
}

#[derive(Serialize, Deserialize)]
struct PiecewiseRepr {
    a_max: f64,
    trivial: bool,
    segments: Vec<SegmentRepr>,
}

impl PiecewiseLoss {
    /// Serializes to the JSON wire form
    /// `{"a_max": .., "trivial": .., "segments": [{"hi", "q", "d"}, ..]}`.
    pub fn to_json(&self) -> String {
        let repr = PiecewiseRepr {
            a_max: self.a_max,
            trivial: self.trivial,
            segments: self
                .breakpoints
                .iter()
                .zip(&self.coeffs)
                .map(|(&hi, &(q, d))| SegmentRepr { hi, q, d })
                .collect(),
        };
        serde_json::to_string_pretty(&repr).expect("piecewise serialization cannot fail")
    }

    /// Parses and validates the JSON wire form.
    pub fn from_json(text: &str) -> Result<Self> {
        let repr: PiecewiseRepr =
            serde_json::from_str(text).map_err(|e| LossError::InvalidDomain(e.to_string()))?;
        if repr.segments.is_empty() {
            return Err(LossError::InvalidDomain("no segments".to_string()));
        }
        let mut breakpoints = Vec::with_capacity(repr.segments.len());
        let mut coeffs = Vec::with_capacity(repr.segments.len());
        for seg in &repr.segments {
            if !(seg.hi.is_finite() && seg.q.is_finite() && seg.d.is_finite())
                || seg.d < 0.0
                || seg.q < seg.d
            {
                return Err(LossError::InvalidDomain(format!(
                    "bad segment: hi={}, q={}, d={}",
                    seg.hi, seg.q, seg.d
                )));
            }
            if let Some(&prev) = breakpoints.last() {
                if seg.hi <= prev {
                    return Err(LossError::InvalidDomain(
                        "segment endpoints must be strictly increasing".to_string(),
                    ));
                }
            }
            breakpoints.push(seg.hi);
            coeffs.push((seg.q, seg.d));
        }
        if *breakpoints.last().unwrap() != repr.a_max {
            return Err(LossError::InvalidDomain(
                "last segment must end at a_max".to_string(),
            ));
        }
        Ok(Self {
            breakpoints,
            coeffs,
            a_max: repr.a_max,
            trivial: repr.trivial,
        })
    }
}

/// Winning `(q, d)` at budget `alpha`, maximizing the slot-resolved
/// objective over all pairs.
///
/// Exact value ties (including the all-tied point `alpha = 0`) break
/// toward larger `q - d`, then smaller `q + d`: among curves equal at a
/// point, that order prefers the one that dominates just above zero.
fn envelope_top(p: &PrecomputedParams, alpha: f64) -> (f64, f64) {
    let mut top = (0.0, 0.0);
    let mut top_val = f64::NEG_INFINITY;
    for r in 0..p.qm.len() {
        let am = &p.am[r];
        if am[0] == 0.0 {
            continue;
        }
        let k = am.partition_point(|&a| a > alpha) - 1;
        let (q, d) = (p.qm[r][k], p.dm[r][k]);
        let v = log_ratio(q, d, alpha);
        let better = v > top_val
            || (v == top_val
                && (q - d > top.0 - top.1 || (q - d == top.0 - top.1 && q + d < top.0 + top.1)));
        if better {
            top_val = v;
            top = (q, d);
        }
    }
    top
}

/// Budget at which the curves for `a` and `b` cross, if any.
fn crossing(a: (f64, f64), b: (f64, f64)) -> Option<f64> {
    let num = b.0 + a.1 - a.0 - b.1;
    let den = a.0 * b.1 - b.0 * a.1;
    if den == 0.0 {
        return None;
    }
    let estar = num / den;
    if estar.is_finite() && estar > 0.0 {
        Some(estar.ln_1p())
    } else {
        None
    }
}

fn build_envelope(
    p: &PrecomputedParams,
    lo: f64,
    hi: f64,
    lo_top: (f64, f64),
    hi_top: (f64, f64),
    depth: usize,
    out: &mut Vec<(f64, (f64, f64))>,
) -> Result<()> {
    // A definition on top at both endpoints is on top throughout, so a
    // single segment suffices. Degenerate widths stop the descent that
    // exact crossings at an endpoint would otherwise cause.
    if lo_top == hi_top || hi - lo <= ENVELOPE_WIDTH_TOL * hi.max(1.0) {
        out.push((hi, hi_top));
        return Ok(());
    }
    if depth > ENVELOPE_MAX_DEPTH {
        return Err(LossError::IntersectionTooDense(ENVELOPE_MAX_DEPTH));
    }
    let mut split = match crossing(lo_top, hi_top) {
        Some(a) if a > lo && a < hi => a,
        _ => 0.5 * (lo + hi),
    };
    if !(split > lo && split < hi) {
        split = 0.5 * (lo + hi);
        if !(split > lo && split < hi) {
            out.push((hi, hi_top));
            return Ok(());
        }
    }
    let mid_top = envelope_top(p, split);
    build_envelope(p, lo, split, lo_top, mid_top, depth + 1, out)?;
    build_envelope(p, split, hi, mid_top, hi_top, depth + 1, out)
}

/// Constructs the loss function as a piecewise envelope on `[0, a_max]`.
///
/// Recursively splits the domain at crossings between the winning pair
/// definitions at the interval endpoints; adjacent segments with equal
/// coefficients are merged afterwards, so interior breakpoints are
/// exactly the budgets where the envelope changes definition.
pub fn generate_loss_function(m: &TransitionMatrix, a_max: f64) -> Result<PiecewiseLoss> {
    if !a_max.is_finite() || a_max <= 0.0 {
        return Err(LossError::InvalidDomain(format!(
            "a_max must be positive and finite, got {a_max}"
        )));
    }
    if m.is_uniform_rows() {
        return Ok(PiecewiseLoss {
            breakpoints: vec![a_max],
            coeffs: vec![(0.0, 0.0)],
            a_max,
            trivial: true,
        });
    }
    let p = precompute_params(m);
    let lo_top = envelope_top(&p, 0.0);
    let hi_top = envelope_top(&p, a_max);
    let mut raw = Vec::new();
    build_envelope(&p, 0.0, a_max, lo_top, hi_top, 0, &mut raw)?;
    // Rounding noise in the cumulative sums can leave slivers where a
    // nearly tied definition wins by an ulp. Their value contribution
    // is bounded by the sliver width, so absorb them into a neighbor.
    let mut cleaned: Vec<(f64, (f64, f64))> = Vec::with_capacity(raw.len());
    let mut lo = 0.0;
    for (i, &(hi, top)) in raw.iter().enumerate() {
        if hi - lo <= ENVELOPE_WIDTH_TOL * hi.max(1.0) {
            if i + 1 < raw.len() {
                continue;
            }
            if let Some(last) = cleaned.last_mut() {
                last.0 = hi;
                continue;
            }
        }
        cleaned.push((hi, top));
        lo = hi;
    }
    let mut breakpoints = Vec::with_capacity(cleaned.len());
    let mut coeffs: Vec<(f64, f64)> = Vec::with_capacity(cleaned.len());
    for (hi, top) in cleaned {
        if coeffs.last() == Some(&top) {
            *breakpoints.last_mut().unwrap() = hi;
        } else {
            breakpoints.push(hi);
            coeffs.push(top);
        }
    }
    Ok(PiecewiseLoss {
        breakpoints,
        coeffs,
        a_max,
        trivial: false,
    })
}

/// Loss at budget `alpha` from the piecewise form: one binary search.
///
/// `alpha` may fall below the first breakpoint (every segment formula
/// is exact down to 0); beyond `a_max` the curve was never constructed
/// and evaluation is refused.
pub fn evaluate_loss_function(pl: &PiecewiseLoss, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if alpha > pl.a_max {
        return Err(LossError::OutOfDomain {
            alpha,
            a_max: pl.a_max,
        });
    }
    let idx = pl.breakpoints.partition_point(|&b| b < alpha);
    let (q, d) = pl.coeffs[idx.min(pl.coeffs.len() - 1)];
    Ok(log_ratio(q, d, alpha))
}

// ============================================================================
// Supremum over unbounded horizons
// ============================================================================

/// Limit of the compounded leakage as the horizon grows, with the pair
/// sums that attain it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Supremum {
    /// The supremum, finite or unbounded.
    pub value: LfpValue,
    /// Numerator sum of the attaining pair.
    pub witness_q: f64,
    /// Denominator sum of the attaining pair.
    pub witness_d: f64,
}

/// Fixed point of `alpha = log_ratio(q, d, alpha) + eps` for one pair.
fn pair_fixed_point(q: f64, d: f64, eps: f64) -> LfpValue {
    if q == 0.0 {
        // The pair contributes no loss; the budget alone remains, and
        // it must come back exactly, not through exp and ln.
        return LfpValue::Finite(eps);
    }
    let e = eps.exp();
    if d == 0.0 {
        if q >= 1.0 {
            return LfpValue::Infinite;
        }
        // alpha = ln(q(e^alpha - 1) + 1) + eps solves in closed form;
        // the solution escapes to infinity once q e^eps reaches 1.
        let denom = 1.0 - q * e;
        if denom <= 0.0 {
            return LfpValue::Infinite;
        }
        LfpValue::Finite(((1.0 - q) * e / denom).ln())
    } else {
        // Positive root of d F^2 + (1 - d - q e^eps) F - (1 - q) e^eps = 0,
        // where F = e^alpha at the fixed point.
        let b = d + q * e - 1.0;
        let f = ((4.0 * d * e * (1.0 - q) + b * b).sqrt() + b) / (2.0 * d);
        LfpValue::Finite(f.ln())
    }
}

/// Supremum of the compounded leakage for per-step budget `epsilon` as
/// the horizon grows without bound.
///
/// Each slot of the precomputed tables is a candidate pair; the limit
/// is the largest per-pair fixed point. It is unbounded exactly when
/// some candidate has `d = 0` with `q e^epsilon >= 1`.
pub fn supremum_loss(m: &TransitionMatrix, epsilon: f64) -> Result<Supremum> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(LossError::InvalidDomain(format!(
            "epsilon must be nonnegative and finite, got {epsilon}"
        )));
    }
    let p = precompute_params(m);
    let mut best = Supremum {
        value: LfpValue::Finite(epsilon),
        witness_q: 0.0,
        witness_d: 0.0,
    };
    let mut best_val = epsilon;
    for r in 0..p.qm.len() {
        for s in 0..p.n {
            let (q, d) = (p.qm[r][s], p.dm[r][s]);
            match pair_fixed_point(q, d, epsilon) {
                LfpValue::Infinite => {
                    return Ok(Supremum {
                        value: LfpValue::Infinite,
                        witness_q: q,
                        witness_d: d,
                    });
                }
                LfpValue::Finite(v) => {
                    if v > best_val {
                        best_val = v;
                        best = Supremum {
                            value: LfpValue::Finite(v),
                            witness_q: q,
                            witness_d: d,
                        };
                    }
                }
            }
        }
    }
    Ok(best)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(LossError::InvalidDomain(format!(
            "alpha must be nonnegative and finite, got {alpha}"
        )));
    }
    Ok(())
}

// ============================================================================
// Unified evaluation strategy
// ============================================================================

/// A loss function under one of the three evaluation strategies, so
/// recursions and allocators can be written once.
#[derive(Debug, Clone)]
pub enum Evaluator<'a> {
    /// Run the subset sweep over all pairs per query.
    Direct(&'a TransitionMatrix),
    /// Binary-search the per-pair threshold tables per query.
    Precomputed(PrecomputedParams),
    /// Binary-search the envelope breakpoints per query.
    Piecewise(PiecewiseLoss),
}

impl Evaluator<'_> {
    /// The loss at budget `alpha` under this strategy.
    pub fn eval(&self, alpha: f64) -> crate::Result<f64> {
        match self {
            Evaluator::Direct(m) => Ok(crate::lfp::max_loss_direct(m, alpha)?),
            Evaluator::Precomputed(p) => Ok(eval_precomputed(p, alpha)?),
            Evaluator::Piecewise(pl) => Ok(evaluate_loss_function(pl, alpha)?),
        }
    }
}

// ============================================================================
// Tests
// ============================================================================
