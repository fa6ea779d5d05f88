//! Temporal privacy leakage under correlated continuous data release.
//!
//! A mechanism that spends budget `eps_t` at each timestep does not
//! enjoy `eps_t`-level protection when an adversary knows how adjacent
//! states correlate: leakage compounds backward along the release
//! history and forward from future releases. This crate models the
//! correlation as row-stochastic transition matrices, quantifies the
//! compounded backward, forward, and total leakage per timestep, and
//! allocates per-step budgets so the total never exceeds a target.
//!
//! * [`matrix`]: validated transition matrices, parsing, generators.
//! * [`lfp`]: the per-pair worst-case log ratio, by exhaustive oracle
//!   or polynomial subset sweep.
//! * [`loss`]: whole-matrix loss functions with precomputed and
//!   piecewise-envelope fast paths, and the unbounded-horizon supremum.
//! * [`accounting`]: backward/forward/total leakage timelines and the
//!   composed leakage of release windows.
//! * [`allocation`]: budget schedules meeting a target level, either
//!   as an unbounded-horizon bound or exactly over a finite horizon.
//!
//! ```
//! use tdp_core::{allocate_exact, quantify_timeline, Evaluator, MatrixKind, TransitionMatrix};
//!
//! let back = TransitionMatrix::new(
//!     vec![vec![0.8, 0.2], vec![0.2, 0.8]],
//!     MatrixKind::Backward,
//! )?;
//! let fwd = back.with_kind(MatrixKind::Forward);
//! let (be, fe) = (Evaluator::Direct(&back), Evaluator::Direct(&fwd));
//!
//! // A flat budget leaks more than any single step spends.
//! let flat = quantify_timeline(&be, &fe, &[0.5; 4])?;
//! assert!(flat.tpl.iter().all(|&t| t > 0.5));
//!
//! // An allocated schedule pins total leakage to the target.
//! let sched = allocate_exact(&be, &fe, 1.0, 4)?;
//! assert!((sched.achieved - 1.0).abs() < 1e-6);
//! # Ok::<(), tdp_core::Error>(())
//! ```

#![deny(missing_docs)]

pub mod accounting;
pub mod allocation;
pub mod lfp;
pub mod loss;
pub mod matrix;

pub use accounting::{
    compose, compute_bpl, compute_fpl, quantify_timeline, AccountingError, LeakageTimeline,
};
pub use allocation::{
    allocate_exact, allocate_upper_bound, expected_noise, AllocationError, AllocationStrategy,
    BudgetSchedule,
};
pub use lfp::{
    lfp_oracle, log_ratio, max_loss_direct, solve_pair_direct, LfpError, LfpValue, PairSolution,
};
pub use loss::{
    eval_precomputed, evaluate_loss_function, generate_loss_function, precompute_params,
    supremum_loss, Evaluator, LossError, PiecewiseLoss, PrecomputedParams, Supremum,
};
pub use matrix::{
    gen_identity, gen_random_stochastic, gen_uniform, MatrixError, MatrixKind, TransitionMatrix,
};

/// Any error this crate can produce, by module of origin.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Matrix construction, parsing, or generation failed.
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    /// A pairwise solver rejected its arguments.
    #[error(transparent)]
    Lfp(#[from] LfpError),
    /// Loss-function construction or evaluation failed.
    #[error(transparent)]
    Loss(#[from] LossError),
    /// A leakage recursion or composition rejected its arguments.
    #[error(transparent)]
    Accounting(#[from] AccountingError),
    /// No schedule meets the request.
    #[error(transparent)]
    Allocation(#[from] AllocationError),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
