use std::time::Instant;

use super::{CoreResult, LearnError, LearnStats, RunMeta};
use crate::numerics::{exit_probability_until, verification_delta, Horizon, Interval};
use crate::model::Model;
use crate::StateSet;

/// Relative slack below ε used by every acceptance decision, so that a set
/// whose exit probability equals ε up to rounding is never accepted.
pub const DECISION_SLACK: f64 = 1e-12;

/// Largest exit bound that still counts as strictly below `epsilon`.
pub fn acceptance_threshold(epsilon: f64) -> f64 {
    epsilon * (1.0 - DECISION_SLACK)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerdictKind {
    Accepted,
    Rejected,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub exit: Interval,
}

/// Checks `states` against the exact exit probability.
///
/// Accepted iff the certified upper bound is below ε, rejected iff the
/// lower bound is not; anything in between is inconclusive.
pub fn check_core<M: Model + ?Sized>(
    mdp: &M,
    states: &StateSet,
    epsilon: f64,
    horizon: Horizon,
) -> Result<Verdict, LearnError> {
    check_core_until(mdp, states, epsilon, horizon, None)
}

/// [`check_core`] that gives up once `deadline` passes.
pub fn check_core_until<M: Model + ?Sized>(
    mdp: &M,
    states: &StateSet,
    epsilon: f64,
    horizon: Horizon,
    deadline: Option<Instant>,
) -> Result<Verdict, LearnError> {
    check_epsilon(epsilon)?;
    let exit = exit_probability_until(mdp, states, horizon, verification_delta(epsilon), deadline)?;
    let threshold = acceptance_threshold(epsilon);
    let kind = if exit.upper < threshold {
        VerdictKind::Accepted
    } else if exit.lower >= threshold {
        VerdictKind::Rejected
    } else {
        VerdictKind::Inconclusive
    };
    Ok(Verdict { kind, exit })
}

pub(crate) fn check_epsilon(epsilon: f64) -> Result<(), LearnError> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(LearnError::InvalidEpsilon(epsilon))
    }
}

/// Verifies `states` and packages it as a core.
pub fn verify_and_finalize<M: Model + ?Sized>(
    mdp: &M,
    states: &StateSet,
    epsilon: f64,
    horizon: Horizon,
    meta: RunMeta,
) -> Result<CoreResult, LearnError> {
    let verdict = check_core_until(mdp, states, epsilon, horizon, meta.deadline)?;
    match verdict.kind {
        VerdictKind::Accepted => Ok(CoreResult {
            states: states.clone(),
            epsilon,
            horizon,
            heuristic: meta.heuristic,
            seed: meta.seed,
            verified_exit_upper: verdict.exit.upper,
            verified: true,
            bound_store: meta.bound_store,
            stats: meta.stats,
        }),
        VerdictKind::Rejected => Err(LearnError::Rejected {
            exit_lower: verdict.exit.lower,
            epsilon,
        }),
        VerdictKind::Inconclusive => Err(LearnError::Inconclusive {
            exit: verdict.exit,
            epsilon,
        }),
    }
}

impl RunMeta {
    pub fn new(heuristic: super::Heuristic, seed: u64) -> Self {
        RunMeta {
            heuristic,
            seed,
            bound_store: None,
            stats: LearnStats::default(),
            deadline: None,
        }
    }
}
