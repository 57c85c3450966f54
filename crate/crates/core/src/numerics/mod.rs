//! Exact engines: step-bounded value iteration, interval iteration for
//! unbounded maximal reachability, and step-bounded total/average reward.
//!
//! All engines work on a *sub-model view*: a set of `inside` states. States
//! outside the view are frontier states whose values are pinned by a
//! [`FrontierPolicy`]. With the full state set as view the engines compute
//! values of the complete model.

mod bounded;
mod interval;
mod mean_payoff;

use std::time::Instant;

use thiserror::Error;

pub use bounded::{bounded_max_reach, ReachSteps};
pub use interval::{max_reach_interval, IntervalConfig, DEFAULT_MAX_SWEEPS};
pub use mean_payoff::{bounded_mean_payoff_bounds, RewardSteps};

use crate::model::{Model, Restriction};
use crate::StateSet;

/// Default precision of the oracle engines.
pub const ORACLE_DELTA: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("interval iteration did not converge within {sweeps} sweeps (gap {gap:e})")]
    NonConvergence { sweeps: u64, gap: f64 },
    #[error("deadline passed after {sweeps} sweeps (gap {gap:e})")]
    DeadlineExceeded { sweeps: u64, gap: f64 },
    #[error("initial state {0} is not inside the core")]
    InitialOutsideCore(usize),
    #[error("model carries no rewards")]
    MissingRewards,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Values substituted at frontier (outside-the-view) states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontierPolicy {
    pub lower: f64,
    pub upper: f64,
}

impl FrontierPolicy {
    /// Unknown states may or may not reach the target: `[0, 1]`.
    pub const UNKNOWN: FrontierPolicy = FrontierPolicy { lower: 0.0, upper: 1.0 };
    /// Frontier counts as reached, e.g. for exit probabilities.
    pub const REACHED: FrontierPolicy = FrontierPolicy { lower: 1.0, upper: 1.0 };
    /// Frontier is an absorbing non-target.
    pub const ABSORBING: FrontierPolicy = FrontierPolicy { lower: 0.0, upper: 0.0 };

    pub fn new(lower: f64, upper: f64) -> Result<Self, NumericsError> {
        if !(lower <= upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(NumericsError::InvalidArgument(format!(
                "frontier policy needs finite lower <= upper, got [{lower}, {upper}]"
            )));
        }
        Ok(FrontierPolicy { lower, upper })
    }

    fn check_probability(&self) -> Result<(), NumericsError> {
        if self.lower < 0.0 || self.upper > 1.0 || self.lower > self.upper {
            return Err(NumericsError::InvalidArgument(format!(
                "reachability frontier values must satisfy 0 <= lower <= upper <= 1, got [{}, {}]",
                self.lower, self.upper
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn exact(v: f64) -> Self {
        Interval { lower: v, upper: v }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        self.lower - tol <= v && v <= self.upper + tol
    }
}

/// Per-state lower and upper values.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueInterval {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ValueInterval {
    pub fn at(&self, s: usize) -> Interval {
        Interval {
            lower: self.lower[s],
            upper: self.upper[s],
        }
    }

    pub fn max_width(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| u - l)
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Horizon {
    Unbounded,
    Steps(usize),
}

impl std::fmt::Display for Horizon {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Horizon::Unbounded => f.write_str("unbounded"),
            Horizon::Steps(n) => write!(f, "{n}"),
        }
    }
}

/// Maximal probability, from the initial state, of ever leaving `core`
/// (unbounded) or of leaving it within `k` steps.
///
/// Works on the sub-model induced by `core` with all other states merged
/// into one absorbing exit state, so only the core's actions are touched.
/// The unbounded value is certified by interval iteration to width `delta`;
/// the step-bounded value is computed exactly by dynamic programming.
pub fn exit_probability<M: Model + ?Sized>(
    model: &M,
    core: &StateSet,
    horizon: Horizon,
    delta: f64,
) -> Result<Interval, NumericsError> {
    exit_probability_until(model, core, horizon, delta, None)
}

/// [`exit_probability`] that gives up once `deadline` passes.
pub fn exit_probability_until<M: Model + ?Sized>(
    model: &M,
    core: &StateSet,
    horizon: Horizon,
    delta: f64,
    deadline: Option<Instant>,
) -> Result<Interval, NumericsError> {
    let init = model.initial();
    if !core.contains(init) {
        return Err(NumericsError::InitialOutsideCore(init));
    }
    if core.len() == model.num_states() {
        return Ok(Interval::exact(0.0));
    }
    let sub = Restriction::new(model, core);
    let local_init = sub.mdp.initial();
    let inside = sub.inside();
    let no_targets = StateSet::new(sub.outside + 1);
    match horizon {
        Horizon::Unbounded => {
            let cfg = IntervalConfig {
                delta,
                deadline,
                ..IntervalConfig::default()
            };
            let v = max_reach_interval(&sub.mdp, &inside, &no_targets, FrontierPolicy::REACHED, &cfg)?;
            Ok(v.at(local_init))
        }
        Horizon::Steps(k) => {
            let mut steps = ReachSteps::new(&sub.mdp, &inside, &no_targets, 1.0);
            for _ in 0..k {
                steps.advance();
            }
            Ok(Interval::exact(steps.value(local_init)))
        }
    }
}

/// Verification precision for an ε-check: `min(1e-12, ε / 1000)`.
pub fn verification_delta(epsilon: f64) -> f64 {
    (epsilon * 1e-3).min(1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generators::build_fig3;

    #[test]
    fn exit_whole_model_is_zero() {
        let m = build_fig3(0.3).unwrap();
        let all = StateSet::full(4);
        assert_eq!(exit_probability(&m, &all, Horizon::Unbounded, 1e-12).unwrap(), Interval::exact(0.0));
        assert_eq!(exit_probability(&m, &all, Horizon::Steps(3), 1e-12).unwrap(), Interval::exact(0.0));
    }

    #[test]
    fn exit_fig3_cores() {
        let m = build_fig3(0.3).unwrap();
        let two = StateSet::from_indices(4, [0, 2]);
        let e = exit_probability(&m, &two, Horizon::Unbounded, 1e-12).unwrap();
        assert!(e.contains(0.3, 1e-12) && e.width() <= 1e-12);
        let three = StateSet::from_indices(4, [0, 1, 2]);
        let e = exit_probability(&m, &three, Horizon::Unbounded, 1e-12).unwrap();
        assert!(e.contains(0.15, 1e-12));
        let e = exit_probability(&m, &three, Horizon::Steps(1), 0.0).unwrap();
        assert!((e.upper - 0.15).abs() < 1e-15 && e.width() == 0.0);
    }

    #[test]
    fn exit_requires_initial() {
        let m = build_fig3(0.3).unwrap();
        assert_eq!(
            exit_probability(&m, &StateSet::from_indices(4, [1, 2]), Horizon::Unbounded, 1e-12),
            Err(NumericsError::InitialOutsideCore(0))
        );
    }

    #[test]
    fn verification_delta_rule() {
        assert_eq!(verification_delta(1e-6), 1e-12);
        assert_eq!(verification_delta(1e-10), 1e-13);
    }

    #[test]
    fn frontier_policy_validation() {
        assert!(FrontierPolicy::new(1.0, 0.0).is_err());
        assert!(FrontierPolicy::new(f64::NAN, 0.0).is_err());
        assert!(FrontierPolicy::new(-3.0, 5.0).is_ok());
        assert!(FrontierPolicy::new(-3.0, 5.0).unwrap().check_probability().is_err());
    }
}
