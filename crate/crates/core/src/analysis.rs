//! Analyses on a learned core: the stability profile `N ↦ P^max[exit within N]`
//! and extrapolated bounds on step-bounded reachability and average reward
//! obtained by treating states outside the core as unknown.

use std::fmt::Write as _;

use thiserror::Error;

use crate::learncore::CoreResult;
use crate::numerics::{
    bounded_mean_payoff_bounds, max_reach_interval, FrontierPolicy, Horizon, Interval,
    IntervalConfig, NumericsError, ReachSteps,
};
use crate::model::{Model, Restriction};
use crate::{ExplicitMdp, StateSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("initial state {0} is not inside the core")]
    InitialOutsideCore(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityProfile {
    pub horizon: Horizon,
    pub epsilon: f64,
    /// `exits[N - 1]` is the exact maximal probability of leaving the core
    /// within `N` steps.
    pub exits: Vec<f64>,
}

impl StabilityProfile {
    pub fn exit_at(&self, steps: usize) -> f64 {
        if steps == 0 {
            0.0
        } else {
            self.exits[steps - 1]
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,exit\n");
        for (i, e) in self.exits.iter().enumerate() {
            let _ = writeln!(out, "{},{}", i + 1, e);
        }
        out
    }
}

/// Exit probabilities of `states` for every step bound `1..=n_max`.
pub fn exit_profile<M: Model + ?Sized>(
    mdp: &M,
    states: &StateSet,
    n_max: usize,
) -> Result<Vec<f64>, AnalysisError> {
    let init = mdp.initial();
    if !states.contains(init) {
        return Err(AnalysisError::InitialOutsideCore(init));
    }
    let sub = Restriction::new(mdp, states);
    let local_init = sub.mdp.initial();
    let no_targets = StateSet::new(sub.outside + 1);
    let mut steps = ReachSteps::new(&sub.mdp, &sub.inside(), &no_targets, 1.0);
    let mut exits = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        steps.advance();
        exits.push(steps.value(local_init));
    }
    Ok(exits)
}

pub fn stability<M: Model + ?Sized>(
    mdp: &M,
    core: &CoreResult,
    n_max: usize,
) -> Result<StabilityProfile, AnalysisError> {
    if n_max == 0 {
        return Err(AnalysisError::InvalidArgument("N_max must be >= 1".into()));
    }
    Ok(StabilityProfile {
        horizon: core.horizon,
        epsilon: core.epsilon,
        exits: exit_profile(mdp, &core.states, n_max)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    Reach,
    MeanPayoff { r_min: f64, r_max: f64 },
}

/// Per-step lower and upper bounds, steps `1..=N_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolationCurve {
    pub objective: Objective,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Bounds on the unbounded value, when requested.
    pub unbounded: Option<Interval>,
}

impl ExtrapolationCurve {
    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn at(&self, steps: usize) -> Interval {
        Interval {
            lower: self.lower[steps - 1],
            upper: self.upper[steps - 1],
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,lower,upper\n");
        for (i, (l, u)) in self.lower.iter().zip(&self.upper).enumerate() {
            let _ = writeln!(out, "{},{},{}", i + 1, l, u);
        }
        out
    }
}

/// Bounds on `P^max[reach targets within N]` from the core alone: states
/// outside the core count 0 in the lower and 1 in the upper run. With
/// `unbounded_delta` set, the unbounded value is bracketed by interval
/// iteration under the same substitution.
pub fn extrapolate_reach(
    mdp: &ExplicitMdp,
    core: &StateSet,
    targets: &StateSet,
    n_max: usize,
    unbounded_delta: Option<f64>,
) -> Result<ExtrapolationCurve, AnalysisError> {
    let init = mdp.initial();
    if !core.contains(init) {
        return Err(AnalysisError::InitialOutsideCore(init));
    }
    let inside_targets = targets.intersection(core);
    let mut lo = ReachSteps::new(mdp, core, &inside_targets, 0.0);
    let mut hi = ReachSteps::new(mdp, core, &inside_targets, 1.0);
    let mut lower = Vec::with_capacity(n_max);
    let mut upper = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        lo.advance();
        hi.advance();
        lower.push(lo.value(init));
        upper.push(hi.value(init));
    }
    let unbounded = match unbounded_delta {
        Some(delta) => {
            let cfg = IntervalConfig {
                delta,
                ..IntervalConfig::default()
            };
            let v = max_reach_interval(mdp, core, &inside_targets, FrontierPolicy::UNKNOWN, &cfg)?;
            Some(v.at(init))
        }
        None => None,
    };
    Ok(ExtrapolationCurve {
        objective: Objective::Reach,
        lower,
        upper,
        unbounded,
    })
}

/// Bounds on the maximal `N`-step average reward, with states outside the
/// core earning `r_min` (lower run) or `r_max` (upper run) per step.
pub fn extrapolate_mean_payoff(
    mdp: &ExplicitMdp,
    core: &StateSet,
    r_min: f64,
    r_max: f64,
    n_max: usize,
) -> Result<ExtrapolationCurve, AnalysisError> {
    let init = mdp.initial();
    if !core.contains(init) {
        return Err(AnalysisError::InitialOutsideCore(init));
    }
    let rewards = mdp.rewards().ok_or(NumericsError::MissingRewards)?;
    if !(r_min <= r_max) {
        return Err(AnalysisError::InvalidArgument(format!(
            "r_min must not exceed r_max, got {r_min} > {r_max}"
        )));
    }
    if let Some(s) = core.iter().find(|&s| rewards[s] < r_min || rewards[s] > r_max) {
        return Err(AnalysisError::InvalidArgument(format!(
            "reward {} of state {s} lies outside [{r_min}, {r_max}]",
            rewards[s]
        )));
    }
    let frontier = FrontierPolicy::new(r_min, r_max)?;
    let bounds = bounded_mean_payoff_bounds(mdp, core, n_max, frontier)?;
    Ok(ExtrapolationCurve {
        objective: Objective::MeanPayoff { r_min, r_max },
        lower: bounds.iter().map(|i| i.lower).collect(),
        upper: bounds.iter().map(|i| i.upper).collect(),
        unbounded: None,
    })
}
