//! Models: the successor-function interface [`Model`] and explicit-state
//! storage.
//!
//! An [`ExplicitMdp`] stores, for every state, a non-empty list of actions
//! each carrying a successor [`Distribution`]. A Markov chain is an MDP with
//! exactly one action per state. Models are immutable after construction
//! and validated on every entry path (builder, JSON parser, generators).

pub mod generators;
mod json;

use std::borrow::Cow;

use thiserror::Error;

use crate::StateSet;

pub use json::{parse_model, serialize_model};

/// Accepted deviation of a distribution's total mass from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Distributions whose mass is off by more than this (but within
/// [`NORMALIZATION_TOLERANCE`]) are rescaled on acceptance. Smaller
/// deviations are floating-point noise and kept, so that normalization is
/// idempotent and serialization round-trips.
const RENORMALIZE_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("malformed model: {0}")]
    Malformed(String),
    #[error("state {state}, action {action}: distribution sums to {sum}")]
    DistributionSum { state: usize, action: usize, sum: f64 },
    #[error("state {state}, action {action}: probability {prob} for target {target} is not in (0, 1]")]
    InvalidProbability {
        state: usize,
        action: usize,
        target: usize,
        prob: f64,
    },
    #[error("state {state}, action {action}: duplicate target {target}")]
    DuplicateTarget {
        state: usize,
        action: usize,
        target: usize,
    },
    #[error("state {state}, action {action}: target {target} out of range (model has {num_states} states)")]
    TargetOutOfRange {
        state: usize,
        action: usize,
        target: usize,
        num_states: usize,
    },
    #[error("state {state}: empty action set")]
    EmptyActions { state: usize },
    #[error("initial state {initial} out of range (model has {num_states} states)")]
    InitialOutOfRange { initial: usize, num_states: usize },
    #[error("expected {expected} entries in {what}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Where a distribution lives, for error reporting.
#[derive(Debug, Clone, Copy, Default)]
pub struct Location {
    pub state: usize,
    pub action: usize,
}

/// A finite-support probability distribution over state indices.
///
/// Entries are sorted by target, targets are distinct and all
/// probabilities are strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    entries: Vec<(usize, f64)>,
}

impl Distribution {
    pub fn new(entries: Vec<(usize, f64)>) -> Result<Self, ModelError> {
        Self::validated(entries, Location::default())
    }

    pub(crate) fn validated(
        mut entries: Vec<(usize, f64)>,
        at: Location,
    ) -> Result<Self, ModelError> {
        for &(target, prob) in &entries {
            if !(prob > 0.0 && prob <= 1.0 + NORMALIZATION_TOLERANCE) {
                return Err(ModelError::InvalidProbability {
                    state: at.state,
                    action: at.action,
                    target,
                    prob,
                });
            }
        }
        entries.sort_by_key(|&(t, _)| t);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(ModelError::DuplicateTarget {
                state: at.state,
                action: at.action,
                target: w[0].0,
            });
        }
        let sum: f64 = entries.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(ModelError::DistributionSum {
                state: at.state,
                action: at.action,
                sum,
            });
        }
        if (sum - 1.0).abs() > RENORMALIZE_THRESHOLD {
            for e in &mut entries {
                e.1 /= sum;
            }
        }
        Ok(Distribution { entries })
    }

    pub fn dirac(target: usize) -> Self {
        Distribution {
            entries: vec![(target, 1.0)],
        }
    }

    /// Uniform distribution over distinct targets.
    pub fn uniform(targets: &[usize]) -> Result<Self, ModelError> {
        let p = 1.0 / targets.len() as f64;
        Self::new(targets.iter().map(|&t| (t, p)).collect())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().copied()
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|&(t, _)| t)
    }

    pub fn prob(&self, target: usize) -> f64 {
        self.entries
            .binary_search_by_key(&target, |&(t, _)| t)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Image under `f`, merging targets that map to the same state.
    pub fn map_targets(&self, mut f: impl FnMut(usize) -> usize) -> Distribution {
        let mut entries: Vec<(usize, f64)> = self.entries.iter().map(|&(t, p)| (f(t), p)).collect();
        entries.sort_by_key(|&(t, _)| t);
        entries.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 += b.1;
                true
            } else {
                false
            }
        });
        Distribution { entries }
    }

    /// Expected value of `f` over the distribution.
    #[inline]
    pub fn expect(&self, mut f: impl FnMut(usize) -> f64) -> f64 {
        self.entries.iter().map(|&(t, p)| p * f(t)).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Action {
    pub label: Option<String>,
    pub dist: Distribution,
}

impl Action {
    pub fn new(label: impl Into<String>, dist: Distribution) -> Self {
        Action {
            label: Some(label.into()),
            dist,
        }
    }

    pub fn unlabeled(dist: Distribution) -> Self {
        Action { label: None, dist }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMdp {
    initial: usize,
    actions: Vec<Vec<Action>>,
    rewards: Option<Vec<f64>>,
}

impl ExplicitMdp {
    pub fn new(
        initial: usize,
        actions: Vec<Vec<Action>>,
        rewards: Option<Vec<f64>>,
    ) -> Result<Self, ModelError> {
        let num_states = actions.len();
        if initial >= num_states {
            return Err(ModelError::InitialOutOfRange {
                initial,
                num_states,
            });
        }
        for (state, acts) in actions.iter().enumerate() {
            if acts.is_empty() {
                return Err(ModelError::EmptyActions { state });
            }
            for (action, act) in acts.iter().enumerate() {
                if let Some(target) = act.dist.support().find(|&t| t >= num_states) {
                    return Err(ModelError::TargetOutOfRange {
                        state,
                        action,
                        target,
                        num_states,
                    });
                }
            }
        }
        if let Some(r) = &rewards {
            if r.len() != num_states {
                return Err(ModelError::LengthMismatch {
                    what: "rewards",
                    expected: num_states,
                    found: r.len(),
                });
            }
            if let Some(bad) = r.iter().find(|x| !x.is_finite()) {
                return Err(ModelError::Malformed(format!("non-finite reward {bad}")));
            }
        }
        Ok(ExplicitMdp {
            initial,
            actions,
            rewards,
        })
    }

    pub fn num_states(&self) -> usize {
        self.actions.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn actions(&self, s: usize) -> &[Action] {
        &self.actions[s]
    }

    pub fn dist(&self, s: usize, a: usize) -> &Distribution {
        &self.actions[s][a].dist
    }

    pub fn num_transitions(&self) -> usize {
        self.actions
            .iter()
            .flat_map(|acts| acts.iter().map(|a| a.dist.entries().len()))
            .sum()
    }

    pub fn is_markov_chain(&self) -> bool {
        self.actions.iter().all(|a| a.len() == 1)
    }

    pub fn rewards(&self) -> Option<&[f64]> {
        self.rewards.as_deref()
    }

    pub fn with_rewards(mut self, rewards: Vec<f64>) -> Result<Self, ModelError> {
        if rewards.len() != self.num_states() {
            return Err(ModelError::LengthMismatch {
                what: "rewards",
                expected: self.num_states(),
                found: rewards.len(),
            });
        }
        self.rewards = Some(rewards);
        Ok(self)
    }

    /// Distinct successors of `s` over all actions, ascending.
    pub fn successors(&self, s: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.actions[s]
            .iter()
            .flat_map(|a| a.dist.support())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// Successor-function access to an MDP over states `0..num_states()`.
///
/// Learners only touch the states they explore, so a model may generate
/// actions on demand instead of storing them.
pub trait Model: Sync {
    fn num_states(&self) -> usize;
    fn initial(&self) -> usize;
    /// The non-empty action list of `s`.
    fn state_actions(&self, s: usize) -> Cow<'_, [Action]>;
}

impl Model for ExplicitMdp {
    fn num_states(&self) -> usize {
        self.actions.len()
    }

    fn initial(&self) -> usize {
        self.initial
    }

    fn state_actions(&self, s: usize) -> Cow<'_, [Action]> {
        Cow::Borrowed(&self.actions[s])
    }
}

/// The sub-model induced by a state set, with every outside state merged
/// into one absorbing state.
#[derive(Debug, Clone)]
pub struct Restriction {
    pub mdp: ExplicitMdp,
    /// `global[i]` is the original index of local state `i`.
    pub global: Vec<usize>,
    /// Local index of the merged outside state; always the last one.
    pub outside: usize,
}

impl Restriction {
    /// Builds the restriction of `model` to `states`. The local initial
    /// state is the image of the model's initial state.
    pub fn new<M: Model + ?Sized>(model: &M, states: &StateSet) -> Self {
        let global = states.to_vec();
        let outside = global.len();
        let local = |t: usize| global.binary_search(&t).unwrap_or(outside);
        let mut actions: Vec<Vec<Action>> = global
            .iter()
            .map(|&s| {
                model
                    .state_actions(s)
                    .iter()
                    .map(|a| Action {
                        label: a.label.clone(),
                        dist: a.dist.map_targets(local),
                    })
                    .collect()
            })
            .collect();
        actions.push(vec![Action::new("outside", Distribution::dirac(outside))]);
        let initial = local(model.initial());
        let mdp = ExplicitMdp {
            initial,
            actions,
            rewards: None,
        };
        Restriction {
            mdp,
            global,
            outside,
        }
    }

    /// All local states except the outside state.
    pub fn inside(&self) -> StateSet {
        let mut set = StateSet::full(self.outside + 1);
        set.remove(self.outside);
        set
    }
}
