//! Learning unbounded ε-cores by sampling-guided Bellman back-propagation.
//!
//! A run keeps a [`PartialExploration`]: the explored states and upper
//! bounds `U(s)` on the probability of reaching an unexplored state. Each
//! episode samples a path from the initial state, promotes the first
//! unexplored state it meets, and back-propagates `U` along the path. End
//! components of the explored sub-model are collapsed from time to time so
//! that `U` cannot get stuck at a spurious fixed point. The run stops once
//! `U(initial) < ε`, and the explored set is then re-verified exactly.

mod exploration;
mod heuristic;
mod verify;

use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use exploration::{ExploredModel, LearnStats, PartialExploration};
pub use heuristic::{Heuristic, UnknownHeuristic};
pub(crate) use heuristic::choose_successor;
pub use verify::{
    acceptance_threshold, check_core, check_core_until, verify_and_finalize, Verdict, VerdictKind, DECISION_SLACK,
};
pub(crate) use verify::check_epsilon;

use crate::boundedcore::StoreKind;
use crate::numerics::{verification_delta, Horizon, Interval, NumericsError};
use crate::model::Model;
use crate::StateSet;

/// Knobs shared by both learners. Defaults follow the documented schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// An episode revisiting one state more often than this ends early and
    /// forces an EC update.
    pub revisit_limit: u32,
    /// Relative growth of the explored set that triggers an EC update.
    pub ec_growth: f64,
    /// Episode length cap is `max(min_episode_len, episode_len_factor * explored)`.
    pub min_episode_len: usize,
    pub episode_len_factor: usize,
    /// Length of the window over which progress on the initial bound is
    /// measured. Sampling gives way to breadth-first expansion once a
    /// window's progress, repeated [`STALL_HORIZON`] times, would not reach
    /// the target.
    pub stall_episodes: u64,
    /// Bellman change below which a breadth-first round stops sweeping.
    pub stall_tolerance: f64,
    /// Maximal Bellman sweeps per breadth-first round.
    pub fallback_sweeps: usize,
    /// Bounded learner: episodes between exact DP passes.
    pub exact_every: u64,
    pub max_episodes: Option<u64>,
    pub time_limit: Option<Duration>,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            revisit_limit: 8,
            ec_growth: 0.5,
            min_episode_len: 100,
            episode_len_factor: 3,
            stall_episodes: 10_000,
            stall_tolerance: 1e-12,
            fallback_sweeps: 50,
            exact_every: 64,
            max_episodes: None,
            time_limit: None,
        }
    }
}

/// A verified (or, after a resource cap, explicitly unverified) core.
#[derive(Debug, Clone, PartialEq)]
pub struct CoreResult {
    pub states: StateSet,
    pub epsilon: f64,
    pub horizon: Horizon,
    pub heuristic: Heuristic,
    pub seed: u64,
    /// Certified upper bound on the exit probability; for an unverified
    /// result the learner's own bound on the initial state.
    pub verified_exit_upper: f64,
    pub verified: bool,
    pub bound_store: Option<StoreKind>,
    pub stats: LearnStats,
}

/// Run metadata attached to a result by [`verify_and_finalize`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunMeta {
    pub heuristic: Heuristic,
    pub seed: u64,
    pub bound_store: Option<StoreKind>,
    pub stats: LearnStats,
    /// Verification gives up once this passes.
    pub deadline: Option<Instant>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("epsilon must lie in (0, 1), got {0}")]
    InvalidEpsilon(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("resource cap reached after {} paths; result is unverified", .0.stats.paths)]
    ResourceCap(Box<CoreResult>),
    #[error("not a core: exit probability is at least {exit_lower} >= epsilon {epsilon}")]
    Rejected { exit_lower: f64, epsilon: f64 },
    #[error("inconclusive: exit probability in [{}, {}] straddles epsilon {epsilon}", .exit.lower, .exit.upper)]
    Inconclusive { exit: Interval, epsilon: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Optional starting point: a state set with consistent bounds (indexed by
/// state, `bounds[s] >= P^max_s[reach outside states]`).
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub states: StateSet,
    pub bounds: Vec<f64>,
}

impl WarmStart {
    /// The trivially consistent warm start `U ≡ 1`.
    pub fn trivial(states: StateSet) -> Self {
        let n = states.capacity();
        WarmStart {
            states,
            bounds: vec![1.0; n],
        }
    }
}

/// Windows of unchanged progress rate a run may still need before it
/// counts as stalled.
pub const STALL_HORIZON: f64 = 100.0;

/// Watches the initial bound for progress too slow to reach the target.
pub(crate) struct StallMonitor {
    window: u64,
    episodes: u64,
    start: f64,
}

impl StallMonitor {
    pub(crate) fn new(window: u64, bound: f64) -> Self {
        StallMonitor {
            window: window.max(1),
            episodes: 0,
            start: bound,
        }
    }

    /// Records one episode ending at `bound`; true when the window just
    /// closed made too little progress towards `target`.
    pub(crate) fn record(&mut self, bound: f64, target: f64) -> bool {
        self.episodes += 1;
        if self.episodes < self.window {
            return false;
        }
        let progress = self.start - bound;
        self.start = bound;
        self.episodes = 0;
        progress * STALL_HORIZON < bound - target
    }
}

pub(crate) struct Budget {
    start: Instant,
    time_limit: Option<Duration>,
    max_episodes: Option<u64>,
}

impl Budget {
    pub(crate) fn new(cfg: &LearnConfig) -> Self {
        Budget {
            start: Instant::now(),
            time_limit: cfg.time_limit,
            max_episodes: cfg.max_episodes,
        }
    }

    pub(crate) fn exhausted(&self, episodes: u64) -> bool {
        self.max_episodes.is_some_and(|m| episodes >= m)
            || self.time_limit.is_some_and(|t| self.start.elapsed() >= t)
    }

    pub(crate) fn deadline(&self) -> Option<Instant> {
        self.time_limit.map(|t| self.start + t)
    }

    pub(crate) fn elapsed_secs(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

pub(crate) fn check_warm_start<M: Model + ?Sized>(mdp: &M, warm: &WarmStart) -> Result<(), LearnError> {
    let n = mdp.num_states();
    if warm.states.capacity() != n || warm.bounds.len() != n {
        return Err(LearnError::InvalidArgument(format!(
            "warm start sized for {} states, model has {n}",
            warm.bounds.len()
        )));
    }
    if !warm.states.contains(mdp.initial()) {
        return Err(LearnError::InvalidArgument(
            "warm start does not contain the initial state".into(),
        ));
    }
    Ok(())
}

/// Learns an ε-core of `mdp`.
///
/// Deterministic for fixed inputs. On success the returned core satisfies
/// the exact check `exit < ε`. When `config.max_episodes` or
/// `config.time_limit` is hit first, the partial result is returned inside
/// [`LearnError::ResourceCap`] with `verified == false`.
pub fn learn_core<M: Model + ?Sized>(
    mdp: &M,
    epsilon: f64,
    heuristic: Heuristic,
    seed: u64,
    config: &LearnConfig,
    warm_start: Option<&WarmStart>,
) -> Result<CoreResult, LearnError> {
    check_epsilon(epsilon)?;
    let budget = Budget::new(config);
    let init = mdp.initial();
    let mut expl = match warm_start {
        Some(w) => {
            check_warm_start(mdp, w)?;
            PartialExploration::warm(mdp, &w.states, &w.bounds)
        }
        None => PartialExploration::new(mdp),
    };
    expl.explore(mdp, init);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut target = acceptance_threshold(epsilon);
    let mut sampler = Sampler::default();
    let mut stall = StallMonitor::new(config.stall_episodes, expl.bound(init));
    let mut systematic = false;

    let capped = |expl: &mut PartialExploration| {
        expl.stats.wall_time_secs = budget.elapsed_secs();
        log::info!(
            "resource cap: {} paths, {} explored, U(init) = {}",
            expl.stats.paths,
            expl.explored().len(),
            expl.bound(init)
        );
        LearnError::ResourceCap(Box::new(CoreResult {
            states: expl.explored().clone(),
            epsilon,
            horizon: Horizon::Unbounded,
            heuristic,
            seed,
            verified_exit_upper: expl.bound(init),
            verified: false,
            bound_store: None,
            stats: expl.stats,
        }))
    };

    loop {
        while expl.bound(init) >= target {
            if budget.exhausted(expl.stats.paths) {
                return Err(capped(&mut expl));
            }
            if systematic {
                systematic_round(mdp, &mut expl, config);
            } else {
                sampler.episode(mdp, &mut expl, heuristic, config, &mut rng);
            }
            expl.stats.paths += 1;

            if stall.record(expl.bound(init), target) && !systematic {
                log::info!("sampling stalled; switching to breadth-first expansion");
                systematic = true;
            }
        }

        expl.stats.wall_time_secs = budget.elapsed_secs();
        let meta = RunMeta {
            heuristic,
            seed,
            bound_store: None,
            stats: expl.stats,
            deadline: budget.deadline(),
        };
        match verify_and_finalize(mdp, expl.explored(), epsilon, Horizon::Unbounded, meta) {
            Ok(mut core) => {
                core.stats.wall_time_secs = budget.elapsed_secs();
                log::info!(
                    "core of {} states, exit <= {}",
                    core.states.len(),
                    core.verified_exit_upper
                );
                return Ok(core);
            }
            Err(LearnError::Rejected { .. } | LearnError::Inconclusive { .. }) => {
                let u = expl.bound(init);
                target = u - 2.0 * verification_delta(epsilon);
                log::debug!("verification failed at U(init) = {u}; lowering target to {target}");
            }
            Err(LearnError::Numerics(NumericsError::DeadlineExceeded { .. })) => {
                return Err(capped(&mut expl));
            }
            Err(e) => return Err(e),
        }
    }
}

/// Reusable per-run sampling state. Visit counts are indexed by local
/// state.
#[derive(Default)]
pub(crate) struct Sampler {
    visits: Vec<u32>,
    touched: Vec<usize>,
    path: Vec<usize>,
    scratch: Vec<(usize, f64)>,
}

impl Sampler {

    /// Samples one path, back-propagates along it and runs the EC schedule.
    fn episode<M: Model + ?Sized>(
        &mut self,
        mdp: &M,
        expl: &mut PartialExploration,
        heuristic: Heuristic,
        cfg: &LearnConfig,
        rng: &mut ChaCha8Rng,
    ) {
        let init = mdp.initial();
        let cap = cfg
            .min_episode_len
            .max(cfg.episode_len_factor * expl.explored().len());
        self.path.clear();
        self.path.push(init);
        let mut revisit_trigger = false;
        let mut s = init;
        while self.path.len() <= cap && expl.bound(s) > 0.0 {
            let dists = expl.quotient_dists(s);
            if dists.is_empty() {
                break;
            }
            let t = choose_successor(&dists, heuristic, |x| expl.bound(x), rng, &mut self.scratch);
            self.path.push(t);
            if expl.explore(mdp, t) {
                break;
            }
            let l = expl.sub_model().local(t).expect("explored");
            if l >= self.visits.len() {
                self.visits.resize(expl.sub_model().len(), 0);
            }
            if self.visits[l] == 0 {
                self.touched.push(l);
            }
            self.visits[l] += 1;
            if self.visits[l] > cfg.revisit_limit {
                revisit_trigger = true;
                break;
            }
            s = t;
        }
        for s in self.touched.drain(..) {
            self.visits[s] = 0;
        }

        let grown = expl.growth_since_ec_update();
        let base = expl.explored_at_last_ec_update();
        if grown > 0 && (revisit_trigger || grown as f64 >= cfg.ec_growth * base as f64) {
            expl.update_ecs();
        }
        for i in (0..self.path.len()).rev() {
            expl.bellman(self.path[i]);
        }
    }
}

/// Breadth-first fallback: explore the whole frontier, collapse ECs, and
/// sweep Bellman updates over the explored set.
fn systematic_round<M: Model + ?Sized>(mdp: &M, expl: &mut PartialExploration, cfg: &LearnConfig) {
    for s in expl.frontier() {
        expl.explore(mdp, s);
    }
    expl.update_ecs();
    let order: Vec<usize> = expl.exploration_order().iter().rev().copied().collect();
    for _ in 0..cfg.fallback_sweeps {
        let mut change = 0.0f64;
        for &s in &order {
            let before = expl.bound(s);
            let after = expl.bellman(s);
            change = change.max(before - after);
        }
        if change <= cfg.stall_tolerance {
            break;
        }
    }
}
