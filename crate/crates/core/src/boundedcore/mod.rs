//! Learning n-step ε-cores over a step-indexed bound store.
//!
//! Bounds are kept per explored state and per number of remaining steps in
//! a [`BoundFunction`]. Every episode samples a path of at most `n` steps
//! and writes `max_a Σ Δ·get(s', r-1)` back at each position. Every
//! `exact_every` episodes an exact `n`-step pass over the explored set
//! refreshes the store, which guarantees convergence for both store kinds.

mod store;

use std::collections::{HashMap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use store::{BoundFunction, DenseStore, SparseStore, StoreKind};

use crate::learncore::{
    acceptance_threshold, check_epsilon, check_warm_start, choose_successor, verify_and_finalize,
    Budget, CoreResult, ExploredModel, Heuristic, LearnConfig, LearnError, LearnStats, RunMeta,
    StallMonitor, WarmStart,
};
use crate::numerics::{verification_delta, Horizon, ReachSteps};
use crate::model::Model;
use crate::{Distribution, StateSet};

/// Learns an `n`-step ε-core using a store of the given kind.
#[allow(clippy::too_many_arguments)]
pub fn learn_finite_core<M: Model + ?Sized>(
    mdp: &M,
    epsilon: f64,
    n: usize,
    heuristic: Heuristic,
    store: StoreKind,
    seed: u64,
    config: &LearnConfig,
    warm_start: Option<&WarmStart>,
) -> Result<CoreResult, LearnError> {
    match store {
        StoreKind::Dense => {
            let mut s = DenseStore::new(0, n);
            learn_with_store(mdp, epsilon, n, heuristic, &mut s, seed, config, warm_start)
        }
        StoreKind::Sparse { k } => {
            if k == 0 {
                return Err(LearnError::InvalidArgument("store spacing K must be >= 1".into()));
            }
            let mut s = SparseStore::new(0, n, k);
            learn_with_store(mdp, epsilon, n, heuristic, &mut s, seed, config, warm_start)
        }
    }
}

/// Run state; the store is indexed by local state.
struct Run<'a, M: ?Sized, B> {
    mdp: &'a M,
    n: usize,
    store: &'a mut B,
    sub: ExploredModel,
    stats: LearnStats,
}

impl<M: Model + ?Sized, B: BoundFunction> Run<'_, M, B> {
    #[inline]
    fn bound(&self, s: usize, r: usize) -> f64 {
        match self.sub.local(s) {
            Some(l) => self.store.get(l, r),
            None => 1.0,
        }
    }

    fn explore(&mut self, s: usize) -> bool {
        let fresh = self.sub.explore(self.mdp, s);
        self.stats.states_explored = self.sub.len();
        fresh
    }

    fn backup(&mut self, s: usize, r: usize) {
        let l = self.sub.local(s).expect("state is explored");
        let mut best = 0.0f64;
        for a in self.sub.actions(l) {
            let v = a.dist.expect(|t| self.bound(t, r - 1));
            if v > best {
                best = v;
            }
        }
        self.store.update(l, r, best);
        self.stats.bellman_updates += 1;
    }

    /// Exact `r`-step values for all `r <= n` on the explored set, written
    /// into the store in ascending `r`.
    fn exact_pass(&mut self) {
        let local = self.sub.local_model();
        let m = self.sub.len();
        let mut inside = StateSet::full(m + 1);
        inside.remove(m);
        let mut steps = ReachSteps::new(&local, &inside, &StateSet::new(m + 1), 1.0);
        for r in 1..=self.n {
            steps.advance();
            for l in 0..m {
                self.store.update(l, r, steps.value(l));
            }
        }
        self.stats.bellman_updates += (self.n * m) as u64;
    }

    /// Explores every frontier state within `n` steps of the initial state.
    fn expand_frontier(&mut self) {
        let init = self.mdp.initial();
        let mut depth: HashMap<usize, usize> = HashMap::from([(init, 0)]);
        let mut queue = VecDeque::from([init]);
        let mut fresh = Vec::new();
        while let Some(s) = queue.pop_front() {
            let d = depth[&s];
            if d >= self.n {
                continue;
            }
            let l = self.sub.local(s).expect("queued states are explored");
            for a in self.sub.actions(l) {
                for t in a.dist.support() {
                    if depth.contains_key(&t) {
                        continue;
                    }
                    depth.insert(t, d + 1);
                    if self.sub.contains(t) {
                        queue.push_back(t);
                    } else {
                        fresh.push(t);
                    }
                }
            }
        }
        fresh.sort_unstable();
        for t in fresh {
            self.explore(t);
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn learn_with_store<M: Model + ?Sized, B: BoundFunction>(
    mdp: &M,
    epsilon: f64,
    n: usize,
    heuristic: Heuristic,
    store: &mut B,
    seed: u64,
    config: &LearnConfig,
    warm_start: Option<&WarmStart>,
) -> Result<CoreResult, LearnError> {
    check_epsilon(epsilon)?;
    if n == 0 {
        return Err(LearnError::InvalidArgument("step bound n must be >= 1".into()));
    }
    let kind = store.kind();
    let budget = Budget::new(config);
    let init = mdp.initial();
    let mut run = Run {
        mdp,
        n,
        store,
        sub: ExploredModel::new(mdp.num_states()),
        stats: LearnStats::default(),
    };
    if let Some(w) = warm_start {
        check_warm_start(mdp, w)?;
        for s in w.states.iter() {
            run.explore(s);
        }
    }
    run.explore(init);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut target = acceptance_threshold(epsilon);
    let mut path: Vec<usize> = Vec::with_capacity(n + 1);
    let mut scratch = Vec::new();
    let mut stall = StallMonitor::new(config.stall_episodes, 1.0);
    let mut systematic = false;

    loop {
        while run.bound(init, n) >= target {
            if budget.exhausted(run.stats.paths) {
                run.stats.wall_time_secs = budget.elapsed_secs();
                return Err(LearnError::ResourceCap(Box::new(CoreResult {
                    states: run.sub.states().clone(),
                    epsilon,
                    horizon: Horizon::Steps(n),
                    heuristic,
                    seed,
                    verified_exit_upper: run.bound(init, n),
                    verified: false,
                    bound_store: Some(kind),
                    stats: run.stats,
                })));
            }

            if systematic {
                run.expand_frontier();
                run.exact_pass();
            } else {
                path.clear();
                path.push(init);
                let mut s = init;
                let mut r = n;
                while r >= 1 && run.bound(s, r) > 0.0 {
                    let l = run.sub.local(s).expect("path states are explored");
                    let dists: Vec<&Distribution> = run.sub.actions(l).iter().map(|a| &a.dist).collect();
                    let t = choose_successor(&dists, heuristic, |x| run.bound(x, r - 1), &mut rng, &mut scratch);
                    path.push(t);
                    r -= 1;
                    if run.explore(t) {
                        break;
                    }
                    s = t;
                }
                for i in (0..path.len()).rev() {
                    let r = n - i;
                    if r >= 1 {
                        run.backup(path[i], r);
                    }
                }
                if (run.stats.paths + 1).is_multiple_of(config.exact_every.max(1)) {
                    run.exact_pass();
                }
            }
            run.stats.paths += 1;

            if stall.record(run.bound(init, n), target) && !systematic {
                log::info!("sampling stalled; expanding the frontier breadth-first");
                systematic = true;
            }
        }

        run.stats.wall_time_secs = budget.elapsed_secs();
        let meta = RunMeta {
            heuristic,
            seed,
            bound_store: Some(kind),
            stats: run.stats,
            deadline: budget.deadline(),
        };
        match verify_and_finalize(mdp, run.sub.states(), epsilon, Horizon::Steps(n), meta) {
            Ok(core) => return Ok(core),
            Err(LearnError::Rejected { .. } | LearnError::Inconclusive { .. }) => {
                target = run.bound(init, n) - 2.0 * verification_delta(epsilon);
                log::debug!("verification failed; lowering target to {target}");
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generators::{airplane, build_airplane, build_fig3, AirplaneConfig};
    use crate::model::Action;
    use crate::ExplicitMdp;
    use crate::numerics::exit_probability;

    #[test]
    fn fig3_one_step_matches_unbounded() {
        let m = build_fig3(0.3).unwrap();
        for kind in [StoreKind::Dense, StoreKind::Sparse { k: 5 }] {
            for h in Heuristic::ALL {
                let core = learn_finite_core(&m, 0.3, 1, h, kind, 3, &LearnConfig::default(), None).unwrap();
                assert!(core.states.contains(0) && core.states.contains(2));
                assert!(core.states.contains(1) || core.states.contains(3));
                assert_eq!(core.horizon, Horizon::Steps(1));
                assert_eq!(core.bound_store, Some(kind));
            }
        }
    }

    #[test]
    fn long_prefix_only() {
        // chain 0 -> 1 -> ... -> 9, branching only at 9
        let mut actions: Vec<Vec<Action>> = (0..9).map(|s| vec![Action::unlabeled(Distribution::dirac(s + 1))]).collect();
        actions.push(vec![Action::unlabeled(Distribution::uniform(&[10, 11]).unwrap())]);
        actions.push(vec![Action::unlabeled(Distribution::dirac(10))]);
        actions.push(vec![Action::unlabeled(Distribution::dirac(11))]);
        let m = ExplicitMdp::new(0, actions, None).unwrap();
        let core = learn_finite_core(&m, 0.01, 5, Heuristic::Weighted, StoreKind::Sparse { k: 5 }, 0, &LearnConfig::default(), None).unwrap();
        assert!(core.states.iter().all(|s| s <= 5), "{:?}", core.states);
    }

    #[test]
    fn airplane_return_bounded_core_skips_recovery() {
        let m = build_airplane(&AirplaneConfig { size: 10, return_trip: true, tau: 1e-10 }).unwrap();
        for kind in [StoreKind::Dense, StoreKind::Sparse { k: 5 }] {
            let core = learn_finite_core(&m, 1e-6, 12, Heuristic::Weighted, kind, 0, &LearnConfig::default(), None).unwrap();
            assert!(!core.states.contains(airplane::BIT_FLIP));
            let exit = exit_probability(&m, &core.states, Horizon::Steps(12), 0.0).unwrap();
            assert!(exit.upper < 1e-6);
        }
    }

    #[test]
    fn zero_steps_rejected() {
        let m = build_fig3(0.3).unwrap();
        assert!(learn_finite_core(&m, 0.3, 0, Heuristic::Prob, StoreKind::Dense, 0, &LearnConfig::default(), None).is_err());
        assert!(learn_finite_core(&m, 0.3, 2, Heuristic::Prob, StoreKind::Sparse { k: 0 }, 0, &LearnConfig::default(), None).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let m = build_airplane(&AirplaneConfig { size: 4, return_trip: true, tau: 0.05 }).unwrap();
        let run = || learn_finite_core(&m, 0.01, 12, Heuristic::Difference, StoreKind::Sparse { k: 3 }, 9, &LearnConfig::default(), None).unwrap();
        let (a, b) = (run(), run());
        assert_eq!(a.states, b.states);
        assert_eq!(a.stats.paths, b.stats.paths);
    }
}
