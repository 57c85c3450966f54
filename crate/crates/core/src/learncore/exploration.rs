use std::collections::{HashMap, VecDeque};

use crate::graph::{collapse_mecs, QuotientView};
use crate::model::{Action, Distribution, Model};
use crate::{ExplicitMdp, StateSet};

/// Counters of one learning run.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LearnStats {
    pub paths: u64,
    pub states_explored: usize,
    pub bellman_updates: u64,
    pub ec_collapses: u64,
    pub wall_time_secs: f64,
}

/// The explored part of a model: explored states numbered densely in
/// exploration order ("local" indices) together with their actions, which
/// are fetched once on exploration. Targets in cached actions keep their
/// original indices.
#[derive(Debug, Clone)]
pub struct ExploredModel {
    set: StateSet,
    order: Vec<usize>,
    local: HashMap<usize, usize>,
    actions: Vec<Vec<Action>>,
}

impl ExploredModel {
    pub fn new(num_states: usize) -> Self {
        ExploredModel {
            set: StateSet::new(num_states),
            order: Vec::new(),
            local: HashMap::new(),
            actions: Vec::new(),
        }
    }

    /// Returns false if `s` was already explored.
    pub fn explore<M: Model + ?Sized>(&mut self, model: &M, s: usize) -> bool {
        if !self.set.insert(s) {
            return false;
        }
        self.local.insert(s, self.order.len());
        self.order.push(s);
        self.actions.push(model.state_actions(s).into_owned());
        true
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn states(&self) -> &StateSet {
        &self.set
    }

    #[inline]
    pub fn contains(&self, s: usize) -> bool {
        self.set.contains(s)
    }

    /// Local index of an explored state.
    #[inline]
    pub fn local(&self, s: usize) -> Option<usize> {
        if self.set.contains(s) {
            self.local.get(&s).copied()
        } else {
            None
        }
    }

    /// Explored states in exploration order; position `i` holds local state `i`.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Cached actions of local state `l`.
    #[inline]
    pub fn actions(&self, l: usize) -> &[Action] {
        &self.actions[l]
    }

    /// Successors of explored states that are not explored, ascending.
    pub fn frontier(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .actions
            .iter()
            .flatten()
            .flat_map(|a| a.dist.support())
            .filter(|&t| !self.set.contains(t))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Explicit model over local indices: explored states `0..len` and one
    /// absorbing state `len` standing for every unexplored state.
    pub fn local_model(&self) -> ExplicitMdp {
        let sink = self.order.len();
        let mut actions: Vec<Vec<Action>> = self
            .actions
            .iter()
            .map(|acts| {
                acts.iter()
                    .map(|a| Action::unlabeled(a.dist.map_targets(|t| self.local(t).unwrap_or(sink))))
                    .collect()
            })
            .collect();
        actions.push(vec![Action::unlabeled(Distribution::dirac(sink))]);
        ExplicitMdp::new(0, actions, None).expect("local model is well formed")
    }
}

/// Explored sub-model, upper bounds on the probability of reaching
/// unexplored states, and the EC quotient of the explored sub-model.
///
/// Bounds and the quotient live on local indices; for collapsed components
/// the representative's entry is authoritative. Unexplored states read 1.
#[derive(Debug, Clone)]
pub struct PartialExploration {
    sub: ExploredModel,
    upper: Vec<f64>,
    quotient: QuotientView,
    explored_at_last_ec: usize,
    pub stats: LearnStats,
}

impl PartialExploration {
    pub fn new<M: Model + ?Sized>(model: &M) -> Self {
        PartialExploration {
            sub: ExploredModel::new(model.num_states()),
            upper: Vec::new(),
            quotient: QuotientView::identity(0),
            explored_at_last_ec: 0,
            stats: LearnStats::default(),
        }
    }

    /// Starts from a previously computed state set and bounds. The bounds
    /// must be consistent: `bounds[s] >= P^max_s[reach outside states]`.
    pub fn warm<M: Model + ?Sized>(model: &M, states: &StateSet, bounds: &[f64]) -> Self {
        let mut e = Self::new(model);
        for s in states.iter() {
            e.explore(model, s);
            let l = e.sub.len() - 1;
            e.upper[l] = bounds[s].clamp(0.0, 1.0);
        }
        e
    }

    pub fn explored(&self) -> &StateSet {
        self.sub.states()
    }

    pub fn sub_model(&self) -> &ExploredModel {
        &self.sub
    }

    pub fn exploration_order(&self) -> &[usize] {
        self.sub.order()
    }

    #[inline]
    pub fn is_explored(&self, s: usize) -> bool {
        self.sub.contains(s)
    }

    /// The EC quotient over local indices.
    pub fn quotient(&self) -> &QuotientView {
        &self.quotient
    }

    /// Current upper bound on reaching an unexplored state from `s`.
    #[inline]
    pub fn bound(&self, s: usize) -> f64 {
        match self.sub.local(s) {
            Some(l) => self.upper[self.quotient.representative(l)],
            None => 1.0,
        }
    }

    /// Successors of explored states that are not explored, ascending.
    pub fn frontier(&self) -> Vec<usize> {
        self.sub.frontier()
    }

    /// Marks `s` explored with bound 1. Returns false if already explored.
    pub fn explore<M: Model + ?Sized>(&mut self, model: &M, s: usize) -> bool {
        if !self.sub.explore(model, s) {
            return false;
        }
        self.upper.push(1.0);
        self.quotient.grow(self.sub.len());
        self.stats.states_explored = self.sub.len();
        true
    }

    /// Successor distributions of the quotient actions at explored `s`.
    pub fn quotient_dists(&self, s: usize) -> Vec<&Distribution> {
        let l = self.sub.local(s).expect("state is explored");
        self.quotient
            .actions_with_count(l, self.sub.actions(l).len())
            .map(|(q, a)| &self.sub.actions(q)[a].dist)
            .collect()
    }

    /// `U(s) <- min(U(s), max_a Σ Δ·U)` over the quotient actions of the
    /// explored state `s`. Returns the new bound.
    pub fn bellman(&mut self, s: usize) -> f64 {
        let l = self.sub.local(s).expect("state is explored");
        let mut best = 0.0f64;
        for (q, a) in self.quotient.actions_with_count(l, self.sub.actions(l).len()) {
            let v = self.sub.actions(q)[a].dist.expect(|t| self.bound(t));
            if v > best {
                best = v;
            }
        }
        let r = self.quotient.representative(l);
        self.stats.bellman_updates += 1;
        if best < self.upper[r] {
            self.upper[r] = best;
        }
        self.upper[r]
    }

    /// Explored states added since the last EC update.
    pub fn growth_since_ec_update(&self) -> usize {
        self.sub.len() - self.explored_at_last_ec
    }

    pub fn explored_at_last_ec_update(&self) -> usize {
        self.explored_at_last_ec
    }

    /// Collapses the MECs of the explored sub-model and sets the bound of
    /// every explored state that has no path to an unexplored state to 0.
    pub fn update_ecs(&mut self) {
        let local = self.sub.local_model();
        let m = self.sub.len();
        let mut view = StateSet::full(m + 1);
        view.remove(m);
        let report = collapse_mecs(&local, &view, &mut self.quotient, &mut self.upper);
        self.stats.ec_collapses += report.collapsed as u64;
        self.explored_at_last_ec = m;
        self.zero_disconnected(&local);
    }

    fn zero_disconnected(&mut self, local: &ExplicitMdp) {
        let m = self.sub.len();
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); m];
        let mut reaches = vec![false; m];
        let mut queue = VecDeque::new();
        for s in 0..m {
            for t in local.successors(s) {
                if t < m {
                    preds[t].push(s);
                } else if !reaches[s] {
                    reaches[s] = true;
                    queue.push_back(s);
                }
            }
        }
        while let Some(t) = queue.pop_front() {
            for &s in &preds[t] {
                if !reaches[s] {
                    reaches[s] = true;
                    queue.push_back(s);
                }
            }
        }
        for s in (0..m).filter(|&s| !reaches[s]) {
            self.upper[s] = 0.0;
            let r = self.quotient.representative(s);
            self.upper[r] = 0.0;
        }
    }
}
