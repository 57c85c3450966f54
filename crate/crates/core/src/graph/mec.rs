use super::scc::tarjan;
use crate::{ExplicitMdp, StateSet};

/// One maximal end component: its states (ascending) and, parallel to
/// them, the retained action indices of each state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mec {
    pub states: Vec<usize>,
    pub actions: Vec<Vec<usize>>,
}

impl Mec {
    pub fn contains(&self, s: usize) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn retains(&self, s: usize, a: usize) -> bool {
        self.states
            .binary_search(&s)
            .map(|i| self.actions[i].contains(&a))
            .unwrap_or(false)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MecDecomposition {
    pub mecs: Vec<Mec>,
    state_to_mec: Vec<Option<usize>>,
}

impl MecDecomposition {
    pub fn mec_of(&self, s: usize) -> Option<usize> {
        self.state_to_mec.get(s).copied().flatten()
    }

    pub fn len(&self) -> usize {
        self.mecs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mecs.is_empty()
    }
}

/// MECs of the sub-model induced by `view`.
///
/// Actions with a successor outside the view never take part in an end
/// component. The decomposition alternates SCC computation with pruning of
/// actions that leave their SCC, until nothing changes. MECs come out in
/// reverse topological order.
pub fn mec_decompose(mdp: &ExplicitMdp, view: &StateSet) -> MecDecomposition {
    let n = mdp.num_states();
    let mut allowed: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut candidate = StateSet::new(n);
    for s in view.iter() {
        allowed[s] = (0..mdp.actions(s).len())
            .filter(|&a| mdp.dist(s, a).support().all(|t| view.contains(t)))
            .collect();
        if !allowed[s].is_empty() {
            candidate.insert(s);
        }
    }

    let mut comp_of = vec![usize::MAX; n];
    let sccs = loop {
        let sccs = tarjan(n, candidate.iter(), |s, buf| {
            for &a in &allowed[s] {
                buf.extend(mdp.dist(s, a).support().filter(|&t| candidate.contains(t)));
            }
        });
        for (i, comp) in sccs.iter().enumerate() {
            for &s in comp {
                comp_of[s] = i;
            }
        }
        let mut changed = false;
        for comp in &sccs {
            for &s in comp {
                let before = allowed[s].len();
                allowed[s].retain(|&a| {
                    mdp.dist(s, a)
                        .support()
                        .all(|t| candidate.contains(t) && comp_of[t] == comp_of[s])
                });
                if allowed[s].len() != before {
                    changed = true;
                }
            }
        }
        let emptied: Vec<usize> = candidate.iter().filter(|&s| allowed[s].is_empty()).collect();
        for s in emptied {
            candidate.remove(s);
            changed = true;
        }
        if !changed {
            break sccs;
        }
    };

    let mut state_to_mec = vec![None; n];
    let mut mecs = Vec::new();
    for comp in sccs {
        let idx = mecs.len();
        for &s in &comp {
            state_to_mec[s] = Some(idx);
        }
        let actions = comp.iter().map(|&s| std::mem::take(&mut allowed[s])).collect();
        mecs.push(Mec {
            states: comp,
            actions,
        });
    }
    MecDecomposition { mecs, state_to_mec }
}
