use std::collections::BTreeMap;

use super::mec::{mec_decompose, Mec};
use crate::{ExplicitMdp, StateSet};

#[derive(Debug, Clone, PartialEq)]
struct Group {
    members: Vec<usize>,
    outgoing: Vec<(usize, usize)>,
}

/// EC-collapsing quotient layered over a model.
///
/// Every state maps to a representative; collapsed end components share
/// the smallest member as representative and expose only their outgoing
/// `(state, action)` pairs. Uncollapsed states are their own representative
/// and keep all their actions. Representatives are always fully
/// compressed, so `representative` is idempotent.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientView {
    rep: Vec<usize>,
    groups: BTreeMap<usize, Group>,
}

impl QuotientView {
    pub fn identity(num_states: usize) -> Self {
        QuotientView {
            rep: (0..num_states).collect(),
            groups: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.rep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rep.is_empty()
    }

    /// Extends the universe to `num_states` with fresh singleton states.
    pub fn grow(&mut self, num_states: usize) {
        let old = self.rep.len();
        self.rep.extend(old..num_states.max(old));
    }

    #[inline]
    pub fn representative(&self, s: usize) -> usize {
        self.rep[s]
    }

    pub fn is_collapsed(&self, s: usize) -> bool {
        self.groups.contains_key(&self.rep[s])
    }

    /// Members of the collapsed component represented by `rep`.
    pub fn members(&self, rep: usize) -> Option<&[usize]> {
        self.groups.get(&rep).map(|g| g.members.as_slice())
    }

    /// Outgoing actions of the collapsed component represented by `rep`.
    pub fn outgoing(&self, rep: usize) -> Option<&[(usize, usize)]> {
        self.groups.get(&rep).map(|g| g.outgoing.as_slice())
    }

    pub fn num_collapsed(&self) -> usize {
        self.groups.len()
    }

    /// `(state, action)` pairs available at the quotient state of `s`.
    pub fn actions<'a>(&'a self, mdp: &ExplicitMdp, s: usize) -> QuotientActions<'a> {
        self.actions_with_count(s, mdp.actions(s).len())
    }

    /// As [`actions`](Self::actions), with the action count of `s` given
    /// directly.
    pub fn actions_with_count(&self, s: usize, count: usize) -> QuotientActions<'_> {
        match self.groups.get(&self.rep[s]) {
            Some(g) => QuotientActions::Collapsed(g.outgoing.iter()),
            None => QuotientActions::Own {
                state: s,
                next: 0,
                count,
            },
        }
    }

    /// Merges `mec` (and any groups it swallows) into one quotient state.
    /// Returns the new representative and whether anything changed.
    pub fn absorb(&mut self, mdp: &ExplicitMdp, mec: &Mec) -> (usize, bool) {
        let new_rep = mec.states[0];
        if let Some(g) = self.groups.get(&new_rep) {
            if g.members == mec.states {
                let outgoing = outgoing_of(mdp, mec);
                if outgoing == g.outgoing {
                    return (new_rep, false);
                }
            }
        }
        let old: Vec<usize> = mec.states.iter().map(|&s| self.rep[s]).collect();
        for r in old {
            self.groups.remove(&r);
        }
        for &s in &mec.states {
            self.rep[s] = new_rep;
        }
        self.groups.insert(
            new_rep,
            Group {
                members: mec.states.clone(),
                outgoing: outgoing_of(mdp, mec),
            },
        );
        (new_rep, true)
    }
}

fn outgoing_of(mdp: &ExplicitMdp, mec: &Mec) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (i, &s) in mec.states.iter().enumerate() {
        for a in 0..mdp.actions(s).len() {
            if !mec.actions[i].contains(&a) {
                out.push((s, a));
            }
        }
    }
    out
}

pub enum QuotientActions<'a> {
    Own { state: usize, next: usize, count: usize },
    Collapsed(std::slice::Iter<'a, (usize, usize)>),
}

impl Iterator for QuotientActions<'_> {
    type Item = (usize, usize);

    #[inline]
    fn next(&mut self) -> Option<(usize, usize)> {
        match self {
            QuotientActions::Own { state, next, count } => {
                if *next < *count {
                    *next += 1;
                    Some((*state, *next - 1))
                } else {
                    None
                }
            }
            QuotientActions::Collapsed(it) => it.next().copied(),
        }
    }
}

/// Value of the best quotient action at `s`, or 0 when the quotient state
/// has no outgoing action.
#[inline]
pub fn quotient_bellman(
    mdp: &ExplicitMdp,
    quotient: &QuotientView,
    s: usize,
    mut value: impl FnMut(usize) -> f64,
) -> f64 {
    let mut best = 0.0f64;
    for (q, a) in quotient.actions(mdp, s) {
        let v = mdp.dist(q, a).expect(&mut value);
        if v > best {
            best = v;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CollapseReport {
    /// End components newly formed or grown by this call.
    pub collapsed: usize,
    /// Components without outgoing actions, whose bound was set to 0.
    pub zeroed: usize,
}

/// Collapses the MECs of the explored sub-model.
///
/// `bounds` is indexed by state; the representative's entry is
/// authoritative. A freshly collapsed component takes the minimum bound of
/// its members, and a component without outgoing actions gets bound 0.
/// All members' entries are overwritten with the representative's value.
pub fn collapse_mecs(
    mdp: &ExplicitMdp,
    explored: &StateSet,
    quotient: &mut QuotientView,
    bounds: &mut [f64],
) -> CollapseReport {
    let decomposition = mec_decompose(mdp, explored);
    let mut report = CollapseReport::default();
    for mec in &decomposition.mecs {
        let merged = mec
            .states
            .iter()
            .map(|&s| bounds[quotient.representative(s)])
            .fold(f64::INFINITY, f64::min);
        let (rep, changed) = quotient.absorb(mdp, mec);
        if !changed {
            continue;
        }
        report.collapsed += 1;
        let value = if quotient.outgoing(rep).is_some_and(|o| o.is_empty()) {
            report.zeroed += 1;
            0.0
        } else {
            merged
        };
        for &s in &mec.states {
            bounds[s] = value;
        }
    }
    report
}
