use super::{FrontierPolicy, NumericsError, ValueInterval};
use crate::{ExplicitMdp, StateSet};

/// Step-indexed maximal reachability, one Bellman step at a time.
///
/// After `j` calls to [`advance`](Self::advance), `value(s)` is the maximal
/// probability of visiting a target within `j` steps from `s`, where
/// targets inside the view are pinned to 1 and states outside the view to
/// `frontier_value` (at every step, including step 0). Only two vectors
/// are kept.
pub struct ReachSteps<'a> {
    mdp: &'a ExplicitMdp,
    free: Vec<usize>,
    cur: Vec<f64>,
    next: Vec<f64>,
    steps: usize,
}

impl<'a> ReachSteps<'a> {
    pub fn new(
        mdp: &'a ExplicitMdp,
        inside: &StateSet,
        targets: &StateSet,
        frontier_value: f64,
    ) -> Self {
        let n = mdp.num_states();
        let mut cur = vec![0.0; n];
        let mut free = Vec::new();
        for s in 0..n {
            if !inside.contains(s) {
                cur[s] = frontier_value;
            } else if targets.contains(s) {
                cur[s] = 1.0;
            } else {
                free.push(s);
            }
        }
        ReachSteps {
            mdp,
            free,
            next: cur.clone(),
            cur,
            steps: 0,
        }
    }

    pub fn advance(&mut self) {
        let cur = &self.cur;
        for &s in &self.free {
            let mut best = 0.0f64;
            for a in self.mdp.actions(s) {
                let v = a.dist.expect(|t| cur[t]);
                if v > best {
                    best = v;
                }
            }
            self.next[s] = best;
        }
        std::mem::swap(&mut self.cur, &mut self.next);
        self.steps += 1;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn value(&self, s: usize) -> f64 {
        self.cur[s]
    }

    pub fn values(&self) -> &[f64] {
        &self.cur
    }
}

/// Exact `k`-step maximal reachability with lower/upper frontier
/// substitution.
pub fn bounded_max_reach(
    mdp: &ExplicitMdp,
    inside: &StateSet,
    targets: &StateSet,
    k: usize,
    frontier: FrontierPolicy,
) -> Result<ValueInterval, NumericsError> {
    frontier.check_probability()?;
    let run = |value: f64| {
        let mut steps = ReachSteps::new(mdp, inside, targets, value);
        for _ in 0..k {
            steps.advance();
        }
        steps.cur
    };
    let lower = run(frontier.lower);
    let upper = if frontier.upper == frontier.lower {
        lower.clone()
    } else {
        run(frontier.upper)
    };
    Ok(ValueInterval { lower, upper })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generators::{build_fig3, build_random, RandomMdpConfig};

    #[test]
    fn zero_steps_is_indicator() {
        let m = build_fig3(0.3).unwrap();
        let all = StateSet::full(4);
        let t = StateSet::from_indices(4, [1]);
        let v = bounded_max_reach(&m, &all, &t, 0, FrontierPolicy::UNKNOWN).unwrap();
        assert_eq!(v.lower, vec![0.0, 1.0, 0.0, 0.0]);
        assert_eq!(v.upper, v.lower);
    }

    #[test]
    fn fig3_one_step() {
        let m = build_fig3(0.3).unwrap();
        let all = StateSet::full(4);
        let t = StateSet::from_indices(4, [1]);
        let v = bounded_max_reach(&m, &all, &t, 1, FrontierPolicy::UNKNOWN).unwrap();
        assert_eq!(v.at(0).lower, 0.15);
        assert_eq!(v.at(0).upper, 0.15);
    }

    #[test]
    fn frontier_substitution() {
        let m = build_fig3(0.3).unwrap();
        let inside = StateSet::from_indices(4, [0, 2]);
        let t = StateSet::from_indices(4, [1]);
        let v = bounded_max_reach(&m, &inside, &t, 1, FrontierPolicy::UNKNOWN).unwrap();
        assert_eq!(v.at(0).lower, 0.0);
        assert!((v.at(0).upper - 0.3).abs() < 1e-15);
        assert!(bounded_max_reach(&m, &inside, &t, 1, FrontierPolicy { lower: 0.0, upper: 2.0 }).is_err());
    }

    #[test]
    fn monotone_in_steps() {
        for seed in 0..20 {
            let m = build_random(&RandomMdpConfig { num_states: 15, max_actions: 3, max_branching: 3, sink_fraction: 0.2, seed }).unwrap();
            let all = StateSet::full(15);
            let t = StateSet::from_indices(15, [(seed as usize * 7) % 15]);
            let mut steps = ReachSteps::new(&m, &all, &t, 0.0);
            let mut prev = steps.values().to_vec();
            for _ in 0..10 {
                steps.advance();
                for (a, b) in prev.iter().zip(steps.values()) {
                    assert!(b >= a);
                }
                prev = steps.values().to_vec();
            }
            assert_eq!(steps.steps(), 10);
        }
    }
}
