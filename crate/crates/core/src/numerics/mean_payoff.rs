use super::{FrontierPolicy, Interval, NumericsError};
use crate::{ExplicitMdp, StateSet};

/// Step-indexed maximal total reward.
///
/// `t_0 = 0`; for inside states `t_{j+1}(s) = r(s) + max_a Σ Δ(s,a,s')·t_j(s')`,
/// while a state outside the view accrues `j · frontier_reward` after `j`
/// steps.
pub struct RewardSteps<'a> {
    mdp: &'a ExplicitMdp,
    rewards: &'a [f64],
    inside: Vec<usize>,
    outside: Vec<usize>,
    frontier_reward: f64,
    cur: Vec<f64>,
    next: Vec<f64>,
    steps: usize,
}

impl<'a> RewardSteps<'a> {
    pub fn new(
        mdp: &'a ExplicitMdp,
        rewards: &'a [f64],
        inside: &StateSet,
        frontier_reward: f64,
    ) -> Self {
        let n = mdp.num_states();
        let (ins, outs) = (0..n).partition(|&s| inside.contains(s));
        RewardSteps {
            mdp,
            rewards,
            inside: ins,
            outside: outs,
            frontier_reward,
            cur: vec![0.0; n],
            next: vec![0.0; n],
            steps: 0,
        }
    }

    pub fn advance(&mut self) {
        let cur = &self.cur;
        for &s in &self.inside {
            let mut best = f64::NEG_INFINITY;
            for a in self.mdp.actions(s) {
                let v = a.dist.expect(|t| cur[t]);
                if v > best {
                    best = v;
                }
            }
            self.next[s] = self.rewards[s] + best;
        }
        self.steps += 1;
        let accrued = self.steps as f64 * self.frontier_reward;
        for &s in &self.outside {
            self.next[s] = accrued;
        }
        std::mem::swap(&mut self.cur, &mut self.next);
    }

    pub fn total(&self, s: usize) -> f64 {
        self.cur[s]
    }

    /// Average reward per step from `s`; 0 before the first step.
    pub fn average(&self, s: usize) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.cur[s] / self.steps as f64
        }
    }
}

/// Bounds on the maximal `j`-step average reward from the initial state,
/// for `j = 1..=k`. Frontier states earn `frontier.lower` per step in the
/// lower run and `frontier.upper` in the upper run.
pub fn bounded_mean_payoff_bounds(
    mdp: &ExplicitMdp,
    inside: &StateSet,
    k: usize,
    frontier: FrontierPolicy,
) -> Result<Vec<Interval>, NumericsError> {
    let rewards = mdp.rewards().ok_or(NumericsError::MissingRewards)?;
    if !(frontier.lower <= frontier.upper) {
        return Err(NumericsError::InvalidArgument(format!(
            "reward bounds need r_min <= r_max, got [{}, {}]",
            frontier.lower, frontier.upper
        )));
    }
    let init = mdp.initial();
    let mut lo = RewardSteps::new(mdp, rewards, inside, frontier.lower);
    let mut hi = RewardSteps::new(mdp, rewards, inside, frontier.upper);
    let mut out = Vec::with_capacity(k);
    for _ in 0..k {
        lo.advance();
        hi.advance();
        out.push(Interval {
            lower: lo.average(init),
            upper: hi.average(init),
        });
    }
    Ok(out)
}
