//! Reference implementations used as test oracles. They are deliberately
//! naive and share no code with the library algorithms they check.

#![allow(dead_code)]

use std::collections::BTreeSet;

use mdpcores::model::generators::{build_random, RandomMdpConfig};
use mdpcores::ExplicitMdp;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random model with `lo..=hi` states; shape parameters drawn from `seed`.
pub fn random_model(seed: u64, lo: usize, hi: usize) -> ExplicitMdp {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    build_random(&RandomMdpConfig {
        num_states: rng.random_range(lo..=hi),
        max_actions: rng.random_range(1..=3),
        max_branching: rng.random_range(1..=3),
        sink_fraction: rng.random_range(0.0..0.3),
        seed,
    })
    .unwrap()
}

/// Random non-empty target set.
pub fn random_targets(n: usize, rng: &mut impl Rng) -> BTreeSet<usize> {
    let k = rng.random_range(1..=n.min(3));
    (0..k).map(|_| rng.random_range(0..n)).collect()
}

fn mutually_reachable(n: usize, edges: &[Vec<usize>]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for (s, row) in reach.iter_mut().enumerate() {
        let mut stack = vec![s];
        row[s] = true;
        while let Some(x) = stack.pop() {
            for &y in &edges[x] {
                if !row[y] {
                    row[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    reach
}

/// Whether `set` (with every action that stays inside it) is an end
/// component: every state keeps an action and the induced graph is
/// strongly connected.
fn is_end_component(mdp: &ExplicitMdp, set: &BTreeSet<usize>) -> bool {
    if set.is_empty() {
        return false;
    }
    let n = mdp.num_states();
    let mut edges = vec![Vec::new(); n];
    for &s in set {
        let mut kept = false;
        for a in mdp.actions(s) {
            if a.dist.support().all(|t| set.contains(&t)) {
                kept = true;
                edges[s].extend(a.dist.support());
            }
        }
        if !kept {
            return false;
        }
    }
    let first = *set.iter().next().unwrap();
    let reach = mutually_reachable(n, &edges);
    set.iter().all(|&t| reach[first][t] && reach[t][first])
}

/// Maximal end components by enumerating all state subsets (n <= ~12).
pub fn brute_force_mecs(mdp: &ExplicitMdp) -> BTreeSet<BTreeSet<usize>> {
    let n = mdp.num_states();
    assert!(n <= 14, "subset enumeration is exponential");
    let ecs: Vec<BTreeSet<usize>> = (1u32..1 << n)
        .map(|mask| (0..n).filter(|s| mask >> s & 1 == 1).collect::<BTreeSet<usize>>())
        .filter(|set| is_end_component(mdp, set))
        .collect();
    ecs.iter()
        .filter(|a| !ecs.iter().any(|b| b.len() > a.len() && a.is_subset(b)))
        .cloned()
        .collect()
}

/// Maximal end components by repeated pruning with pairwise reachability.
pub fn closure_mecs(mdp: &ExplicitMdp) -> BTreeSet<BTreeSet<usize>> {
    let n = mdp.num_states();
    let mut alive = vec![true; n];
    let mut allowed: Vec<Vec<bool>> = (0..n).map(|s| vec![true; mdp.actions(s).len()]).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            for (a, act) in mdp.actions(s).iter().enumerate() {
                if allowed[s][a] && !act.dist.support().all(|t| alive[t]) {
                    allowed[s][a] = false;
                    changed = true;
                }
            }
            if alive[s] && !allowed[s].iter().any(|&x| x) {
                alive[s] = false;
                changed = true;
            }
        }
        let mut edges = vec![Vec::new(); n];
        for s in (0..n).filter(|&s| alive[s]) {
            for (a, act) in mdp.actions(s).iter().enumerate() {
                if allowed[s][a] {
                    edges[s].extend(act.dist.support());
                }
            }
        }
        let reach = mutually_reachable(n, &edges);
        for s in (0..n).filter(|&s| alive[s]) {
            for (a, act) in mdp.actions(s).iter().enumerate() {
                if allowed[s][a] && !act.dist.support().all(|t| reach[s][t] && reach[t][s]) {
                    allowed[s][a] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            let mut out = BTreeSet::new();
            for s in (0..n).filter(|&s| alive[s]) {
                out.insert((0..n).filter(|&t| alive[t] && reach[s][t] && reach[t][s]).collect());
            }
            return out;
        }
    }
}

/// Maximal reachability probabilities of `targets` by enumerating every
/// memoryless deterministic strategy and solving its linear system.
pub fn strategy_enumeration_reach(mdp: &ExplicitMdp, targets: &BTreeSet<usize>) -> Vec<f64> {
    let n = mdp.num_states();
    let counts: Vec<usize> = (0..n).map(|s| mdp.actions(s).len()).collect();
    let mut choice = vec![0usize; n];
    let mut best = vec![0.0f64; n];
    loop {
        let values = solve_chain(mdp, targets, &choice);
        for s in 0..n {
            best[s] = best[s].max(values[s]);
        }
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            choice[i] += 1;
            if choice[i] < counts[i] {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// Maximal reachability probabilities by policy iteration: solve the chain
/// of the current strategy exactly, switch only on strict improvement. The
/// values of actual strategies never exceed the optimum, and a strategy
/// whose values satisfy the Bellman equation is optimal, so the loop ends
/// at the optimum.
pub fn policy_iteration_reach(mdp: &ExplicitMdp, targets: &BTreeSet<usize>) -> Vec<f64> {
    let n = mdp.num_states();
    let mut choice = vec![0usize; n];
    loop {
        let values = solve_chain(mdp, targets, &choice);
        let mut changed = false;
        for s in (0..n).filter(|s| !targets.contains(s)) {
            let q = |a: usize| mdp.dist(s, a).iter().map(|(t, p)| p * values[t]).sum::<f64>();
            let current = q(choice[s]);
            let (best, val) = (0..mdp.actions(s).len())
                .map(|a| (a, q(a)))
                .fold((choice[s], current), |acc, x| if x.1 > acc.1 { x } else { acc });
            if val > current + 1e-13 {
                choice[s] = best;
                changed = true;
            }
        }
        if !changed {
            return values;
        }
    }
}

fn solve_chain(mdp: &ExplicitMdp, targets: &BTreeSet<usize>, choice: &[usize]) -> Vec<f64> {
    let n = mdp.num_states();
    let succ: Vec<Vec<(usize, f64)>> = (0..n).map(|s| mdp.dist(s, choice[s]).iter().collect()).collect();
    // states that reach a target with positive probability
    let mut pos = vec![false; n];
    for &t in targets {
        pos[t] = true;
    }
    loop {
        let mut changed = false;
        for s in 0..n {
            if !pos[s] && succ[s].iter().any(|&(t, _)| pos[t]) {
                pos[s] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut a = DMatrix::<f64>::identity(n, n);
    let mut b = DVector::<f64>::zeros(n);
    for s in 0..n {
        if targets.contains(&s) {
            b[s] = 1.0;
        } else if pos[s] {
            for &(t, p) in &succ[s] {
                a[(s, t)] -= p;
            }
        }
    }
    let x = a.lu().solve(&b).expect("system is regular after removing prob-0 states");
    x.iter().copied().collect()
}

/// `table[r][s]`: maximal probability from `s` of reaching `targets` within
/// `r` steps, states outside `inside` counting as `frontier`. Filled over
/// the product of states and step counters.
pub fn product_bounded_reach(
    mdp: &ExplicitMdp,
    inside: &BTreeSet<usize>,
    targets: &BTreeSet<usize>,
    frontier: f64,
    k: usize,
) -> Vec<Vec<f64>> {
    let n = mdp.num_states();
    let pinned = |s: usize| -> Option<f64> {
        if !inside.contains(&s) {
            Some(frontier)
        } else if targets.contains(&s) {
            Some(1.0)
        } else {
            None
        }
    };
    let mut table = vec![vec![0.0; n]; k + 1];
    for s in 0..n {
        table[0][s] = pinned(s).unwrap_or(0.0);
    }
    for r in 1..=k {
        for s in 0..n {
            table[r][s] = match pinned(s) {
                Some(v) => v,
                None => mdp
                    .actions(s)
                    .iter()
                    .map(|a| a.dist.iter().map(|(t, p)| p * table[r - 1][t]).sum::<f64>())
                    .fold(0.0, f64::max),
            };
        }
    }
    table
}

/// Maximal expected total reward over `r` steps for every `r <= k`, with
/// state rewards collected on entering each step.
pub fn product_total_reward(mdp: &ExplicitMdp, rewards: &[f64], k: usize) -> Vec<Vec<f64>> {
    let n = mdp.num_states();
    let mut table = vec![vec![0.0; n]; k + 1];
    for r in 1..=k {
        for s in 0..n {
            let best = mdp
                .actions(s)
                .iter()
                .map(|a| a.dist.iter().map(|(t, p)| p * table[r - 1][t]).sum::<f64>())
                .fold(f64::NEG_INFINITY, f64::max);
            table[r][s] = rewards[s] + best;
        }
    }
    table
}
