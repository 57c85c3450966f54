use std::collections::VecDeque;
use std::time::Instant;

use super::{FrontierPolicy, NumericsError, ValueInterval, ORACLE_DELTA};
use crate::graph::{collapse_mecs, scc_decompose, QuotientView};
use crate::{ExplicitMdp, StateSet};

pub const DEFAULT_MAX_SWEEPS: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalConfig {
    /// Stop once the sup-norm gap between the bounds is at most this.
    pub delta: f64,
    pub max_sweeps: u64,
    /// Give up with [`NumericsError::DeadlineExceeded`] once this passes.
    pub deadline: Option<Instant>,
}

impl Default for IntervalConfig {
    fn default() -> Self {
        IntervalConfig {
            delta: ORACLE_DELTA,
            max_sweeps: DEFAULT_MAX_SWEEPS,
            deadline: None,
        }
    }
}

/// Unbounded maximal reachability by interval iteration.
///
/// With distinct frontier values one converging run is made per value; the
/// lower vector comes from the low run and the upper vector from the high
/// run. MECs of the free states (inside, non-target) are collapsed; a collapsed
/// component with no action leaving it cannot reach anything and is pinned
/// to 0 from above. Both bounds are swept Gauss-Seidel style in reverse
/// topological SCC order until `max (upper - lower) <= delta`.
pub fn max_reach_interval(
    mdp: &ExplicitMdp,
    inside: &StateSet,
    targets: &StateSet,
    frontier: FrontierPolicy,
    cfg: &IntervalConfig,
) -> Result<ValueInterval, NumericsError> {
    frontier.check_probability()?;
    if !(cfg.delta > 0.0) {
        return Err(NumericsError::InvalidArgument(format!(
            "interval iteration needs delta > 0, got {}",
            cfg.delta
        )));
    }
    if frontier.lower == frontier.upper {
        return iterate(mdp, inside, targets, frontier.lower, cfg);
    }
    let low = iterate(mdp, inside, targets, frontier.lower, cfg)?;
    let high = iterate(mdp, inside, targets, frontier.upper, cfg)?;
    Ok(ValueInterval {
        lower: low.lower,
        upper: high.upper,
    })
}

fn iterate(
    mdp: &ExplicitMdp,
    inside: &StateSet,
    targets: &StateSet,
    frontier_value: f64,
    cfg: &IntervalConfig,
) -> Result<ValueInterval, NumericsError> {
    let n = mdp.num_states();
    let mut lower = vec![0.0; n];
    let mut upper = vec![1.0; n];
    let mut free = StateSet::new(n);
    for s in 0..n {
        if !inside.contains(s) {
            lower[s] = frontier_value;
            upper[s] = frontier_value;
        } else if targets.contains(s) {
            lower[s] = 1.0;
        } else {
            free.insert(s);
        }
    }

    let mut quotient = QuotientView::identity(n);
    collapse_mecs(mdp, &free, &mut quotient, &mut upper);
    let order = sweep_order(mdp, &free);

    let mut sweeps = 0u64;
    loop {
        let mut gap = 0.0f64;
        for &s in &order {
            let mut best = 0.0f64;
            for a in mdp.actions(s) {
                let v = a.dist.expect(|t| lower[t]);
                if v > best {
                    best = v;
                }
            }
            if best > lower[s] {
                lower[s] = best;
            }

            let r = quotient.representative(s);
            let mut best = 0.0f64;
            for (q, a) in quotient.actions(mdp, s) {
                let v = mdp.dist(q, a).expect(|t| {
                    if free.contains(t) {
                        upper[quotient.representative(t)]
                    } else {
                        upper[t]
                    }
                });
                if v > best {
                    best = v;
                }
            }
            if best < upper[r] {
                upper[r] = best;
            }
        }
        for &s in &order {
            let u = upper[quotient.representative(s)];
            upper[s] = u;
            gap = gap.max(u - lower[s]);
        }
        sweeps += 1;
        if gap <= cfg.delta {
            break;
        }
        if sweeps >= cfg.max_sweeps {
            return Err(NumericsError::NonConvergence { sweeps, gap });
        }
        if sweeps.is_multiple_of(64) && cfg.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(NumericsError::DeadlineExceeded { sweeps, gap });
        }
    }
    for s in free.iter() {
        if upper[s] < lower[s] {
            upper[s] = lower[s];
        }
    }
    Ok(ValueInterval { lower, upper })
}

/// Free states in reverse topological SCC order. Inside a component,
/// states deeper in breadth-first order from the initial state come first,
/// so one sweep carries values once around a cycle entered near the root.
fn sweep_order(mdp: &ExplicitMdp, free: &StateSet) -> Vec<usize> {
    let n = mdp.num_states();
    let mut depth = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    depth[mdp.initial()] = 0;
    queue.push_back(mdp.initial());
    while let Some(s) = queue.pop_front() {
        for a in mdp.actions(s) {
            for t in a.dist.support() {
                if depth[t] == usize::MAX {
                    depth[t] = depth[s] + 1;
                    queue.push_back(t);
                }
            }
        }
    }
    let mut order = Vec::with_capacity(free.len());
    for mut comp in scc_decompose(mdp, free) {
        comp.sort_by_key(|&s| std::cmp::Reverse(depth[s]));
        order.extend(comp);
    }
    order
}
