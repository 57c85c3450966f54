use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::Distribution;

/// Successor-selection heuristic for path sampling.
///
/// Action-based kinds first pick uniformly among the actions maximizing
/// `Σ Δ·U`, then draw a successor with probability proportional to a score
/// `f`: `Δ` for `Prob`, `U·Δ` for `Weighted`, `U` for `Difference`.
/// Graph-based kinds skip the action choice and score every successor of
/// the state: `U(s')·max_a Δ(s,a,s')` for `GraphWeighted`, `U(s')` for
/// `GraphDifference`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Heuristic {
    Prob,
    Weighted,
    Difference,
    GraphWeighted,
    GraphDifference,
}

impl Heuristic {
    pub const ALL: [Heuristic; 5] = [
        Heuristic::Prob,
        Heuristic::Weighted,
        Heuristic::Difference,
        Heuristic::GraphWeighted,
        Heuristic::GraphDifference,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Heuristic::Prob => "prob",
            Heuristic::Weighted => "weighted",
            Heuristic::Difference => "difference",
            Heuristic::GraphWeighted => "graph-weighted",
            Heuristic::GraphDifference => "graph-difference",
        }
    }

    pub fn is_graph_based(self) -> bool {
        matches!(self, Heuristic::GraphWeighted | Heuristic::GraphDifference)
    }
}

impl fmt::Display for Heuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownHeuristic(pub String);

impl fmt::Display for UnknownHeuristic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown heuristic '{}' (expected prob, weighted, difference, graph-weighted or graph-difference)",
            self.0
        )
    }
}

impl std::error::Error for UnknownHeuristic {}

impl FromStr for Heuristic {
    type Err = UnknownHeuristic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Heuristic::ALL
            .into_iter()
            .find(|h| h.name() == s)
            .ok_or_else(|| UnknownHeuristic(s.to_string()))
    }
}

/// Draws an index with probability proportional to `weights`; uniform when
/// all weights are zero. `weights` must be non-empty.
pub(crate) fn draw_weighted<R: Rng>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.random_range(0..weights.len());
    }
    let x = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = i;
            if x < acc {
                return i;
            }
        }
    }
    last_positive
}

/// One sampling step from a quotient state.
///
/// `actions` are the successor distributions of the actions available at
/// the quotient state and `value` the current bound of a successor.
/// Returns the chosen successor. `actions` must be non-empty.
pub(crate) fn choose_successor<R: Rng>(
    actions: &[&Distribution],
    heuristic: Heuristic,
    mut value: impl FnMut(usize) -> f64,
    rng: &mut R,
    scratch: &mut Vec<(usize, f64)>,
) -> usize {
    scratch.clear();
    if heuristic.is_graph_based() {
        for d in actions {
            scratch.extend(d.iter());
        }
        scratch.sort_by_key(|&(t, _)| t);
        scratch.dedup_by(|b, a| {
            if a.0 == b.0 {
                a.1 = a.1.max(b.1);
                true
            } else {
                false
            }
        });
        let weights: Vec<f64> = scratch
            .iter()
            .map(|&(t, p)| match heuristic {
                Heuristic::GraphWeighted => value(t) * p,
                _ => value(t),
            })
            .collect();
        return scratch[draw_weighted(&weights, rng)].0;
    }

    let mut best = f64::NEG_INFINITY;
    let mut maximizers: Vec<&Distribution> = Vec::new();
    for &d in actions {
        let v = d.expect(&mut value);
        if v > best {
            best = v;
            maximizers.clear();
            maximizers.push(d);
        } else if v == best {
            maximizers.push(d);
        }
    }
    let dist = if maximizers.len() == 1 {
        maximizers[0]
    } else {
        maximizers[rng.random_range(0..maximizers.len())]
    };
    if dist.entries().len() == 1 {
        return dist.entries()[0].0;
    }
    let weights: Vec<f64> = dist
        .iter()
        .map(|(t, p)| match heuristic {
            Heuristic::Prob => p,
            Heuristic::Weighted => value(t) * p,
            _ => value(t),
        })
        .collect();
    dist.entries()[draw_weighted(&weights, rng)].0
}
