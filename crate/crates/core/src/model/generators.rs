//! Deterministic model families.

use std::borrow::Cow;
use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Action, Distribution, ExplicitMdp, Model, ModelError};
use crate::StateSet;

/// Fixed state indices of the airplane family.
pub mod airplane {
    pub const ORIGIN: usize = 0;
    pub const STARTING: usize = 1;
    pub const LANDING: usize = 2;
    pub const DESTINATION: usize = 3;
    pub const BIT_FLIP: usize = 4;
    pub const CRASH: usize = 5;
    /// First cell of the recovery grid.
    pub const RECOVERY_START: usize = 6;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirplaneConfig {
    pub size: usize,
    pub return_trip: bool,
    pub tau: f64,
}

impl AirplaneConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.size == 0 {
            return Err(ModelError::InvalidParameter("airplane size must be >= 1".into()));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(ModelError::InvalidParameter(format!(
                "airplane tau must be in (0, 1), got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn recovery_states(&self) -> Range<usize> {
        airplane::RECOVERY_START..airplane::RECOVERY_START + self.size * self.size
    }

    /// Empty unless `return_trip` is set.
    pub fn return_states(&self) -> Range<usize> {
        let start = self.recovery_states().end;
        start..start + if self.return_trip { self.size } else { 0 }
    }

    pub fn num_states(&self) -> usize {
        self.return_states().end
    }
}

/// Largest airplane model [`build_airplane`] will materialize.
pub const MAX_EXPLICIT_AIRPLANE_STATES: usize = 20_000_000;

/// Flight model: a take-off that rarely suffers a bit flip, after which a
/// `size` x `size` recovery grid is traversed before landing or crashing.
///
/// Grid cell `(i, j)` offers `row` (uniform over the right and diagonal
/// neighbours) and `col` (uniform over the lower and diagonal neighbours);
/// at the border the missing neighbours fall back to the remaining one. The
/// last cell exits to landing and crash with probability 1/2 each. Every
/// grid move strictly increases `i + j`, so the grid is acyclic.
///
/// Actions are generated on demand, so the model costs no memory beyond
/// its configuration regardless of `size`.
#[derive(Debug, Clone)]
pub struct AirplaneModel {
    cfg: AirplaneConfig,
    fly: Distribution,
    exit: Distribution,
}

impl AirplaneModel {
    pub fn new(cfg: &AirplaneConfig) -> Result<Self, ModelError> {
        use airplane::*;
        cfg.validate()?;
        Ok(AirplaneModel {
            cfg: *cfg,
            fly: Distribution::new(vec![(LANDING, 1.0 - cfg.tau), (BIT_FLIP, cfg.tau)])?,
            exit: Distribution::new(vec![(LANDING, 0.5), (CRASH, 0.5)])?,
        })
    }

    pub fn config(&self) -> &AirplaneConfig {
        &self.cfg
    }

    fn generate(&self, s: usize) -> Vec<Action> {
        use airplane::*;
        let cfg = &self.cfg;
        let size = cfg.size;
        let cell = |i: usize, j: usize| RECOVERY_START + i * size + j;
        match s {
            ORIGIN => vec![Action::new("start", Distribution::dirac(STARTING))],
            STARTING => vec![
                Action::new("fly", self.fly.clone()),
                Action::new("crash plane", Distribution::dirac(CRASH)),
            ],
            LANDING => vec![
                Action::new("land", Distribution::dirac(DESTINATION)),
                Action::new("crash plane", Distribution::dirac(CRASH)),
            ],
            DESTINATION if cfg.return_trip => vec![Action::new(
                "return",
                Distribution::dirac(cfg.return_states().start),
            )],
            DESTINATION => vec![Action::new("stay", Distribution::dirac(DESTINATION))],
            BIT_FLIP => vec![Action::new("recover", Distribution::dirac(cell(0, 0)))],
            CRASH => vec![Action::new("stay", Distribution::dirac(CRASH))],
            _ if cfg.recovery_states().contains(&s) => {
                let (i, j) = ((s - RECOVERY_START) / size, (s - RECOVERY_START) % size);
                if i + 1 == size && j + 1 == size {
                    return vec![Action::new("exit", self.exit.clone())];
                }
                let right = (j + 1 < size).then(|| cell(i, j + 1));
                let down = (i + 1 < size).then(|| cell(i + 1, j));
                let diag = (i + 1 < size && j + 1 < size).then(|| cell(i + 1, j + 1));
                let pick = |first: Option<usize>, fallback: Option<usize>| -> Distribution {
                    let v: Vec<usize> = [first, diag].into_iter().flatten().collect();
                    let v = if v.is_empty() { fallback.into_iter().collect() } else { v };
                    Distribution::uniform(&v).expect("grid neighbours are distinct")
                };
                vec![
                    Action::new("row", pick(right, down)),
                    Action::new("col", pick(down, right)),
                ]
            }
            _ => {
                let ret = cfg.return_states();
                assert!(ret.contains(&s), "state {s} out of range");
                let next = if s + 1 == ret.end { ORIGIN } else { s + 1 };
                vec![Action::new("return", Distribution::dirac(next))]
            }
        }
    }
}

impl Model for AirplaneModel {
    fn num_states(&self) -> usize {
        self.cfg.num_states()
    }

    fn initial(&self) -> usize {
        airplane::ORIGIN
    }

    fn state_actions(&self, s: usize) -> Cow<'_, [Action]> {
        Cow::Owned(self.generate(s))
    }
}

/// Materializes the airplane model. Fails above
/// [`MAX_EXPLICIT_AIRPLANE_STATES`]; use [`AirplaneModel`] for larger sizes.
pub fn build_airplane(cfg: &AirplaneConfig) -> Result<ExplicitMdp, ModelError> {
    let model = AirplaneModel::new(cfg)?;
    let n = cfg.num_states();
    if n > MAX_EXPLICIT_AIRPLANE_STATES {
        return Err(ModelError::InvalidParameter(format!(
            "airplane with {n} states is too large to build explicitly"
        )));
    }
    let actions = (0..n).map(|s| model.generate(s)).collect();
    ExplicitMdp::new(airplane::ORIGIN, actions, None)
}

/// A 0/1-knapsack instance: find items with total value `> threshold` and
/// total weight `< weight_limit`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnapsackInstance {
    pub values: Vec<u64>,
    pub weights: Vec<u64>,
    pub threshold: u64,
    pub weight_limit: u64,
}

impl KnapsackInstance {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.values.is_empty() || self.values.len() != self.weights.len() {
            return Err(ModelError::InvalidParameter(
                "knapsack needs n >= 1 items with matching values and weights".into(),
            ));
        }
        if self.values.iter().chain(&self.weights).any(|&x| x == 0) {
            return Err(ModelError::InvalidParameter(
                "knapsack values and weights must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn total_value(&self) -> u64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct KnapsackItem {
    pub value: u64,
    pub weight: u64,
    /// States `s_{i,1} .. s_{i,w_i}`.
    pub chain: Range<usize>,
}

#[derive(Debug, Clone)]
pub struct KnapsackMdp {
    pub mdp: ExplicitMdp,
    /// Core-size budget `w + 1`.
    pub k: usize,
    /// Scaling constant `eps / (V - v)`.
    pub m: f64,
    /// Items as encoded, including the padding item if one was added.
    pub items: Vec<KnapsackItem>,
    /// Whether a padding item (value `2v`, weight `w`) was appended to
    /// enforce `v <= V/2`.
    pub padded: bool,
}

impl KnapsackMdp {
    pub const INITIAL: usize = 0;
    pub const SINK: usize = 1;

    /// `{s0, s-}` plus the full chains of the chosen items.
    pub fn canonical_core(&self, chosen: &[usize]) -> StateSet {
        let mut set = StateSet::from_indices(self.mdp.num_states(), [Self::INITIAL, Self::SINK]);
        for &i in chosen {
            for s in self.items[i].chain.clone() {
                set.insert(s);
            }
        }
        set
    }

    /// Exit probability of the canonical core of `chosen`:
    /// `m * sum of values of the items not chosen`.
    pub fn closed_form_exit(&self, chosen: &[usize]) -> f64 {
        let rest: u64 = (0..self.items.len())
            .filter(|i| !chosen.contains(i))
            .map(|i| self.items[i].value)
            .sum();
        self.m * rest as f64
    }
}

/// Reduction MDP from knapsack to bounded-size cores.
///
/// From `s0` a single action moves to the head of item `i`'s chain with
/// probability `m * v_i` and to the sink `s-` with the remaining mass;
/// chains are deterministic and end in a self-loop.
pub fn build_knapsack_mdp(inst: &KnapsackInstance, epsilon: f64) -> Result<KnapsackMdp, ModelError> {
    inst.validate()?;
    if !(epsilon > 0.0 && epsilon <= 1.0 / 3.0) {
        return Err(ModelError::InvalidParameter(format!(
            "knapsack reduction needs 0 < epsilon <= 1/3, got {epsilon}"
        )));
    }
    let mut values = inst.values.clone();
    let mut weights = inst.weights.clone();
    let v = inst.threshold;
    let w = inst.weight_limit;
    let padded = 2 * v > inst.total_value();
    if padded {
        values.push(2 * v);
        weights.push(w.max(1));
    }
    let total: u64 = values.iter().sum();
    let m = epsilon / (total - v) as f64;
    let head_mass = m * total as f64;
    if head_mass >= 1.0 {
        return Err(ModelError::InvalidParameter(format!(
            "infeasible reduction: m * sum(v_i) = {head_mass} >= 1"
        )));
    }

    let mut items = Vec::with_capacity(values.len());
    let mut next = 2usize;
    for (&value, &weight) in values.iter().zip(&weights) {
        let chain = next..next + weight as usize;
        next = chain.end;
        items.push(KnapsackItem { value, weight, chain });
    }

    let mut entries: Vec<(usize, f64)> = items
        .iter()
        .map(|it| (it.chain.start, m * it.value as f64))
        .collect();
    entries.push((KnapsackMdp::SINK, 1.0 - head_mass));
    let mut actions = vec![
        vec![Action::new("pick", Distribution::new(entries)?)],
        vec![Action::new("stay", Distribution::dirac(KnapsackMdp::SINK))],
    ];
    for it in &items {
        for s in it.chain.clone() {
            let to = if s + 1 == it.chain.end { s } else { s + 1 };
            actions.push(vec![Action::unlabeled(Distribution::dirac(to))]);
        }
    }
    Ok(KnapsackMdp {
        mdp: ExplicitMdp::new(KnapsackMdp::INITIAL, actions, None)?,
        k: w as usize + 1,
        m,
        items,
        padded,
    })
}

/// Four states: `s0` branches to `s1`, `s2`, `s3` with probabilities
/// `eps/2`, `1 - eps`, `eps/2`; the three targets are self-loop sinks.
pub fn build_fig3(epsilon: f64) -> Result<ExplicitMdp, ModelError> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(ModelError::InvalidParameter(format!(
            "fig3 needs 0 < epsilon < 1/2, got {epsilon}"
        )));
    }
    let branch = Distribution::new(vec![
        (1, epsilon / 2.0),
        (2, 1.0 - epsilon),
        (3, epsilon / 2.0),
    ])?;
    let mut actions = vec![vec![Action::new("go", branch)]];
    for s in 1..4 {
        actions.push(vec![Action::new("stay", Distribution::dirac(s))]);
    }
    ExplicitMdp::new(0, actions, None)
}

/// `s0` has action `a` (0.8 to `s1`, 0.2 to `s2`) and `b` (0.3 to `s3`,
/// 0.7 into a three-state chain `u1 -> u2 -> u3 -> s1`). `s1`, `s2`, `s3`
/// are self-loop sinks.
pub fn build_fig2() -> ExplicitMdp {
    let d = |e: Vec<(usize, f64)>| Distribution::new(e).expect("static distribution");
    let actions = vec![
        vec![
            Action::new("a", d(vec![(1, 0.8), (2, 0.2)])),
            Action::new("b", d(vec![(3, 0.3), (4, 0.7)])),
        ],
        vec![Action::unlabeled(Distribution::dirac(1))],
        vec![Action::unlabeled(Distribution::dirac(2))],
        vec![Action::unlabeled(Distribution::dirac(3))],
        vec![Action::unlabeled(Distribution::dirac(5))],
        vec![Action::unlabeled(Distribution::dirac(6))],
        vec![Action::unlabeled(Distribution::dirac(1))],
    ];
    ExplicitMdp::new(0, actions, None).expect("static model")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomMdpConfig {
    pub num_states: usize,
    pub max_actions: usize,
    pub max_branching: usize,
    pub sink_fraction: f64,
    pub seed: u64,
}

/// Random model, reachable from state 0.
///
/// The last `round(sink_fraction * n)` states (never the initial one) are
/// self-loop sinks. Every other state gets `1..=max_actions` actions with
/// `1..=max_branching` random targets; a random spanning tree rooted at 0
/// is threaded through the actions so that all states are reachable.
pub fn build_random(cfg: &RandomMdpConfig) -> Result<ExplicitMdp, ModelError> {
    let n = cfg.num_states;
    if n == 0 {
        return Err(ModelError::InvalidParameter("num_states must be >= 1".into()));
    }
    if !(0.0..=1.0).contains(&cfg.sink_fraction) {
        return Err(ModelError::InvalidParameter("sink_fraction must be in [0, 1]".into()));
    }
    let max_actions = cfg.max_actions.max(1);
    let max_branching = cfg.max_branching.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sinks = ((cfg.sink_fraction * n as f64).round() as usize).min(n - 1);
    let active = n - sinks;

    let mut supports: Vec<Vec<Vec<usize>>> = (0..active)
        .map(|_| {
            let k = rng.random_range(1..=max_actions);
            (0..k)
                .map(|_| {
                    let b = rng.random_range(1..=max_branching.min(n));
                    let mut t: Vec<usize> = (0..b).map(|_| rng.random_range(0..n)).collect();
                    t.sort_unstable();
                    t.dedup();
                    t
                })
                .collect()
        })
        .collect();
    for s in 1..n {
        let parent = rng.random_range(0..s.min(active));
        let acts = &mut supports[parent];
        let a = rng.random_range(0..acts.len());
        if let Err(pos) = acts[a].binary_search(&s) {
            acts[a].insert(pos, s);
        }
    }

    let mut actions = Vec::with_capacity(n);
    for support in supports {
        let mut acts = Vec::with_capacity(support.len());
        for targets in support {
            let weights: Vec<f64> = targets.iter().map(|_| rng.random_range(0.05..1.0)).collect();
            let total: f64 = weights.iter().sum();
            let entries = targets
                .into_iter()
                .zip(weights)
                .map(|(t, w)| (t, w / total))
                .collect();
            acts.push(Action::unlabeled(Distribution::new(entries)?));
        }
        actions.push(acts);
    }
    for s in active..n {
        actions.push(vec![Action::unlabeled(Distribution::dirac(s))]);
    }
    ExplicitMdp::new(0, actions, None)
}

/// Uniform rewards in `[lo, hi)` for every state, seeded.
pub fn random_rewards(num_states: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_5eed);
    (0..num_states).map(|_| rng.random_range(lo..hi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{parse_model, serialize_model};

    fn reachable(mdp: &ExplicitMdp) -> StateSet {
        let mut seen = StateSet::new(mdp.num_states());
        let mut stack = vec![mdp.initial()];
        seen.insert(mdp.initial());
        while let Some(s) = stack.pop() {
            for t in mdp.successors(s) {
                if seen.insert(t) {
                    stack.push(t);
                }
            }
        }
        seen
    }

    #[test]
    fn airplane_state_counts() {
        let cfg = AirplaneConfig { size: 100, return_trip: false, tau: 1e-10 };
        let m = build_airplane(&cfg).unwrap();
        assert_eq!(m.num_states(), 10_006);
        assert_eq!(reachable(&m).len(), 10_006);

        let tiny = build_airplane(&AirplaneConfig { size: 1, return_trip: false, tau: 1e-10 }).unwrap();
        assert_eq!(tiny.num_states(), 7);
        assert_eq!(tiny.dist(airplane::RECOVERY_START, 0).entries(), &[(airplane::LANDING, 0.5), (airplane::CRASH, 0.5)]);

        let ret = AirplaneConfig { size: 100, return_trip: true, tau: 1e-10 };
        let m = build_airplane(&ret).unwrap();
        assert_eq!(m.num_states(), 10_106);
        assert_eq!(m.dist(airplane::DESTINATION, 0).entries(), &[(ret.return_states().start, 1.0)]);
        assert_eq!(m.dist(ret.return_states().end - 1, 0).entries(), &[(airplane::ORIGIN, 1.0)]);
    }

    #[test]
    fn lazy_airplane_matches_explicit() {
        for return_trip in [false, true] {
            let cfg = AirplaneConfig { size: 6, return_trip, tau: 0.01 };
            let lazy = AirplaneModel::new(&cfg).unwrap();
            let explicit = build_airplane(&cfg).unwrap();
            assert_eq!(Model::num_states(&lazy), explicit.num_states());
            for s in 0..explicit.num_states() {
                assert_eq!(&*lazy.state_actions(s), explicit.actions(s));
            }
        }
        let huge = AirplaneConfig { size: 10_000, return_trip: false, tau: 1e-10 };
        assert!(build_airplane(&huge).is_err());
        let lazy = AirplaneModel::new(&huge).unwrap();
        assert_eq!(Model::num_states(&lazy), 6 + 100_000_000);
        assert_eq!(lazy.state_actions(6 + 100_000_000 - 1)[0].dist.support().collect::<Vec<_>>(), vec![2, 5]);
    }

    #[test]
    fn airplane_grid_moves_forward() {
        let cfg = AirplaneConfig { size: 5, return_trip: false, tau: 0.1 };
        let m = build_airplane(&cfg).unwrap();
        for s in cfg.recovery_states() {
            for a in m.actions(s) {
                for t in a.dist.support() {
                    assert!(t > s || t == airplane::LANDING || t == airplane::CRASH);
                }
            }
        }
        assert!(build_airplane(&AirplaneConfig { size: 0, ..cfg }).is_err());
        assert!(build_airplane(&AirplaneConfig { tau: 1.0, ..cfg }).is_err());
    }

    #[test]
    fn knapsack_examples() {
        let single = KnapsackInstance { values: vec![1], weights: vec![1], threshold: 0, weight_limit: 0 };
        let k = build_knapsack_mdp(&single, 1.0 / 3.0).unwrap();
        assert!(!k.padded);
        assert!((k.m - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(k.k, 1);
        let d = k.mdp.dist(0, 0);
        assert!((d.prob(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((d.prob(KnapsackMdp::SINK) - 2.0 / 3.0).abs() < 1e-15);

        let two = KnapsackInstance { values: vec![2, 3], weights: vec![1, 2], threshold: 2, weight_limit: 2 };
        let k = build_knapsack_mdp(&two, 0.3).unwrap();
        assert!((k.m - 0.1).abs() < 1e-15);
        assert_eq!(k.k, 3);
        assert_eq!(k.mdp.num_states(), 2 + 1 + 2);
        let d = k.mdp.dist(0, 0);
        assert!((d.prob(k.items[0].chain.start) - 0.2).abs() < 1e-15);
        assert!((d.prob(k.items[1].chain.start) - 0.3).abs() < 1e-15);
        assert!((d.prob(KnapsackMdp::SINK) - 0.5).abs() < 1e-15);
        assert_eq!(k.canonical_core(&[1]).to_vec(), vec![0, 1, 3, 4]);
        assert!((k.closed_form_exit(&[1]) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn knapsack_padding_and_errors() {
        let inst = KnapsackInstance { values: vec![1, 1], weights: vec![1, 1], threshold: 2, weight_limit: 2 };
        let k = build_knapsack_mdp(&inst, 0.2).unwrap();
        assert!(k.padded);
        assert_eq!(k.items.len(), 3);
        assert_eq!(k.items[2].value, 4);
        assert!(build_knapsack_mdp(&inst, 0.4).is_err());
        assert!(build_knapsack_mdp(&inst, 0.0).is_err());
        let bad = KnapsackInstance { values: vec![0], weights: vec![1], threshold: 0, weight_limit: 1 };
        assert!(build_knapsack_mdp(&bad, 0.2).is_err());
    }

    #[test]
    fn knapsack_sink_mass_at_least_epsilon() {
        for eps in [0.05, 0.1, 0.2, 1.0 / 3.0] {
            let inst = KnapsackInstance { values: vec![5, 1, 7], weights: vec![2, 3, 1], threshold: 6, weight_limit: 4 };
            let k = build_knapsack_mdp(&inst, eps).unwrap();
            assert!(k.mdp.dist(0, 0).prob(KnapsackMdp::SINK) >= eps - 1e-15);
        }
    }

    #[test]
    fn fig3_probabilities() {
        let m = build_fig3(0.3).unwrap();
        let d = m.dist(0, 0);
        assert_eq!((d.prob(1), d.prob(3)), (0.15, 0.15));
        assert!((d.prob(2) - 0.7).abs() < 1e-15);
        let m = build_fig3(0.4).unwrap();
        let d = m.dist(0, 0);
        assert_eq!((d.prob(1), d.prob(3)), (0.2, 0.2));
        assert!((d.prob(2) - 0.6).abs() < 1e-15);
        for eps in [1e-9, 0.1, 0.25, 0.49] {
            let m = build_fig3(eps).unwrap();
            let sum: f64 = m.dist(0, 0).iter().map(|(_, p)| p).sum();
            assert!((sum - 1.0).abs() <= 1e-15);
        }
        assert!(build_fig3(0.5).is_err());
        assert!(build_fig3(0.0).is_err());
    }

    #[test]
    fn random_minimal_and_deterministic() {
        let one = build_random(&RandomMdpConfig { num_states: 1, max_actions: 1, max_branching: 1, sink_fraction: 0.0, seed: 9 }).unwrap();
        assert_eq!(one.num_states(), 1);
        assert_eq!(one.dist(0, 0).entries(), &[(0, 1.0)]);

        let cfg = RandomMdpConfig { num_states: 25, max_actions: 3, max_branching: 4, sink_fraction: 0.2, seed: 42 };
        let a = build_random(&cfg).unwrap();
        let b = build_random(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_states(), 25);
        assert_eq!(reachable(&a).len(), 25);
        for s in 20..25 {
            assert_eq!(a.actions(s).len(), 1);
            assert_eq!(a.dist(s, 0).entries(), &[(s, 1.0)]);
        }
        let text = serialize_model(&a);
        assert_eq!(parse_model(&text).unwrap(), a);
        assert_ne!(a, build_random(&RandomMdpConfig { seed: 43, ..cfg }).unwrap());
    }
}
