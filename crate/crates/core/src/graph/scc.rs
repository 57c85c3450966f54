use crate::{ExplicitMdp, StateSet};

const UNVISITED: usize = usize::MAX;

struct Frame {
    node: usize,
    next: usize,
    end: usize,
    start: usize,
}

/// Iterative Tarjan over nodes `0..num_nodes`.
///
/// Only nodes reachable from `roots` through `successors` are visited;
/// `successors(v, buf)` appends the successors of `v` to `buf`. Components
/// are returned in reverse topological order of the condensation (sink
/// components first), each sorted ascending.
pub(crate) fn tarjan<R, F>(num_nodes: usize, roots: R, mut successors: F) -> Vec<Vec<usize>>
where
    R: IntoIterator<Item = usize>,
    F: FnMut(usize, &mut Vec<usize>),
{
    let mut index = vec![UNVISITED; num_nodes];
    let mut low = vec![0usize; num_nodes];
    let mut on_stack = vec![false; num_nodes];
    let mut stack: Vec<usize> = Vec::new();
    let mut frames: Vec<Frame> = Vec::new();
    let mut buf: Vec<usize> = Vec::new();
    let mut counter = 0usize;
    let mut components = Vec::new();

    let mut enter = |v: usize,
                     frames: &mut Vec<Frame>,
                     buf: &mut Vec<usize>,
                     stack: &mut Vec<usize>,
                     index: &mut [usize],
                     low: &mut [usize],
                     on_stack: &mut [bool]| {
        index[v] = counter;
        low[v] = counter;
        counter += 1;
        stack.push(v);
        on_stack[v] = true;
        let start = buf.len();
        successors(v, buf);
        frames.push(Frame {
            node: v,
            next: start,
            end: buf.len(),
            start,
        });
    };

    for root in roots {
        if index[root] != UNVISITED {
            continue;
        }
        enter(
            root,
            &mut frames,
            &mut buf,
            &mut stack,
            &mut index,
            &mut low,
            &mut on_stack,
        );
        while let Some(top) = frames.last_mut() {
            let v = top.node;
            if top.next < top.end {
                let w = buf[top.next];
                top.next += 1;
                if index[w] == UNVISITED {
                    enter(
                        w,
                        &mut frames,
                        &mut buf,
                        &mut stack,
                        &mut index,
                        &mut low,
                        &mut on_stack,
                    );
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            let start = top.start;
            frames.pop();
            buf.truncate(start);
            if low[v] == index[v] {
                let mut comp = Vec::new();
                loop {
                    let w = stack.pop().expect("tarjan stack underflow");
                    on_stack[w] = false;
                    comp.push(w);
                    if w == v {
                        break;
                    }
                }
                comp.sort_unstable();
                components.push(comp);
            }
            if let Some(parent) = frames.last() {
                let p = parent.node;
                low[p] = low[p].min(low[v]);
            }
        }
    }
    components
}

/// SCCs of the sub-model induced by `view`, using every action. Edges
/// leaving the view are ignored. Reverse topological order.
pub fn scc_decompose(mdp: &ExplicitMdp, view: &StateSet) -> Vec<Vec<usize>> {
    tarjan(mdp.num_states(), view.iter(), |s, buf| {
        for a in mdp.actions(s) {
            buf.extend(a.dist.support().filter(|&t| view.contains(t)));
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generators::build_fig3;
    use crate::model::{Action, Distribution};

    fn chain(edges: &[&[usize]]) -> ExplicitMdp {
        let actions = edges
            .iter()
            .map(|ts| vec![Action::unlabeled(Distribution::uniform(ts).unwrap())])
            .collect();
        ExplicitMdp::new(0, actions, None).unwrap()
    }

    #[test]
    fn single_self_loop() {
        let m = chain(&[&[0]]);
        assert_eq!(scc_decompose(&m, &StateSet::full(1)), vec![vec![0]]);
    }

    #[test]
    fn three_cycle() {
        let m = chain(&[&[1], &[2], &[0]]);
        assert_eq!(scc_decompose(&m, &StateSet::full(3)), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn fig3_reverse_topological() {
        let m = build_fig3(0.3).unwrap();
        let sccs = scc_decompose(&m, &StateSet::full(4));
        assert_eq!(sccs, vec![vec![1], vec![2], vec![3], vec![0]]);
    }

    #[test]
    fn view_cuts_edges() {
        let m = chain(&[&[1], &[2], &[0]]);
        let view = StateSet::from_indices(3, [0, 1]);
        assert_eq!(scc_decompose(&m, &view), vec![vec![1], vec![0]]);
    }

    #[test]
    fn deep_chain_does_not_overflow() {
        let n = 200_000;
        let edges: Vec<Vec<usize>> = (0..n).map(|i| vec![(i + 1) % n]).collect();
        let refs: Vec<&[usize]> = edges.iter().map(|v| v.as_slice()).collect();
        let m = chain(&refs);
        let sccs = scc_decompose(&m, &StateSet::full(n));
        assert_eq!(sccs.len(), 1);
        assert_eq!(sccs[0].len(), n);
    }

    #[test]
    fn order_is_reverse_topological() {
        // 0 -> {1,2}, 1 <-> 3, 2 -> 4, 3 -> 4, 4 self
        let m = chain(&[&[1, 2], &[3], &[4], &[1, 4], &[4]]);
        let sccs = scc_decompose(&m, &StateSet::full(5));
        let pos = |s: usize| sccs.iter().position(|c| c.contains(&s)).unwrap();
        for s in 0..5 {
            for t in m.successors(s) {
                assert!(pos(t) <= pos(s), "edge {s}->{t} violates order {sccs:?}");
            }
        }
        assert!(sccs.contains(&vec![1, 3]));
    }
}
