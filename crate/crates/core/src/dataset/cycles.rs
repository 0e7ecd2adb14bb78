//! Elementary cycle enumeration (Johnson's algorithm) and opt-in cycle breaking.

use std::collections::{BTreeSet, HashMap, HashSet};

use petgraph::algo::tarjan_scc;
use petgraph::graphmap::DiGraphMap;

use super::DirectedGraph;

type SubGraph = HashMap<usize, Vec<usize>>;

fn strongly_connected(sub: &SubGraph) -> Vec<Vec<usize>> {
    let mut g = DiGraphMap::<usize, ()>::new();
    let mut nodes: Vec<_> = sub.keys().copied().collect();
    nodes.sort_unstable();
    for &n in &nodes {
        g.add_node(n);
    }
    for &n in &nodes {
        for &m in &sub[&n] {
            g.add_edge(n, m, ());
        }
    }
    tarjan_scc(&g)
        .into_iter()
        .filter(|c| c.len() > 1 || c.iter().any(|n| sub[n].contains(n)))
        .collect()
}

fn induced(graph: &DirectedGraph, nodes: &[usize]) -> SubGraph {
    let keep: HashSet<usize> = nodes.iter().copied().collect();
    nodes
        .iter()
        .map(|&n| {
            let nbrs = graph
                .out_neighbors(n)
                .iter()
                .copied()
                .filter(|m| keep.contains(m))
                .collect();
            (n, nbrs)
        })
        .collect()
}

fn unblock(node: usize, blocked: &mut HashSet<usize>, b: &mut HashMap<usize, HashSet<usize>>) {
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        if blocked.remove(&n) {
            if let Some(set) = b.get_mut(&n) {
                stack.extend(set.drain());
            }
        }
    }
}

/// Every elementary cycle of the graph, each rotated to start at its smallest
/// node id, in sorted order. Empty iff the graph is a DAG.
pub fn detect_cycles(graph: &DirectedGraph) -> Vec<Vec<usize>> {
    let all: Vec<usize> = (0..graph.node_count()).collect();
    let mut components: Vec<Vec<usize>> = strongly_connected(&induced(graph, &all));
    let mut cycles = Vec::new();

    while let Some(mut component) = components.pop() {
        component.sort_unstable();
        let sub = induced(graph, &component);
        let start = component[0];

        let mut path = vec![start];
        let mut blocked: HashSet<usize> = HashSet::from([start]);
        let mut closed: HashSet<usize> = HashSet::new();
        let mut b: HashMap<usize, HashSet<usize>> = HashMap::new();
        let mut stack: Vec<(usize, Vec<usize>)> = vec![(start, sub[&start].clone())];

        while let Some((this, nbrs)) = stack.last_mut() {
            let this = *this;
            if let Some(next) = nbrs.pop() {
                if next == start {
                    cycles.push(path.clone());
                    closed.extend(path.iter().copied());
                } else if !blocked.contains(&next) {
                    path.push(next);
                    stack.push((next, sub[&next].clone()));
                    closed.remove(&next);
                    blocked.insert(next);
                    continue;
                }
            }
            if stack.last().is_some_and(|(_, n)| n.is_empty()) {
                if closed.contains(&this) {
                    unblock(this, &mut blocked, &mut b);
                } else {
                    for &nbr in &sub[&this] {
                        b.entry(nbr).or_default().insert(this);
                    }
                }
                stack.pop();
                path.pop();
            }
        }

        let rest: Vec<usize> = component[1..].to_vec();
        if !rest.is_empty() {
            components.extend(strongly_connected(&induced(graph, &rest)));
        }
    }

    for cycle in &mut cycles {
        let pos = cycle
            .iter()
            .enumerate()
            .min_by_key(|(_, &n)| n)
            .map(|(i, _)| i)
            .unwrap_or(0);
        cycle.rotate_left(pos);
    }
    cycles.sort();
    cycles
}

/// The edges of a cycle given as a node sequence, closing edge included.
pub fn cycle_edges(cycle: &[usize]) -> Vec<(usize, usize)> {
    (0..cycle.len())
        .map(|i| (cycle[i], cycle[(i + 1) % cycle.len()]))
        .collect()
}

/// Repeatedly drops the lexicographically last edge (by node name) of every
/// remaining cycle until the graph is acyclic. Returns the new graph and the
/// dropped edges in sorted order.
pub fn break_cycles(graph: &DirectedGraph, names: &[String]) -> (DirectedGraph, Vec<(usize, usize)>) {
    let mut current = graph.clone();
    let mut dropped = BTreeSet::new();
    loop {
        let cycles = detect_cycles(&current);
        if cycles.is_empty() {
            break;
        }
        let round: Vec<(usize, usize)> = cycles
            .iter()
            .map(|c| {
                cycle_edges(c)
                    .into_iter()
                    .max_by(|a, b| (&names[a.0], &names[a.1]).cmp(&(&names[b.0], &names[b.1])))
                    .expect("cycles are non-empty")
            })
            .collect();
        dropped.extend(round.iter().copied());
        current = current.without_edges(&round);
    }
    (current, dropped.into_iter().collect())
}
