use std::collections::BTreeSet;

use super::Circuit;

/// Reset dependency graph over latch nodes: an edge `(a, b)` means latch `a`
/// occurs in the reset function of latch `b`, where `b` is not uninitialized.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    pub nodes: Vec<usize>,
    pub edges: BTreeSet<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stratification {
    /// Latches in an order where every reset only reads earlier latches.
    Stratified { order: Vec<usize> },
    /// A directed cycle `[a, b, ..]` with edges `a -> b -> .. -> a`.
    Cyclic { cycle: Vec<usize> },
}

impl DependencyGraph {
    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    /// Whether every consecutive pair of `cycle`, including the closing
    /// edge, is an edge of the graph.
    pub fn contains_cycle(&self, cycle: &[usize]) -> bool {
        !cycle.is_empty() && (0..cycle.len()).all(|i| self.has_edge(cycle[i], cycle[(i + 1) % cycle.len()]))
    }
}

pub(super) fn dependency_graph(c: &Circuit) -> DependencyGraph {
    let mut edges = BTreeSet::new();
    for latch in c.latches() {
        if latch.is_uninitialized() {
            continue;
        }
        let support = c.support_unchecked(latch.reset);
        for node in support {
            if c.latch_index(node).is_some() {
                edges.insert((node, latch.node));
            }
        }
    }
    DependencyGraph {
        nodes: c.latches().iter().map(|l| l.node).collect(),
        edges,
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Color {
    White,
    Gray,
    Black,
}

/// Iterative depth-first search; linear in nodes plus edges.
pub(super) fn stratification(g: &DependencyGraph) -> Stratification {
    let mut sorted_nodes = g.nodes.clone();
    sorted_nodes.sort_unstable();
    let position = |node: usize| sorted_nodes.binary_search(&node).expect("edge endpoint is a latch");

    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); sorted_nodes.len()];
    for &(a, b) in &g.edges {
        succ[position(a)].push(position(b));
    }

    let mut color = vec![Color::White; sorted_nodes.len()];
    let mut postorder = Vec::with_capacity(sorted_nodes.len());
    for start in 0..sorted_nodes.len() {
        if color[start] != Color::White {
            continue;
        }
        // (vertex, next successor to visit)
        let mut stack: Vec<(usize, usize)> = vec![(start, 0)];
        color[start] = Color::Gray;
        while let Some(top) = stack.last_mut() {
            let (v, next) = *top;
            if let Some(&w) = succ[v].get(next) {
                top.1 += 1;
                match color[w] {
                    Color::White => {
                        color[w] = Color::Gray;
                        stack.push((w, 0));
                    }
                    Color::Gray => {
                        let from = stack.iter().position(|&(u, _)| u == w).expect("gray vertex on stack");
                        let cycle = stack[from..].iter().map(|&(u, _)| sorted_nodes[u]).collect();
                        return Stratification::Cyclic { cycle };
                    }
                    Color::Black => {}
                }
            } else {
                color[v] = Color::Black;
                postorder.push(sorted_nodes[v]);
                stack.pop();
            }
        }
    }
    postorder.reverse();
    Stratification::Stratified { order: postorder }
}
