//! Directed-graph helpers for routing: label-setting shortest paths over an
//! edge subset and exhaustive simple-path enumeration.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::instance::Edge;

/// Borrowed adjacency view over an edge list. Edge ids are indices into the
/// slice.
pub struct Digraph<'a> {
    vertices: usize,
    edges: &'a [Edge],
    out: Vec<Vec<usize>>,
}

#[derive(PartialEq)]
struct Label {
    dist: f64,
    vertex: usize,
}

impl Eq for Label {}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        // reversed for a min-heap
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<'a> Digraph<'a> {
    pub fn new(vertices: usize, edges: &'a [Edge]) -> Self {
        let mut out = vec![Vec::new(); vertices];
        for (id, e) in edges.iter().enumerate() {
            out[e.tail].push(id);
        }
        for list in &mut out {
            list.sort_by_key(|&id| (edges[id].head, id));
        }
        Self { vertices, edges, out }
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &'a [Edge] {
        self.edges
    }

    pub fn reachable(&self, s: usize, t: usize, allowed: impl Fn(usize) -> bool) -> bool {
        let mut seen = vec![false; self.vertices];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(u) = stack.pop() {
            if u == t {
                return true;
            }
            for &e in &self.out[u] {
                let v = self.edges[e].head;
                if allowed(e) && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        false
    }

    /// Shortest `s`-`t` path over allowed edges under nonnegative weights.
    /// Returns the total weight and the edge ids in order. Among equal labels
    /// the predecessor with the smallest vertex id wins (while the target is
    /// still unsettled).
    pub fn shortest_path(
        &self,
        s: usize,
        t: usize,
        allowed: impl Fn(usize) -> bool,
        weight: impl Fn(usize) -> f64,
    ) -> Option<(f64, Vec<usize>)> {
        let mut dist = vec![f64::INFINITY; self.vertices];
        let mut pred: Vec<Option<usize>> = vec![None; self.vertices];
        let mut settled = vec![false; self.vertices];
        let mut heap = BinaryHeap::new();
        dist[s] = 0.0;
        heap.push(Label { dist: 0.0, vertex: s });
        while let Some(Label { dist: d, vertex: u }) = heap.pop() {
            if settled[u] || d > dist[u] {
                continue;
            }
            settled[u] = true;
            if u == t {
                break;
            }
            for &e in &self.out[u] {
                if !allowed(e) {
                    continue;
                }
                let v = self.edges[e].head;
                if settled[v] {
                    continue;
                }
                let w = weight(e);
                debug_assert!(w >= 0.0, "negative edge weight {w}");
                let nd = d + w;
                let better = match nd.total_cmp(&dist[v]) {
                    Ordering::Less => true,
                    Ordering::Equal => pred[v].is_some_and(|p| u < self.edges[p].tail),
                    Ordering::Greater => false,
                };
                if better {
                    dist[v] = nd;
                    pred[v] = Some(e);
                    heap.push(Label { dist: nd, vertex: v });
                }
            }
        }
        if !dist[t].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut v = t;
        while v != s {
            let e = pred[v].expect("settled vertex has a predecessor");
            path.push(e);
            v = self.edges[e].tail;
        }
        path.reverse();
        Some((dist[t], path))
    }

    /// All simple `s`-`t` paths over allowed edges, in lexicographic order of
    /// their vertex sequences (parallel edges by id).
    pub fn simple_paths(&self, s: usize, t: usize, allowed: impl Fn(usize) -> bool) -> Vec<Vec<usize>> {
        let mut paths = Vec::new();
        let mut on_path = vec![false; self.vertices];
        let mut current = Vec::new();
        on_path[s] = true;
        self.dfs(s, t, &allowed, &mut on_path, &mut current, &mut paths);
        paths
    }

    fn dfs(
        &self,
        u: usize,
        t: usize,
        allowed: &impl Fn(usize) -> bool,
        on_path: &mut [bool],
        current: &mut Vec<usize>,
        paths: &mut Vec<Vec<usize>>,
    ) {
        if u == t {
            paths.push(current.clone());
            return;
        }
        for &e in &self.out[u] {
            let v = self.edges[e].head;
            if !allowed(e) || on_path[v] {
                continue;
            }
            on_path[v] = true;
            current.push(e);
            self.dfs(v, t, allowed, on_path, current, paths);
            current.pop();
            on_path[v] = false;
        }
    }

    pub fn vertex_sequence(&self, source: usize, path: &[usize]) -> Vec<usize> {
        let mut seq = Vec::with_capacity(path.len() + 1);
        seq.push(source);
        seq.extend(path.iter().map(|&e| self.edges[e].head));
        seq
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stoch::rat;

    fn edge(tail: usize, head: usize) -> Edge {
        Edge { tail, head, capacity: rat(1, 1) }
    }

    #[test]
    fn enumerates_paths_in_order() {
        let edges = vec![edge(0, 2), edge(0, 1), edge(1, 2), edge(1, 3), edge(2, 3)];
        let g = Digraph::new(4, &edges);
        let paths = g.simple_paths(0, 3, |_| true);
        let seqs: Vec<Vec<usize>> = paths.iter().map(|p| g.vertex_sequence(0, p)).collect();
        assert_eq!(seqs, vec![vec![0, 1, 2, 3], vec![0, 1, 3], vec![0, 2, 3]]);
        assert_eq!(g.simple_paths(3, 0, |_| true).len(), 0);
    }

    #[test]
    fn shortest_path_respects_filter_and_weights() {
        let edges = vec![edge(0, 2), edge(0, 1), edge(1, 2)];
        let g = Digraph::new(3, &edges);
        let (d, p) = g.shortest_path(0, 2, |_| true, |e| [5.0, 1.0, 1.0][e]).unwrap();
        assert_eq!(d, 2.0);
        assert_eq!(p, vec![1, 2]);
        let (d, p) = g.shortest_path(0, 2, |e| e == 0, |_| 1.0).unwrap();
        assert_eq!((d, p), (1.0, vec![0]));
        assert!(g.shortest_path(0, 2, |e| e == 1, |_| 1.0).is_none());
    }

    #[test]
    fn zero_weight_ties_prefer_small_predecessor() {
        // 0->1->3 and 0->2->3 both weigh zero; vertex 1 < 2
        let edges = vec![edge(0, 2), edge(0, 1), edge(2, 3), edge(1, 3)];
        let g = Digraph::new(4, &edges);
        let (_, p) = g.shortest_path(0, 3, |_| true, |_| 0.0).unwrap();
        assert_eq!(g.vertex_sequence(0, &p), vec![0, 1, 3]);
    }
}
