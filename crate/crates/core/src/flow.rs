//! Small max-flow solver (Edmonds–Karp) used for edge-disjoint path counts.
//!
//! Graphs here are tiny open subgraphs of a box, and the flow values are
//! bounded by poly-log thresholds, so BFS augmentation is plenty.

use std::collections::VecDeque;

struct Arc {
    to: usize,
    cap: i64,
    rev: usize,
}

/// Directed flow network built incrementally.
pub struct FlowNetwork {
    adj: Vec<Vec<Arc>>,
}

impl FlowNetwork {
    pub fn new(n: usize) -> Self {
        FlowNetwork {
            adj: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    pub fn add_node(&mut self) -> usize {
        self.adj.push(Vec::new());
        self.adj.len() - 1
    }

    /// Directed arc u -> v with the given capacity (residual arc added with 0).
    pub fn add_arc(&mut self, u: usize, v: usize, cap: i64) {
        let ru = self.adj[v].len();
        let rv = self.adj[u].len();
        self.adj[u].push(Arc { to: v, cap, rev: ru });
        self.adj[v].push(Arc { to: u, cap: 0, rev: rv });
    }

    /// Undirected unit-capacity edge: one unit may cross in either direction.
    pub fn add_undirected_unit(&mut self, u: usize, v: usize) {
        let ru = self.adj[v].len();
        let rv = self.adj[u].len();
        self.adj[u].push(Arc { to: v, cap: 1, rev: ru });
        self.adj[v].push(Arc { to: u, cap: 1, rev: rv });
    }

    /// Maximum flow from s to t.
    pub fn max_flow(&mut self, s: usize, t: usize) -> i64 {
        let mut flow = 0;
        loop {
            // BFS for a shortest augmenting path.
            let mut pred: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
            let mut q = VecDeque::new();
            q.push_back(s);
            let mut seen = vec![false; self.adj.len()];
            seen[s] = true;
            while let Some(u) = q.pop_front() {
                if u == t {
                    break;
                }
                for (i, a) in self.adj[u].iter().enumerate() {
                    if a.cap > 0 && !seen[a.to] {
                        seen[a.to] = true;
                        pred[a.to] = Some((u, i));
                        q.push_back(a.to);
                    }
                }
            }
            if !seen[t] {
                return flow;
            }
            // Bottleneck along the path.
            let mut bottleneck = i64::MAX;
            let mut v = t;
            while v != s {
                let (u, i) = pred[v].unwrap();
                bottleneck = bottleneck.min(self.adj[u][i].cap);
                v = u;
            }
            let mut v = t;
            while v != s {
                let (u, i) = pred[v].unwrap();
                let rev = self.adj[u][i].rev;
                self.adj[u][i].cap -= bottleneck;
                self.adj[v][rev].cap += bottleneck;
                v = u;
            }
            flow += bottleneck;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_disjoint_paths() {
        // s -> a -> t and s -> b -> t
        let mut net = FlowNetwork::new(4);
        net.add_arc(0, 1, 1);
        net.add_arc(1, 3, 1);
        net.add_arc(0, 2, 1);
        net.add_arc(2, 3, 1);
        assert_eq!(net.max_flow(0, 3), 2);
    }

    #[test]
    fn bottleneck_edge() {
        // two sources funnel through one middle edge
        let mut net = FlowNetwork::new(5);
        net.add_arc(0, 1, 10);
        net.add_arc(0, 2, 10);
        net.add_undirected_unit(1, 3);
        net.add_undirected_unit(2, 3);
        net.add_undirected_unit(3, 4);
        net.add_arc(4, 4, 0); // no-op
        let mut sinked = net;
        // both 1-3-4 and 2-3-4 need edge 3-4
        assert_eq!(sinked.max_flow(0, 4), 1);
    }
}
