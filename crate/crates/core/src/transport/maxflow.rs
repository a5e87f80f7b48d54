//! Dinic max-flow on float capacities, used for bottleneck feasibility.

use std::collections::VecDeque;

const EPS: f64 = 1e-15;

#[derive(Debug, Clone)]
struct Edge {
    to: usize,
    rev: usize,
    cap: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    graph: Vec<Vec<Edge>>,
}

impl FlowNetwork {
    pub(crate) fn new(nodes: usize) -> Self {
        Self {
            graph: vec![Vec::new(); nodes],
        }
    }

    /// Adds `from -> to` and returns its position for [`FlowNetwork::flow_on`].
    pub(crate) fn add_edge(&mut self, from: usize, to: usize, cap: f64) -> (usize, usize) {
        let fwd = self.graph[from].len();
        let bwd = self.graph[to].len() + usize::from(from == to);
        self.graph[from].push(Edge { to, rev: bwd, cap });
        self.graph[to].push(Edge {
            to: from,
            rev: fwd,
            cap: 0.0,
        });
        (from, fwd)
    }

    /// Flow pushed through an edge (the capacity of its reverse arc).
    pub(crate) fn flow_on(&self, edge: (usize, usize)) -> f64 {
        let e = &self.graph[edge.0][edge.1];
        self.graph[e.to][e.rev].cap
    }

    pub(crate) fn max_flow(&mut self, source: usize, sink: usize) -> f64 {
        let n = self.graph.len();
        let mut total = 0.0;
        let mut level = vec![usize::MAX; n];
        let mut iter = vec![0usize; n];
        loop {
            level.iter_mut().for_each(|l| *l = usize::MAX);
            level[source] = 0;
            let mut queue = VecDeque::from([source]);
            while let Some(v) = queue.pop_front() {
                for e in &self.graph[v] {
                    if e.cap > EPS && level[e.to] == usize::MAX {
                        level[e.to] = level[v] + 1;
                        queue.push_back(e.to);
                    }
                }
            }
            if level[sink] == usize::MAX {
                return total;
            }
            iter.iter_mut().for_each(|i| *i = 0);
            loop {
                let pushed = self.augment(source, sink, f64::INFINITY, &level, &mut iter);
                if pushed <= EPS {
                    break;
                }
                total += pushed;
            }
        }
    }

    fn augment(&mut self, v: usize, sink: usize, limit: f64, level: &[usize], iter: &mut [usize]) -> f64 {
        if v == sink {
            return limit;
        }
        while iter[v] < self.graph[v].len() {
            let Edge { to, rev, cap } = self.graph[v][iter[v]];
            if cap > EPS && level[to] == level[v] + 1 {
                let pushed = self.augment(to, sink, limit.min(cap), level, iter);
                if pushed > EPS {
                    self.graph[v][iter[v]].cap -= pushed;
                    self.graph[to][rev].cap += pushed;
                    return pushed;
                }
            }
            iter[v] += 1;
        }
        0.0
    }
}
