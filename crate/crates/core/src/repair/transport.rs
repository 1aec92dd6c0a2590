//! Transportation problems by successive shortest paths with node
//! potentials. All arc costs are non-negative, so the potentials start at
//! zero and every Dijkstra run works on non-negative reduced costs. Integral
//! supplies and demands give integral flows.

use std::f64;

#[derive(Clone, Debug, PartialEq)]
pub struct TransportSolution {
    /// Row-major `supplies x demands`.
    pub flows: Vec<u64>,
    pub cost: f64,
    pub num_demands: usize,
}

impl TransportSolution {
    #[inline]
    pub fn flow(&self, supply: usize, demand: usize) -> u64 {
        self.flows[supply * self.num_demands + demand]
    }
}

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: usize,
    cap: u64,
    cost: f64,
}

/// Reusable buffers for repeated solves.
#[derive(Debug, Default)]
pub struct TransportSolver {
    arcs: Vec<Arc>,
    adj: Vec<Vec<usize>>,
    potential: Vec<f64>,
    dist: Vec<f64>,
    prev: Vec<usize>,
    done: Vec<bool>,
    /// Index of the supply->demand arc for each `(supply, demand)` pair, or
    /// `usize::MAX` when the pair is not allowed.
    pair_arc: Vec<usize>,
    stack: Vec<usize>,
    cursor: Vec<usize>,
}

const NONE: usize = usize::MAX;

impl TransportSolver {
    pub fn new() -> Self {
        Self::default()
    }

    fn add_arc(&mut self, from: usize, to: usize, cap: u64, cost: f64) -> usize {
        let idx = self.arcs.len();
        self.arcs.push(Arc { to, cap, cost });
        self.arcs.push(Arc {
            to: from,
            cap: 0,
            cost: -cost,
        });
        self.adj[from].push(idx);
        self.adj[to].push(idx + 1);
        idx
    }

    /// Minimum-cost flow meeting every demand within the supplies. `cost`
    /// returns `None` for arcs that may not carry flow. Returns `None` when
    /// the demands cannot be met.
    pub fn solve(
        &mut self,
        supplies: &[u64],
        demands: &[u64],
        cost: impl Fn(usize, usize) -> Option<f64>,
    ) -> Option<TransportSolution> {
        let ns = supplies.len();
        let nd = demands.len();
        let source = 0;
        let sink = ns + nd + 1;
        let nodes = ns + nd + 2;

        self.arcs.clear();
        self.adj.iter_mut().for_each(Vec::clear);
        self.adj.resize_with(nodes, Vec::new);
        self.pair_arc.clear();
        self.pair_arc.resize(ns * nd, NONE);

        for (s, &cap) in supplies.iter().enumerate() {
            if cap > 0 {
                self.add_arc(source, 1 + s, cap, 0.0);
            }
        }
        for (s, &cap) in supplies.iter().enumerate() {
            if cap == 0 {
                continue;
            }
            for (d, &need) in demands.iter().enumerate() {
                if let Some(c) = cost(s, d) {
                    debug_assert!(c >= 0.0, "negative unit cost");
                    let arc = self.add_arc(1 + s, 1 + ns + d, need.min(cap), c);
                    self.pair_arc[s * nd + d] = arc;
                }
            }
        }
        for (d, &need) in demands.iter().enumerate() {
            if need > 0 {
                self.add_arc(1 + ns + d, sink, need, 0.0);
            }
        }

        let required: u64 = demands.iter().sum();
        let mut flow = 0;
        self.potential.clear();
        self.potential.resize(nodes, 0.0);
        while flow < required {
            if !self.shortest_path(source, sink, nodes) {
                return None;
            }
            for v in 0..nodes {
                if self.dist[v].is_finite() {
                    self.potential[v] += self.dist[v];
                }
            }
            // Every path of zero reduced cost is now a shortest path; push
            // along as many as possible before the next Dijkstra run.
            loop {
                let pushed = self.augment_admissible(source, sink, nodes, required - flow);
                if pushed == 0 {
                    break;
                }
                flow += pushed;
                if flow == required {
                    break;
                }
            }
        }

        let mut flows = vec![0; ns * nd];
        let mut total = 0.0;
        for (idx, &arc) in self.pair_arc.iter().enumerate() {
            if arc != NONE {
                let sent = self.arcs[arc ^ 1].cap;
                flows[idx] = sent;
                total += sent as f64 * self.arcs[arc].cost;
            }
        }
        Some(TransportSolution {
            flows,
            cost: total,
            num_demands: nd,
        })
    }

    /// Depth-first search for one source-sink path of zero reduced cost;
    /// pushes up to `limit` units along it.
    fn augment_admissible(&mut self, source: usize, sink: usize, nodes: usize, limit: u64) -> u64 {
        self.done.clear();
        self.done.resize(nodes, false);
        self.prev.clear();
        self.prev.resize(nodes, NONE);
        self.cursor.clear();
        self.cursor.resize(nodes, 0);
        self.stack.clear();
        self.stack.push(source);
        self.done[source] = true;
        let mut found = false;
        while let Some(&u) = self.stack.last() {
            if u == sink {
                found = true;
                break;
            }
            let mut advanced = false;
            while self.cursor[u] < self.adj[u].len() {
                let a = self.adj[u][self.cursor[u]];
                self.cursor[u] += 1;
                let arc = self.arcs[a];
                if arc.cap == 0 || self.done[arc.to] {
                    continue;
                }
                let reduced = arc.cost + self.potential[u] - self.potential[arc.to];
                if reduced > 1e-9 * (1.0 + arc.cost.abs()) {
                    continue;
                }
                self.done[arc.to] = true;
                self.prev[arc.to] = a;
                self.stack.push(arc.to);
                advanced = true;
                break;
            }
            if !advanced {
                self.stack.pop();
            }
        }
        if !found {
            return 0;
        }
        let mut push = limit;
        let mut v = sink;
        while v != source {
            let arc = self.prev[v];
            push = push.min(self.arcs[arc].cap);
            v = self.arcs[arc ^ 1].to;
        }
        let mut v = sink;
        while v != source {
            let arc = self.prev[v];
            self.arcs[arc].cap -= push;
            self.arcs[arc ^ 1].cap += push;
            v = self.arcs[arc ^ 1].to;
        }
        push
    }

    /// Dense Dijkstra on reduced costs; fills `dist` and `prev`.
    fn shortest_path(&mut self, source: usize, sink: usize, nodes: usize) -> bool {
        self.dist.clear();
        self.dist.resize(nodes, f64::INFINITY);
        self.prev.clear();
        self.prev.resize(nodes, NONE);
        self.done.clear();
        self.done.resize(nodes, false);
        self.dist[source] = 0.0;
        loop {
            let mut u = NONE;
            let mut best = f64::INFINITY;
            for v in 0..nodes {
                if !self.done[v] && self.dist[v] < best {
                    best = self.dist[v];
                    u = v;
                }
            }
            if u == NONE {
                break;
            }
            self.done[u] = true;
            if u == sink {
                break;
            }
            for &a in &self.adj[u] {
                let arc = self.arcs[a];
                if arc.cap == 0 || self.done[arc.to] {
                    continue;
                }
                let reduced = (arc.cost + self.potential[u] - self.potential[arc.to]).max(0.0);
                let cand = best + reduced;
                if cand < self.dist[arc.to] {
                    self.dist[arc.to] = cand;
                    self.prev[arc.to] = a;
                }
            }
        }
        // Unsettled nodes keep their tentative labels; cap them at the sink
        // distance so the potentials stay feasible.
        let reach = self.dist[sink];
        if !reach.is_finite() {
            return false;
        }
        for v in 0..nodes {
            if !self.done[v] || self.dist[v] > reach {
                self.dist[v] = reach;
            }
        }
        true
    }
}

/// One-shot transportation solve. `costs[s][d]` is the unit cost from
/// supply `s` to demand `d`; `forbidden` lists `(s, d)` arcs that must stay
/// empty.
pub fn solve_transportation(
    supplies: &[u64],
    demands: &[u64],
    costs: &[Vec<f64>],
    forbidden: &[(usize, usize)],
) -> Option<TransportSolution> {
    let mut solver = TransportSolver::new();
    solver.solve(supplies, demands, |s, d| {
        if forbidden.contains(&(s, d)) {
            None
        } else {
            Some(costs[s][d])
        }
    })
}
