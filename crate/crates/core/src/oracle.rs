//! Brute-force optimum for tiny instances, sharing no code with the
//! repair solver.
//!
//! Every open set is enumerated; each open facility is given one maximal set
//! of mutually compatible customers it may serve, and the resulting
//! transportation problem is solved by max-flow followed by negative-cycle
//! canceling.

use thiserror::Error;

use crate::instance::Instance;
use crate::par::{map_ordered, Execution};
use crate::solution::evaluate;

pub const MAX_FACILITIES: usize = 4;
pub const MAX_CUSTOMERS: usize = 6;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("instance with {facilities} facilities and {customers} customers exceeds the enumeration limit")]
    TooLarge { facilities: usize, customers: usize },
    #[error("no feasible assignment exists")]
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleSolution {
    pub cost: f64,
    /// `(customer, facility, quantity)`, sorted.
    pub shipments: Vec<(usize, usize, u64)>,
}

pub fn solve_exact(inst: &Instance) -> Result<OracleSolution, OracleError> {
    solve_exact_with(inst, Execution::default())
}

pub fn solve_exact_with(inst: &Instance, exec: Execution) -> Result<OracleSolution, OracleError> {
    let m = inst.num_facilities();
    let n = inst.num_customers();
    if m > MAX_FACILITIES || n > MAX_CUSTOMERS {
        return Err(OracleError::TooLarge {
            facilities: m,
            customers: n,
        });
    }
    let groups = maximal_compatible_sets(inst);
    let masks: Vec<u32> = (1..1u32 << m).collect();
    let per_mask = map_ordered(exec, &masks, |&mask| best_for_open_set(inst, mask, &groups));
    per_mask
        .into_iter()
        .flatten()
        .min_by(|a, b| a.cost.total_cmp(&b.cost).then_with(|| a.shipments.cmp(&b.shipments)))
        .ok_or(OracleError::Infeasible)
}

/// Customer subsets (bit masks) with no incompatible pair inside and no
/// customer that could be added.
fn maximal_compatible_sets(inst: &Instance) -> Vec<u32> {
    let n = inst.num_customers();
    let compatible = |set: u32| {
        inst.incompatible_pairs()
            .iter()
            .all(|&(a, b)| set & (1 << a) == 0 || set & (1 << b) == 0)
    };
    let all: Vec<u32> = (0..1u32 << n).filter(|&s| compatible(s)).collect();
    all.iter()
        .copied()
        .filter(|&s| (0..n).all(|i| s & (1 << i) != 0 || !compatible(s | (1 << i))))
        .collect()
}

fn best_for_open_set(inst: &Instance, mask: u32, groups: &[u32]) -> Option<OracleSolution> {
    let m = inst.num_facilities();
    let open: Vec<usize> = (0..m).filter(|&j| mask & (1 << j) != 0).collect();
    let capacity: u64 = open.iter().map(|&j| inst.capacity(j)).sum();
    if capacity < inst.total_demand() {
        return None;
    }
    let mut best: Option<OracleSolution> = None;
    let mut choice = vec![0usize; open.len()];
    loop {
        let allowed: Vec<u32> = choice.iter().map(|&c| groups[c]).collect();
        if let Some(flows) = min_cost_transport(inst, &open, &allowed) {
            let shipments: Vec<(usize, usize, u64)> = flows;
            let cost = evaluate(inst, shipments.iter().copied());
            let better = match &best {
                None => true,
                Some(b) => cost < b.cost || (cost == b.cost && shipments < b.shipments),
            };
            if better {
                best = Some(OracleSolution { cost, shipments });
            }
        }
        // Next combination, odometer style.
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return best;
            }
            choice[pos] += 1;
            if choice[pos] < groups.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

struct Edge {
    to: usize,
    cap: i64,
    cost: f64,
}

struct Graph {
    edges: Vec<Edge>,
    adj: Vec<Vec<usize>>,
}

impl Graph {
    fn new(nodes: usize) -> Self {
        Self {
            edges: Vec::new(),
            adj: vec![Vec::new(); nodes],
        }
    }

    fn add(&mut self, from: usize, to: usize, cap: i64, cost: f64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to, cap, cost });
        self.edges.push(Edge { to: from, cap: 0, cost: -cost });
        self.adj[from].push(id);
        self.adj[to].push(id + 1);
        id
    }

    /// Breadth-first augmenting paths, ignoring costs.
    fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        let nodes = self.adj.len();
        let mut total = 0;
        loop {
            let mut via = vec![usize::MAX; nodes];
            let mut queue = std::collections::VecDeque::from([source]);
            let mut seen = vec![false; nodes];
            seen[source] = true;
            while let Some(v) = queue.pop_front() {
                for &e in &self.adj[v] {
                    let w = self.edges[e].to;
                    if self.edges[e].cap > 0 && !seen[w] {
                        seen[w] = true;
                        via[w] = e;
                        queue.push_back(w);
                    }
                }
            }
            if !seen[sink] {
                return total;
            }
            let mut push = i64::MAX;
            let mut v = sink;
            while v != source {
                let e = via[v];
                push = push.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut v = sink;
            while v != source {
                let e = via[v];
                self.edges[e].cap -= push;
                self.edges[e ^ 1].cap += push;
                v = self.edges[e ^ 1].to;
            }
            total += push;
        }
    }

    /// Finds a negative-cost cycle in the residual graph by Bellman-Ford and
    /// returns its edges.
    fn negative_cycle(&self) -> Option<Vec<usize>> {
        let nodes = self.adj.len();
        let mut dist = vec![0.0f64; nodes];
        let mut via = vec![usize::MAX; nodes];
        let mut last = usize::MAX;
        for _ in 0..nodes {
            last = usize::MAX;
            for (e, edge) in self.edges.iter().enumerate() {
                if edge.cap <= 0 {
                    continue;
                }
                let from = self.edges[e ^ 1].to;
                if dist[from] + edge.cost < dist[edge.to] - 1e-9 {
                    dist[edge.to] = dist[from] + edge.cost;
                    via[edge.to] = e;
                    last = edge.to;
                }
            }
            if last == usize::MAX {
                return None;
            }
        }
        // Walk back far enough to land on the cycle.
        let mut v = last;
        for _ in 0..nodes {
            v = self.edges[via[v] ^ 1].to;
        }
        let start = v;
        let mut cycle = Vec::new();
        loop {
            let e = via[v];
            cycle.push(e);
            v = self.edges[e ^ 1].to;
            if v == start {
                break;
            }
        }
        Some(cycle)
    }
}

/// Cheapest way to meet every demand where open facility `open[t]` may only
/// serve the customers in `allowed[t]`.
fn min_cost_transport(inst: &Instance, open: &[usize], allowed: &[u32]) -> Option<Vec<(usize, usize, u64)>> {
    let n = inst.num_customers();
    let k = open.len();
    let source = 0;
    let sink = 1 + k + n;
    let mut g = Graph::new(k + n + 2);
    let mut arcs = Vec::new();
    for (t, &j) in open.iter().enumerate() {
        g.add(source, 1 + t, inst.capacity(j) as i64, 0.0);
        for i in 0..n {
            if allowed[t] & (1 << i) != 0 {
                let id = g.add(1 + t, 1 + k + i, inst.demand(i) as i64, inst.ship_cost(i, j));
                arcs.push((id, i, j));
            }
        }
    }
    for i in 0..n {
        g.add(1 + k + i, sink, inst.demand(i) as i64, 0.0);
    }
    if g.max_flow(source, sink) < inst.total_demand() as i64 {
        return None;
    }
    while let Some(cycle) = g.negative_cycle() {
        let push = cycle.iter().map(|&e| g.edges[e].cap).min().unwrap_or(0);
        for e in cycle {
            g.edges[e].cap -= push;
            g.edges[e ^ 1].cap += push;
        }
    }
    let mut shipments: Vec<(usize, usize, u64)> = arcs
        .into_iter()
        .filter_map(|(id, i, j)| {
            let q = g.edges[id ^ 1].cap;
            (q > 0).then_some((i, j, q as u64))
        })
        .collect();
    shipments.sort_unstable();
    Some(shipments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solution::{audit, Solution};

    #[test]
    fn two_by_two_optimum_is_26() {
        let inst = Instance::new(
            vec![3, 3],
            vec![5, 5],
            vec![10.0, 10.0],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            [],
        )
        .unwrap();
        let best = solve_exact(&inst).unwrap();
        assert_eq!(best.cost, 26.0);
        assert_eq!(best.shipments, vec![(0, 0, 3), (1, 1, 3)]);
    }

    #[test]
    fn incompatibilities_can_make_it_infeasible() {
        // Three mutually incompatible customers, two facilities.
        let inst = Instance::new(
            vec![1, 1, 1],
            vec![10, 10],
            vec![1.0, 1.0],
            vec![vec![1.0, 1.0]; 3],
            [(0, 1), (0, 2), (1, 2)],
        )
        .unwrap();
        assert_eq!(solve_exact(&inst), Err(OracleError::Infeasible));
    }

    #[test]
    fn dominant_facility_alone() {
        let inst = Instance::new(
            vec![2, 3, 4],
            vec![20, 9],
            vec![1.0, 50.0],
            vec![vec![1.0, 3.0], vec![2.0, 3.0], vec![1.0, 4.0]],
            [],
        )
        .unwrap();
        let best = solve_exact(&inst).unwrap();
        assert_eq!(best.cost, 1.0 + 2.0 + 6.0 + 4.0);
        assert!(best.shipments.iter().all(|&(_, j, _)| j == 0));
    }

    #[test]
    fn result_is_feasible_and_sequential_agrees() {
        let inst = Instance::new(
            vec![4, 2, 3, 5],
            vec![6, 7, 5],
            vec![8.0, 3.0, 5.0],
            vec![vec![1.0, 4.0, 2.0], vec![3.0, 1.0, 2.0], vec![2.0, 2.0, 1.0], vec![4.0, 3.0, 1.0]],
            [(0, 1), (2, 3)],
        )
        .unwrap();
        let best = solve_exact(&inst).unwrap();
        let sol = Solution::from_shipments(&inst, best.shipments.iter().copied()).unwrap();
        assert!(audit(&inst, &sol).is_empty());
        assert_eq!(solve_exact_with(&inst, Execution::Sequential), Ok(best));
    }

    #[test]
    fn size_limit_enforced() {
        let inst = Instance::new(vec![1; 7], vec![10], vec![1.0], vec![vec![1.0]; 7], []).unwrap();
        assert!(matches!(solve_exact(&inst), Err(OracleError::TooLarge { .. })));
    }
}
