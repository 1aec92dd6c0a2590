//! Branch-and-bound over facility open/close decisions and banned
//! customer-facility arcs.
//!
//! Each node is bounded twice and keeps the larger value:
//!
//! * a transportation relaxation where undecided facilities charge their
//!   opening cost per unit of capacity used, and
//! * a Lagrangian relaxation of the demand constraints, whose facility
//!   sub-problems are continuous knapsacks solved greedily; multipliers are
//!   improved by subgradient steps and inherited by the children.
//!
//! Branching follows the transportation solution: first the undecided
//! facility with the largest fractional utilization, then the open-count
//! limit, then a pair of incompatible customers sharing a facility (ban one
//! arc or the other), then customers with more than two suppliers when the
//! two-source restriction is active. A relaxation without any of these
//! defects is a feasible fragment.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::rc::Rc;

use super::transport::{TransportSolution, TransportSolver};
use super::{AcceptMode, RepairOutcome, RepairParams, RepairStatus, SubproblemSolver};
use crate::clock::Clock;
use crate::destroy::{Fragment, SubProblem};
use crate::instance::Instance;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Fix {
    Free,
    Open,
    Closed,
}

/// Sub-problem data in local indices: customers `k`, facilities `l`.
struct Model {
    customers: Vec<usize>,
    facilities: Vec<usize>,
    demand: Vec<u64>,
    cap: Vec<u64>,
    /// Opening cost charged by the objective; zero for forced-open ones.
    fixed_cost: Vec<f64>,
    forced: Vec<bool>,
    /// Row-major `customers x facilities`.
    cost: Vec<f64>,
    banned: Vec<bool>,
    conflicts: Vec<Vec<usize>>,
    open_limit: usize,
    two_source: bool,
}

impl Model {
    fn new(inst: &Instance, sub: &SubProblem, two_source: bool) -> Self {
        let nf = sub.facilities.len();
        let customers = sub.customers.clone();
        let facilities: Vec<usize> = sub.facilities.iter().map(|f| f.id).collect();
        let mut cost = Vec::with_capacity(customers.len() * nf);
        let mut banned = Vec::with_capacity(customers.len() * nf);
        for &i in &customers {
            for &j in &facilities {
                cost.push(inst.ship_cost(i, j));
                banned.push(sub.is_forbidden(i, j));
            }
        }
        let conflicts = customers
            .iter()
            .map(|&i| {
                inst.conflicts(i)
                    .iter()
                    .filter_map(|other| customers.binary_search(other).ok())
                    .collect()
            })
            .collect();
        Self {
            demand: customers.iter().map(|&i| inst.demand(i)).collect(),
            cap: sub
                .facilities
                .iter()
                .map(|f| inst.capacity(f.id) - f.frozen_load)
                .collect(),
            fixed_cost: sub
                .facilities
                .iter()
                .map(|f| if f.forced_open() { 0.0 } else { inst.opening_cost(f.id) })
                .collect(),
            forced: sub.facilities.iter().map(|f| f.forced_open()).collect(),
            cost,
            banned,
            conflicts,
            open_limit: sub.open_limit.unwrap_or(nf),
            two_source,
            customers,
            facilities,
        }
    }

    #[inline]
    fn nf(&self) -> usize {
        self.facilities.len()
    }

    #[inline]
    fn nc(&self) -> usize {
        self.customers.len()
    }

    /// Objective of a flow matrix: shipping plus opening of used facilities.
    fn flow_cost(&self, flows: &[u64]) -> f64 {
        let nf = self.nf();
        let mut used = vec![false; nf];
        let mut total = 0.0;
        for (idx, &q) in flows.iter().enumerate() {
            if q > 0 {
                total += self.cost[idx] * q as f64;
                used[idx % nf] = true;
            }
        }
        total
            + used
                .iter()
                .enumerate()
                .filter(|(_, &u)| u)
                .map(|(l, _)| self.fixed_cost[l])
                .sum::<f64>()
    }
}

struct Node {
    fix: Vec<Fix>,
    bans: Vec<usize>,
    multipliers: Rc<Vec<f64>>,
    /// Smoothed facility selections of the Lagrangian sub-problem.
    average: Rc<Vec<f64>>,
    bound: f64,
    depth: u32,
    seq: u64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    /// Max-heap order: lowest bound first, then deepest, then oldest.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.seq.cmp(&self.seq))
    }
}

struct LagrangeResult {
    /// Bound with the capacity cover in the facility selection.
    value: f64,
    /// Bound without it, which the reduced-cost tests are based on.
    plain_value: f64,
    multipliers: Vec<f64>,
    reduced: Vec<f64>,
    /// Plain selection.
    chosen: Vec<bool>,
    /// Selection meeting the capacity cover.
    cover: Vec<bool>,
    average: Vec<f64>,
}

/// Largest residual demand for which the cover knapsack is solved.
const COVER_DEMAND_LIMIT: u64 = 20_000;
/// Largest knapsack table (items x count x demand) solved per iteration.
const COVER_TABLE_LIMIT: usize = 4_000_000;

/// Picks facilities among `items` minimizing the summed reduced cost so that
/// their capacity reaches `need`, using at most `slots` of them. Returns
/// `None` when no selection meets the cover.
fn cover_knapsack(items: &[(usize, f64, u64)], need: u64, slots: usize, take: &mut Vec<bool>) -> Option<(f64, Vec<usize>)> {
    let limited = slots < items.len();
    let need = need as usize;
    let mut picked = Vec::new();
    let mut base = 0.0;
    let mut rest: Vec<(usize, f64, u64)> = Vec::new();
    let mut need_left = need;
    if limited {
        rest.extend_from_slice(items);
    } else {
        for &(l, r, cap) in items {
            if r < 0.0 {
                picked.push(l);
                base += r;
                need_left = need_left.saturating_sub(cap as usize);
            } else {
                rest.push((l, r, cap));
            }
        }
    }
    let counts = if limited { slots + 1 } else { 1 };
    let width = need_left + 1;
    let layer = counts * width;
    // dp[k * width + c]: cheapest subset of k items (any count when not
    // limited) with capacity at least c.
    let mut dp = vec![f64::INFINITY; layer];
    dp[0] = 0.0;
    take.clear();
    take.resize(rest.len() * layer, false);
    for (t, &(_, r, cap)) in rest.iter().enumerate() {
        let cap = cap as usize;
        let row = &mut take[t * layer..(t + 1) * layer];
        if limited {
            for k in (1..counts).rev() {
                for c in (0..width).rev() {
                    let from = dp[(k - 1) * width + c.saturating_sub(cap)];
                    if from + r < dp[k * width + c] {
                        dp[k * width + c] = from + r;
                        row[k * width + c] = true;
                    }
                }
            }
        } else {
            for c in (0..width).rev() {
                let from = dp[c.saturating_sub(cap)];
                if from + r < dp[c] {
                    dp[c] = from + r;
                    row[c] = true;
                }
            }
        }
    }
    let mut k = (0..counts)
        .min_by(|&a, &b| dp[a * width + need_left].total_cmp(&dp[b * width + need_left]))
        .unwrap_or(0);
    let best = dp[k * width + need_left];
    if !best.is_finite() {
        return None;
    }
    let mut c = need_left;
    for t in (0..rest.len()).rev() {
        if take[t * layer + k * width + c] {
            let (l, _, cap) = rest[t];
            picked.push(l);
            c = c.saturating_sub(cap as usize);
            if limited {
                k -= 1;
            }
        }
    }
    Some((base + best, picked))
}

/// Settings of the built-in exact solver.
#[derive(Clone, Debug)]
pub struct BranchAndBound {
    pub root_subgradient_iterations: usize,
    pub node_subgradient_iterations: usize,
    /// Stop with a timeout once this many nodes wait in the queue.
    pub max_open_nodes: usize,
}

impl Default for BranchAndBound {
    fn default() -> Self {
        Self {
            root_subgradient_iterations: 200,
            node_subgradient_iterations: 30,
            max_open_nodes: 2_000_000,
        }
    }
}

impl SubproblemSolver for BranchAndBound {
    fn solve(&mut self, inst: &Instance, sub: &SubProblem, params: &RepairParams, clock: &Clock) -> RepairOutcome {
        let start = clock.elapsed();
        let model = Model::new(inst, sub, params.two_source);
        let mut search = Search {
            model: &model,
            params,
            settings: self,
            transport: TransportSolver::new(),
            incumbent: None,
            nodes: 0,
            seq: 0,
            scratch: Vec::new(),
            tried: HashSet::new(),
        };
        let (completed, open_bound) = search.run(clock, start);
        let nodes = search.nodes;
        let incumbent = search.incumbent.take();
        let elapsed = clock.elapsed() - start;

        let fragment = incumbent.as_ref().map(|(_, flows)| {
            let nf = model.nf();
            let shipments = flows
                .iter()
                .enumerate()
                .filter(|(_, &q)| q > 0)
                .map(|(idx, &q)| (model.customers[idx / nf], model.facilities[idx % nf], q))
                .collect();
            Fragment { shipments }
        });
        let cost = fragment.as_ref().map(|f| sub.fragment_cost(inst, f));
        let status = match (completed, cost.is_some()) {
            (true, true) => RepairStatus::Improved,
            (false, true) => RepairStatus::TimeoutWithIncumbent,
            (true, false) if params.cutoff.is_finite() => RepairStatus::NoBetterFound,
            (true, false) => RepairStatus::Infeasible,
            (false, false) => RepairStatus::NoBetterFound,
        };
        let lower_bound = match (completed, cost) {
            (true, Some(c)) => c,
            (true, None) => params.cutoff,
            (false, Some(c)) => open_bound.min(c),
            (false, None) => open_bound.min(params.cutoff),
        };
        RepairOutcome {
            status,
            fragment,
            cost,
            lower_bound,
            nodes,
            elapsed,
            timed_out: !completed,
        }
    }
}

struct Search<'a> {
    model: &'a Model,
    params: &'a RepairParams,
    settings: &'a BranchAndBound,
    transport: TransportSolver,
    incumbent: Option<(f64, Vec<u64>)>,
    nodes: u64,
    seq: u64,
    scratch: Vec<(f64, usize)>,
    tried: HashSet<Vec<bool>>,
}

fn tolerance(value: f64) -> f64 {
    1e-9 * value.abs().max(1.0)
}

impl Search<'_> {
    /// A subtree whose bound satisfies this holds nothing worth returning.
    fn prunable(&self, bound: f64) -> bool {
        if let Some((best, _)) = &self.incumbent {
            return bound >= best - tolerance(*best);
        }
        let cutoff = self.params.cutoff;
        if !cutoff.is_finite() {
            return false;
        }
        match self.params.mode {
            AcceptMode::Strict => bound >= cutoff - tolerance(cutoff),
            AcceptMode::Weak => bound > cutoff + tolerance(cutoff),
        }
    }

    fn acceptable(&self, cost: f64) -> bool {
        if let Some((best, _)) = &self.incumbent {
            return cost < best - tolerance(*best);
        }
        let cutoff = self.params.cutoff;
        if !cutoff.is_finite() {
            return true;
        }
        match self.params.mode {
            AcceptMode::Strict => cost < cutoff - tolerance(cutoff),
            AcceptMode::Weak => cost <= cutoff + tolerance(cutoff),
        }
    }

    fn upper_target(&self) -> Option<f64> {
        match &self.incumbent {
            Some((best, _)) => Some(*best),
            None if self.params.cutoff.is_finite() => Some(self.params.cutoff),
            None => None,
        }
    }

    fn offer(&mut self, flows: &[u64]) {
        let cost = self.model.flow_cost(flows);
        if self.acceptable(cost) {
            self.incumbent = Some((cost, flows.to_vec()));
        }
    }

    /// Returns whether the search space was exhausted and, if not, the
    /// smallest bound among unexplored nodes.
    fn run(&mut self, clock: &Clock, start: f64) -> (bool, f64) {
        let model = self.model;
        let nf = model.nf();
        let root_u: Vec<f64> = (0..model.nc())
            .map(|k| {
                (0..nf)
                    .filter(|&l| !model.banned[k * nf + l] && model.cap[l] > 0)
                    .map(|l| model.cost[k * nf + l] + model.fixed_cost[l] / model.cap[l] as f64)
                    .fold(f64::INFINITY, f64::min)
            })
            .map(|u| if u.is_finite() { u } else { 0.0 })
            .collect();
        let root_fix: Vec<Fix> = model
            .forced
            .iter()
            .map(|&forced| if forced { Fix::Open } else { Fix::Free })
            .collect();
        if let Some(relaxed) = self.relax(&root_fix, &model.banned) {
            let load: Vec<u64> = (0..nf)
                .map(|l| (0..model.nc()).map(|k| relaxed.flow(l, k)).sum())
                .collect();
            self.heuristic_from_load(&root_fix, &load);
        }
        let mut queue = BinaryHeap::new();
        queue.push(Node {
            fix: root_fix,
            bans: Vec::new(),
            multipliers: Rc::new(root_u),
            average: Rc::new(vec![0.5; nf]),
            bound: f64::NEG_INFINITY,
            depth: 0,
            seq: 0,
        });

        while let Some(node) = queue.pop() {
            if self.prunable(node.bound) {
                continue;
            }
            let out_of_time = clock.elapsed() - start >= self.params.time_limit;
            let out_of_nodes = self.params.node_limit.is_some_and(|lim| self.nodes >= lim);
            if out_of_time || out_of_nodes || queue.len() >= self.settings.max_open_nodes {
                let open_bound = queue
                    .iter()
                    .map(|n| n.bound)
                    .fold(node.bound, f64::min);
                return (false, open_bound);
            }
            self.nodes += 1;
            clock.charge(1);
            for child in self.expand(node) {
                queue.push(child);
            }
        }
        (true, f64::INFINITY)
    }

    fn expand(&mut self, mut node: Node) -> Vec<Node> {
        let model = self.model;
        let nf = model.nf();
        let nc = model.nc();

        let fixed_open = node.fix.iter().filter(|&&f| f == Fix::Open).count();
        if fixed_open > model.open_limit {
            return Vec::new();
        }
        let mut banned = model.banned.clone();
        for &arc in &node.bans {
            banned[arc] = true;
        }

        // Lagrangian bound and reduced-cost fixing.
        let root = node.depth == 0;
        let iterations = if root {
            self.settings.root_subgradient_iterations
        } else {
            self.settings.node_subgradient_iterations
        };
        let lag = self.lagrangian(&node.fix, &banned, &node.multipliers, &node.average, iterations, root);
        if lag.value == f64::INFINITY || self.prunable(lag.value) {
            return Vec::new();
        }
        node.bound = node.bound.max(lag.value);
        self.fix_by_reduced_cost(&mut node.fix, &lag);
        if node.fix.iter().filter(|&&f| f == Fix::Open).count() > model.open_limit {
            return Vec::new();
        }

        self.heuristic_from_lagrange(&node.fix, &lag);
        if self.prunable(node.bound) {
            return Vec::new();
        }

        let multipliers = Rc::new(lag.multipliers);
        let average = Rc::new(lag.average);
        let mut children = Vec::new();
        let mut child = |this: &mut Self, fix: Vec<Fix>, ban: Option<usize>, bound: f64| {
            this.seq += 1;
            let mut bans = node.bans.clone();
            bans.extend(ban);
            children.push(Node {
                fix,
                bans,
                multipliers: Rc::clone(&multipliers),
                average: Rc::clone(&average),
                bound,
                depth: node.depth + 1,
                seq: this.seq,
            });
        };

        // Undecided facility whose averaged selection is the most
        // fractional; when all look settled, the one with the reduced cost
        // closest to zero.
        let free = (0..nf).filter(|&l| node.fix[l] == Fix::Free);
        let fractional = free
            .clone()
            .map(|l| (average[l].min(1.0 - average[l]), l))
            .max_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let pick = match fractional {
            Some((f, l)) if f >= 0.02 => Some(l),
            Some(_) => free.min_by(|&a, &b| lag.reduced[a].abs().total_cmp(&lag.reduced[b].abs()).then(a.cmp(&b))),
            None => None,
        };
        if let Some(l) = pick {
            let mut open = node.fix.clone();
            open[l] = Fix::Open;
            let mut closed = node.fix.clone();
            closed[l] = Fix::Closed;
            if average[l] >= 0.5 {
                child(self, open, None, node.bound);
                child(self, closed, None, node.bound);
            } else {
                child(self, closed, None, node.bound);
                child(self, open, None, node.bound);
            }
            return children;
        }

        // Every facility is decided: the rest is a transportation problem.
        let supplies: Vec<u64> = (0..nf)
            .map(|l| if node.fix[l] == Fix::Open { model.cap[l] } else { 0 })
            .collect();
        let Some(relaxed) = self
            .transport
            .solve(&supplies, &model.demand, |l, k| (!banned[k * nf + l]).then(|| model.cost[k * nf + l]))
        else {
            return Vec::new();
        };
        let fixed_opening: f64 = (0..nf)
            .filter(|&l| node.fix[l] == Fix::Open)
            .map(|l| model.fixed_cost[l])
            .sum();
        let bound = (relaxed.cost + fixed_opening).max(node.bound);
        if self.prunable(bound) {
            return Vec::new();
        }

        if let Some((a, b, l)) = self.find_conflict(&relaxed) {
            child(self, node.fix.clone(), Some(a * nf + l), bound);
            child(self, node.fix.clone(), Some(b * nf + l), bound);
            return children;
        }

        if model.two_source {
            for k in 0..nc {
                let serving: Vec<usize> = (0..nf).filter(|&l| relaxed.flow(l, k) > 0).collect();
                if serving.len() > 2 {
                    for l in serving {
                        child(self, node.fix.clone(), Some(k * nf + l), bound);
                    }
                    return children;
                }
            }
        }

        let flows = to_customer_major(&relaxed, nc, nf);
        self.offer(&flows);
        children
    }

    fn find_conflict(&self, relaxed: &TransportSolution) -> Option<(usize, usize, usize)> {
        let model = self.model;
        for l in 0..model.nf() {
            for a in 0..model.nc() {
                if relaxed.flow(l, a) == 0 {
                    continue;
                }
                for &b in &model.conflicts[a] {
                    if b > a && relaxed.flow(l, b) > 0 {
                        return Some((a, b, l));
                    }
                }
            }
        }
        None
    }

    fn lagrangian(
        &mut self,
        fix: &[Fix],
        banned: &[bool],
        start: &[f64],
        start_average: &[f64],
        iterations: usize,
        root: bool,
    ) -> LagrangeResult {
        let patience = if root { 50 } else { 5 };
        let model = self.model;
        let nf = model.nf();
        let nc = model.nc();
        let target = self.upper_target();
        let mut u = start.to_vec();
        let mut best = LagrangeResult {
            value: f64::NEG_INFINITY,
            plain_value: f64::NEG_INFINITY,
            multipliers: u.clone(),
            reduced: vec![f64::INFINITY; nf],
            chosen: vec![false; nf],
            cover: vec![false; nf],
            average: start_average.to_vec(),
        };
        let total_demand: u64 = model.demand.iter().sum();
        let fixed_capacity: u64 = (0..nf).filter(|&l| fix[l] == Fix::Open).map(|l| model.cap[l]).sum();
        let need = total_demand.saturating_sub(fixed_capacity);
        let free_count = fix.iter().filter(|&&f| f == Fix::Free).count();
        let slots = model.open_limit.saturating_sub(fix.iter().filter(|&&f| f == Fix::Open).count());
        let table = free_count * (slots.min(free_count) + 1) * (need as usize + 1);
        let use_cover = need > 0 && need <= COVER_DEMAND_LIMIT && table <= COVER_TABLE_LIMIT;
        let mut cover = vec![false; nf];
        let mut items: Vec<(usize, f64, u64)> = Vec::with_capacity(nf);
        let mut take = Vec::new();
        let mut reduced = vec![f64::INFINITY; nf];
        let mut picks: Vec<Vec<(usize, u64)>> = vec![Vec::new(); nf];
        let mut order: Vec<usize> = Vec::with_capacity(nf);
        let mut chosen = vec![false; nf];
        let mut gradient = vec![0.0; nc];
        let mut theta = 2.0;
        let mut stall = 0;
        let base_open = fix.iter().filter(|&&f| f == Fix::Open).count();

        for iteration in 0..iterations.max(1) {
            for l in 0..nf {
                picks[l].clear();
                if fix[l] == Fix::Closed {
                    reduced[l] = f64::INFINITY;
                    continue;
                }
                self.scratch.clear();
                for k in 0..nc {
                    if banned[k * nf + l] {
                        continue;
                    }
                    let rc = model.cost[k * nf + l] - u[k];
                    if rc < 0.0 {
                        self.scratch.push((rc, k));
                    }
                }
                self.scratch
                    .sort_unstable_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let mut room = model.cap[l];
                let mut value = 0.0;
                for &(rc, k) in &self.scratch {
                    if room == 0 {
                        break;
                    }
                    let q = model.demand[k].min(room);
                    room -= q;
                    value += rc * q as f64;
                    picks[l].push((k, q));
                }
                reduced[l] = model.fixed_cost[l] + value;
            }

            let mut value: f64 = (0..nc).map(|k| u[k] * model.demand[k] as f64).sum();
            chosen.iter_mut().for_each(|c| *c = false);
            for l in 0..nf {
                if fix[l] == Fix::Open {
                    chosen[l] = true;
                    value += reduced[l];
                }
            }
            order.clear();
            order.extend((0..nf).filter(|&l| fix[l] == Fix::Free && reduced[l] < 0.0));
            order.sort_unstable_by(|&a, &b| reduced[a].total_cmp(&reduced[b]).then(a.cmp(&b)));
            let slots = model.open_limit.saturating_sub(base_open);
            for &l in order.iter().take(slots) {
                chosen[l] = true;
                value += reduced[l];
            }

            let plain = value;
            cover.copy_from_slice(&chosen);
            if use_cover {
                items.clear();
                items.extend((0..nf).filter(|&l| fix[l] == Fix::Free).map(|l| (l, reduced[l], model.cap[l])));
                match cover_knapsack(&items, need, slots, &mut take) {
                    Some((picked_value, picked)) => {
                        value -= order.iter().take(slots).map(|&l| reduced[l]).sum::<f64>();
                        value += picked_value;
                        for l in 0..nf {
                            cover[l] = fix[l] == Fix::Open;
                        }
                        for l in picked {
                            cover[l] = true;
                        }
                    }
                    None => value = f64::INFINITY,
                }
            }

            if value.is_finite() {
                let alpha = if root { (1.0 / (iteration + 1) as f64).max(0.05) } else { 0.1 };
                for l in 0..nf {
                    let y = if cover[l] { 1.0 } else { 0.0 };
                    best.average[l] += alpha * (y - best.average[l]);
                }
            }

            for k in 0..nc {
                gradient[k] = model.demand[k] as f64;
            }
            for l in 0..nf {
                if cover[l] {
                    for &(k, q) in &picks[l] {
                        gradient[k] -= q as f64;
                    }
                }
            }

            if value == f64::INFINITY {
                best.value = value;
                break;
            }
            if value > best.value + tolerance(value) * 1e-3 {
                best.value = value;
                best.plain_value = plain;
                best.multipliers.copy_from_slice(&u);
                best.reduced.copy_from_slice(&reduced);
                best.chosen.copy_from_slice(&chosen);
                best.cover.copy_from_slice(&cover);
                stall = 0;
            } else {
                stall += 1;
                if stall >= patience {
                    theta *= 0.5;
                    stall = 0;
                }
            }
            if self.prunable(best.value) || theta < 1e-6 {
                break;
            }
            let norm: f64 = gradient.iter().map(|g| g * g).sum();
            if norm == 0.0 {
                break;
            }
            let goal = match target {
                Some(t) if t > value => t,
                _ => value + (0.05 * value.abs()).max(1.0),
            };
            let step = theta * (goal - value) / norm;
            for k in 0..nc {
                u[k] += step * gradient[k];
            }
        }
        best
    }

    fn fix_by_reduced_cost(&self, fix: &mut [Fix], lag: &LagrangeResult) {
        let model = self.model;
        let base_open = fix.iter().filter(|&&f| f == Fix::Open).count();
        let free: Vec<usize> = (0..model.nf()).filter(|&l| fix[l] == Fix::Free).collect();
        let chosen_count = free.iter().filter(|&&l| lag.chosen[l]).count();
        let slots_left = model.open_limit.saturating_sub(base_open + chosen_count);
        let worst_chosen = free
            .iter()
            .filter(|&&l| lag.chosen[l])
            .map(|&l| lag.reduced[l])
            .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
        let best_waiting = free
            .iter()
            .filter(|&&l| !lag.chosen[l] && lag.reduced[l] < 0.0)
            .map(|&l| lag.reduced[l])
            .fold(0.0, f64::min);
        for l in free {
            let r = lag.reduced[l];
            if lag.chosen[l] {
                if self.prunable(lag.plain_value - r + best_waiting) {
                    fix[l] = Fix::Open;
                }
            } else {
                let alternative = if slots_left > 0 {
                    lag.plain_value + r.max(0.0)
                } else if let Some(w) = worst_chosen {
                    lag.plain_value + r - w
                } else {
                    f64::INFINITY
                };
                if self.prunable(alternative) {
                    fix[l] = Fix::Closed;
                }
            }
        }
    }

    /// Opens `open`, solves the true transportation problem, and resolves
    /// conflicts by banning the smaller arc of each offending pair for a
    /// few rounds. Each open set is tried once per search.
    fn try_open_set(&mut self, open: Vec<bool>) {
        let model = self.model;
        let nf = model.nf();
        let nc = model.nc();
        if open.iter().filter(|&&o| o).count() > model.open_limit || self.tried.contains(&open) {
            return;
        }
        let supplies: Vec<u64> = (0..nf).map(|l| if open[l] { model.cap[l] } else { 0 }).collect();
        self.tried.insert(open);
        let mut mask = model.banned.clone();
        for _ in 0..8 {
            let Some(sol) = self
                .transport
                .solve(&supplies, &model.demand, |l, k| (!mask[k * nf + l]).then(|| model.cost[k * nf + l]))
            else {
                return;
            };
            let mut changed = false;
            let mut dropped = vec![false; nc];
            for l in 0..nf {
                dropped.iter_mut().for_each(|d| *d = false);
                for a in 0..nc {
                    let qa = sol.flow(l, a);
                    if qa == 0 || dropped[a] {
                        continue;
                    }
                    for &b in &model.conflicts[a] {
                        let qb = sol.flow(l, b);
                        if b > a && qb > 0 && !dropped[b] {
                            let victim = if qa < qb { a } else { b };
                            mask[victim * nf + l] = true;
                            dropped[victim] = true;
                            changed = true;
                            if victim == a {
                                break;
                            }
                        }
                    }
                }
            }
            if model.two_source {
                for k in 0..nc {
                    let mut serving: Vec<(u64, usize)> = (0..nf)
                        .filter(|&l| sol.flow(l, k) > 0 && !mask[k * nf + l])
                        .map(|l| (sol.flow(l, k), l))
                        .collect();
                    if serving.len() > 2 {
                        serving.sort_unstable();
                        for &(_, l) in &serving[..serving.len() - 2] {
                            mask[k * nf + l] = true;
                        }
                        changed = true;
                    }
                }
            }
            if !changed {
                let flows = to_customer_major(&sol, nc, nf);
                self.offer(&flows);
                return;
            }
        }
    }

    /// Facilities used by a relaxation plus the ones fixed open.
    fn heuristic_from_load(&mut self, fix: &[Fix], load: &[u64]) {
        let open = (0..self.model.nf())
            .map(|l| fix[l] == Fix::Open || (fix[l] == Fix::Free && load[l] > 0))
            .collect();
        self.try_open_set(open);
    }

    /// Facilities picked by the Lagrangian sub-problem, topped up by
    /// reduced cost until their capacity covers the demand.
    fn heuristic_from_lagrange(&mut self, fix: &[Fix], lag: &LagrangeResult) {
        let model = self.model;
        let mut open = lag.cover.clone();
        let mut capacity: u64 = (0..model.nf()).filter(|&l| open[l]).map(|l| model.cap[l]).sum();
        let need: u64 = model.demand.iter().sum();
        if capacity < need {
            let mut extra: Vec<usize> = (0..model.nf())
                .filter(|&l| !open[l] && fix[l] == Fix::Free)
                .collect();
            extra.sort_by(|&a, &b| lag.reduced[a].total_cmp(&lag.reduced[b]).then(a.cmp(&b)));
            for l in extra {
                if capacity >= need {
                    break;
                }
                open[l] = true;
                capacity += model.cap[l];
            }
        }
        self.try_open_set(open);
    }

    /// Transportation relaxation where undecided facilities charge their
    /// opening cost per unit shipped.
    fn relax(&mut self, fix: &[Fix], banned: &[bool]) -> Option<TransportSolution> {
        let model = self.model;
        let nf = model.nf();
        let supplies: Vec<u64> = (0..nf)
            .map(|l| if fix[l] == Fix::Closed { 0 } else { model.cap[l] })
            .collect();
        self.transport.solve(&supplies, &model.demand, |l, k| {
            if banned[k * nf + l] {
                return None;
            }
            let amortized = match fix[l] {
                Fix::Free => model.fixed_cost[l] / model.cap[l] as f64,
                _ => 0.0,
            };
            Some(model.cost[k * nf + l] + amortized)
        })
    }
}

fn to_customer_major(sol: &TransportSolution, nc: usize, nf: usize) -> Vec<u64> {
    let mut flows = vec![0; nc * nf];
    for k in 0..nc {
        for l in 0..nf {
            flows[k * nf + l] = sol.flow(l, k);
        }
    }
    flows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::Clock;
    use crate::destroy::extract_subproblem;
    use crate::repair::solve_subproblem;
    use crate::solution::Solution;

    fn two_by_two() -> Instance {
        Instance::new(
            vec![3, 3],
            vec![5, 5],
            vec![10.0, 10.0],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            [],
        )
        .unwrap()
    }

    #[test]
    fn whole_two_by_two_is_26() {
        let inst = two_by_two();
        let sub = SubProblem::whole_instance(&inst);
        let out = solve_subproblem(&inst, &sub, &RepairParams::exact(), &Clock::wall());
        assert_eq!(out.status, RepairStatus::Improved);
        assert_eq!(out.cost, Some(26.0));
        assert_eq!(out.lower_bound, 26.0);
    }

    #[test]
    fn strict_cutoff_at_optimum_finds_nothing() {
        let inst = two_by_two();
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 1, 3)]).unwrap();
        let sub = extract_subproblem(&inst, &sol, &[0, 1], &[]);
        assert_eq!(sub.baseline_cost, 26.0);
        let params = RepairParams {
            cutoff: sub.baseline_cost,
            mode: AcceptMode::Strict,
            ..RepairParams::exact()
        };
        let out = solve_subproblem(&inst, &sub, &params, &Clock::wall());
        assert_eq!(out.status, RepairStatus::NoBetterFound);
        assert!(out.fragment.is_none());

        let weak = RepairParams {
            mode: AcceptMode::Weak,
            ..params
        };
        let out = solve_subproblem(&inst, &sub, &weak, &Clock::wall());
        assert_eq!(out.status, RepairStatus::Improved);
        assert_eq!(out.cost, Some(26.0));
    }

    #[test]
    fn infeasible_without_cutoff() {
        // Both customers incompatible and only one facility.
        let inst = Instance::new(vec![1, 1], vec![5], vec![1.0], vec![vec![1.0], vec![1.0]], [(0, 1)]).unwrap();
        let sub = SubProblem::whole_instance(&inst);
        let out = solve_subproblem(&inst, &sub, &RepairParams::exact(), &Clock::wall());
        assert_eq!(out.status, RepairStatus::Infeasible);
    }

    #[test]
    fn two_source_limits_suppliers() {
        // One customer of demand 9 and three facilities of capacity 3 plus an
        // expensive large one.
        let inst = Instance::new(
            vec![9],
            vec![3, 3, 3, 9],
            vec![0.0, 0.0, 0.0, 0.0],
            vec![vec![1.0, 1.0, 1.0, 5.0]],
            [],
        )
        .unwrap();
        let sub = SubProblem::whole_instance(&inst);
        let free = solve_subproblem(&inst, &sub, &RepairParams::exact(), &Clock::wall());
        assert_eq!(free.cost, Some(9.0));
        let params = RepairParams {
            two_source: true,
            ..RepairParams::exact()
        };
        let out = solve_subproblem(&inst, &sub, &params, &Clock::wall());
        let frag = out.fragment.unwrap();
        assert!(frag.shipments.len() <= 2);
        // One unit-cost facility (3 units) plus 6 units at cost 5.
        assert_eq!(out.cost, Some(33.0));
    }

    #[test]
    fn node_limit_reports_timeout() {
        let inst = crate::generate::generate_instance(5, &crate::generate::GeneratorConfig::new(40, 12, 0.05));
        let sub = SubProblem::whole_instance(&inst);
        let params = RepairParams {
            node_limit: Some(1),
            ..RepairParams::exact()
        };
        let out = solve_subproblem(&inst, &sub, &params, &Clock::wall());
        assert!(out.timed_out);
        assert!(out.lower_bound <= out.cost.unwrap_or(f64::INFINITY));
    }
}
