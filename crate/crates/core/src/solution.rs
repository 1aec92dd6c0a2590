//! Shipment matrix with the auxiliary indices used by the search: open and
//! closed facility sets, per-facility customer lists, per-customer serving
//! facilities with quantities, residual capacities and the cached objective.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::destroy::{Fragment, FragmentError, SubProblem};
use crate::instance::Instance;

/// Relative tolerance for comparing the cached objective with a recount.
pub const COST_TOLERANCE: f64 = 1e-6;

/// Units shipped from one facility to one customer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shipment {
    pub facility: usize,
    pub quantity: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Solution {
    /// Per customer: serving facilities with quantities (`a_i`, `q_i`).
    assigned: Vec<Vec<Shipment>>,
    /// Per facility: customers with a positive shipment (`C_f`).
    served: Vec<Vec<usize>>,
    load: Vec<u64>,
    open: Vec<bool>,
    open_count: usize,
    cost: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SolutionError {
    #[error("shipment ({customer}, {facility}) is out of range")]
    OutOfRange { customer: usize, facility: usize },
    #[error("shipment ({customer}, {facility}) has zero quantity")]
    ZeroQuantity { customer: usize, facility: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Objective of an arbitrary shipment list: shipping cost plus the opening
/// cost of every facility that ships something.
pub fn evaluate(inst: &Instance, shipments: impl IntoIterator<Item = (usize, usize, u64)>) -> f64 {
    let mut used = vec![false; inst.num_facilities()];
    let mut shipping = 0.0;
    for (i, j, q) in shipments {
        if q > 0 {
            shipping += inst.ship_cost(i, j) * q as f64;
            used[j] = true;
        }
    }
    let opening: f64 = used
        .iter()
        .enumerate()
        .filter(|(_, &u)| u)
        .map(|(j, _)| inst.opening_cost(j))
        .sum();
    shipping + opening
}

/// A broken constraint or an inconsistent index.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    DemandMismatch {
        customer: usize,
        shipped: u64,
        demand: u64,
    },
    CapacityExceeded {
        facility: usize,
        load: u64,
        capacity: u64,
    },
    ShipsWhileClosed {
        facility: usize,
    },
    OpenWithoutCustomers {
        facility: usize,
    },
    Incompatible {
        first: usize,
        second: usize,
        facility: usize,
    },
    IndexMismatch {
        detail: String,
    },
    CostDrift {
        cached: f64,
        recomputed: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DemandMismatch {
                customer,
                shipped,
                demand,
            } => write!(
                f,
                "demand: customer {customer} receives {shipped} of {demand}"
            ),
            Violation::CapacityExceeded {
                facility,
                load,
                capacity,
            } => write!(f, "capacity: facility {facility} ships {load} > {capacity}"),
            Violation::ShipsWhileClosed { facility } => {
                write!(f, "open: closed facility {facility} ships goods")
            }
            Violation::OpenWithoutCustomers { facility } => {
                write!(f, "open: facility {facility} is open without customers")
            }
            Violation::Incompatible {
                first,
                second,
                facility,
            } => write!(
                f,
                "incompatibility: customers {first} and {second} share facility {facility}"
            ),
            Violation::IndexMismatch { detail } => write!(f, "index: {detail}"),
            Violation::CostDrift { cached, recomputed } => {
                write!(f, "cost: cached {cached} but recomputed {recomputed}")
            }
        }
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

impl Solution {
    /// A solution with nothing shipped and every facility closed.
    pub fn empty(inst: &Instance) -> Self {
        Self {
            assigned: vec![Vec::new(); inst.num_customers()],
            served: vec![Vec::new(); inst.num_facilities()],
            load: vec![0; inst.num_facilities()],
            open: vec![false; inst.num_facilities()],
            open_count: 0,
            cost: 0.0,
        }
    }

    /// Builds the indices for a shipment list. Repeated `(i, j)` entries are
    /// summed. No feasibility check is made; use [`audit`] for that.
    pub fn from_shipments(
        inst: &Instance,
        shipments: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self, SolutionError> {
        let mut merged: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (customer, facility, quantity) in shipments {
            if customer >= inst.num_customers() || facility >= inst.num_facilities() {
                return Err(SolutionError::OutOfRange { customer, facility });
            }
            if quantity == 0 {
                return Err(SolutionError::ZeroQuantity { customer, facility });
            }
            *merged.entry((customer, facility)).or_default() += quantity;
        }
        let mut sol = Self::empty(inst);
        for ((i, j), q) in merged {
            sol.add(inst, i, j, q);
        }
        Ok(sol)
    }

    #[inline]
    pub fn cost(&self) -> f64 {
        self.cost
    }

    #[inline]
    pub fn is_open(&self, facility: usize) -> bool {
        self.open[facility]
    }

    #[inline]
    pub fn open_count(&self) -> usize {
        self.open_count
    }

    /// Open facilities (`F`) in increasing index order.
    pub fn open_facilities(&self) -> Vec<usize> {
        (0..self.open.len()).filter(|&j| self.open[j]).collect()
    }

    /// Closed facilities (`G`) in increasing index order.
    pub fn closed_facilities(&self) -> Vec<usize> {
        (0..self.open.len()).filter(|&j| !self.open[j]).collect()
    }

    /// Customers with a positive shipment from `facility` (`C_f`).
    #[inline]
    pub fn customers_of(&self, facility: usize) -> &[usize] {
        &self.served[facility]
    }

    /// Serving facilities of `customer` with their quantities (`a_i`, `q_i`).
    #[inline]
    pub fn assignments(&self, customer: usize) -> &[Shipment] {
        &self.assigned[customer]
    }

    pub fn quantity(&self, customer: usize, facility: usize) -> u64 {
        self.assigned[customer]
            .iter()
            .find(|s| s.facility == facility)
            .map_or(0, |s| s.quantity)
    }

    #[inline]
    pub fn load(&self, facility: usize) -> u64 {
        self.load[facility]
    }

    pub fn residual(&self, inst: &Instance, facility: usize) -> i64 {
        inst.capacity(facility) as i64 - self.load[facility] as i64
    }

    /// All positive shipments as `(customer, facility, quantity)`, ordered by
    /// customer then facility.
    pub fn shipments(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.assigned.iter().enumerate().flat_map(|(i, list)| {
            let mut list = list.clone();
            list.sort_by_key(|s| s.facility);
            list.into_iter().map(move |s| (i, s.facility, s.quantity))
        })
    }

    /// Adds `quantity` units on `(customer, facility)`, opening the facility
    /// if needed and updating the cached cost.
    pub(crate) fn add(&mut self, inst: &Instance, customer: usize, facility: usize, quantity: u64) {
        if quantity == 0 {
            return;
        }
        match self.assigned[customer]
            .iter_mut()
            .find(|s| s.facility == facility)
        {
            Some(s) => s.quantity += quantity,
            None => {
                self.assigned[customer].push(Shipment { facility, quantity });
                self.served[facility].push(customer);
            }
        }
        self.load[facility] += quantity;
        self.cost += inst.ship_cost(customer, facility) * quantity as f64;
        if !self.open[facility] {
            self.open[facility] = true;
            self.open_count += 1;
            self.cost += inst.opening_cost(facility);
        }
    }

    /// Removes every shipment of `customer`, closing facilities left empty.
    fn clear_customer(&mut self, inst: &Instance, customer: usize) {
        for s in std::mem::take(&mut self.assigned[customer]) {
            let j = s.facility;
            self.load[j] -= s.quantity;
            self.cost -= inst.ship_cost(customer, j) * s.quantity as f64;
            let list = &mut self.served[j];
            if let Some(pos) = list.iter().position(|&c| c == customer) {
                list.swap_remove(pos);
            }
            if list.is_empty() && self.open[j] {
                self.open[j] = false;
                self.open_count -= 1;
                self.cost -= inst.opening_cost(j);
            }
        }
    }

    /// Replaces the assignment of the sub-problem customers with `fragment`.
    /// Shipments of every other customer stay as they are. The fragment is
    /// checked against the sub-problem first; on error nothing changes.
    /// Returns the change in objective.
    pub fn apply_repair(
        &mut self,
        inst: &Instance,
        sub: &SubProblem,
        fragment: &Fragment,
    ) -> Result<f64, FragmentError> {
        sub.check_fragment(inst, fragment)?;
        let before = self.cost;
        for &i in &sub.customers {
            self.clear_customer(inst, i);
        }
        for &(i, j, q) in &fragment.shipments {
            self.add(inst, i, j, q);
        }
        Ok(self.cost - before)
    }

    /// Recomputes the cached objective from the shipments.
    pub fn recompute_cost(&self, inst: &Instance) -> f64 {
        evaluate(inst, self.shipments())
    }

    /// Parses the format written by `Display`: the objective on the first
    /// line, then `i j quantity` lines with 1-based indices.
    pub fn parse(inst: &Instance, text: &str) -> Result<Self, SolutionError> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let parse_err = |line: usize, message: String| SolutionError::Parse {
            line: line + 1,
            message,
        };
        let (idx, first) = lines
            .next()
            .ok_or_else(|| parse_err(0, "missing objective line".into()))?;
        first
            .trim()
            .parse::<f64>()
            .map_err(|_| parse_err(idx, format!("bad objective `{}`", first.trim())))?;
        let mut shipments = Vec::new();
        for (idx, line) in lines {
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [i, j, q] = fields[..] else {
                return Err(parse_err(idx, "expected `i j quantity`".into()));
            };
            let num = |tok: &str| {
                tok.parse::<usize>()
                    .ok()
                    .filter(|&v| v > 0)
                    .ok_or_else(|| parse_err(idx, format!("bad index `{tok}`")))
            };
            let q = q
                .parse::<u64>()
                .map_err(|_| parse_err(idx, format!("bad quantity `{q}`")))?;
            shipments.push((num(i)? - 1, num(j)? - 1, q));
        }
        Self::from_shipments(inst, shipments)
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.cost)?;
        for (i, j, q) in self.shipments() {
            writeln!(f, "{} {} {}", i + 1, j + 1, q)?;
        }
        Ok(())
    }
}

/// Lists every broken constraint and every auxiliary index that disagrees
/// with the shipments. Empty means the solution is feasible and consistent.
pub fn audit(inst: &Instance, sol: &Solution) -> Vec<Violation> {
    let n = inst.num_customers();
    let m = inst.num_facilities();
    let mut out = Vec::new();
    if sol.assigned.len() != n || sol.served.len() != m {
        out.push(Violation::IndexMismatch {
            detail: "solution dimensions differ from the instance".into(),
        });
        return out;
    }

    let mut load = vec![0u64; m];
    let mut users: Vec<Vec<usize>> = vec![Vec::new(); m];
    for (i, list) in sol.assigned.iter().enumerate() {
        let mut shipped = 0;
        for s in list {
            if s.quantity == 0 {
                out.push(Violation::IndexMismatch {
                    detail: format!("zero shipment stored for customer {i}"),
                });
            }
            shipped += s.quantity;
            load[s.facility] += s.quantity;
            users[s.facility].push(i);
        }
        if shipped != inst.demand(i) {
            out.push(Violation::DemandMismatch {
                customer: i,
                shipped,
                demand: inst.demand(i),
            });
        }
    }

    let mut open_count = 0;
    for j in 0..m {
        if load[j] > inst.capacity(j) {
            out.push(Violation::CapacityExceeded {
                facility: j,
                load: load[j],
                capacity: inst.capacity(j),
            });
        }
        if load[j] != sol.load[j] {
            out.push(Violation::IndexMismatch {
                detail: format!("facility {j} load {} but shipments sum to {}", sol.load[j], load[j]),
            });
        }
        let mut listed = sol.served[j].clone();
        listed.sort_unstable();
        users[j].sort_unstable();
        if listed != users[j] {
            out.push(Violation::IndexMismatch {
                detail: format!("customer list of facility {j} is stale"),
            });
        }
        if sol.open[j] {
            open_count += 1;
            if users[j].is_empty() {
                out.push(Violation::OpenWithoutCustomers { facility: j });
            }
        } else if !users[j].is_empty() {
            out.push(Violation::ShipsWhileClosed { facility: j });
        }
        for (a_pos, &a) in users[j].iter().enumerate() {
            for &b in &users[j][a_pos + 1..] {
                if inst.are_incompatible(a, b) {
                    out.push(Violation::Incompatible {
                        first: a,
                        second: b,
                        facility: j,
                    });
                }
            }
        }
    }
    if open_count != sol.open_count {
        out.push(Violation::IndexMismatch {
            detail: format!("open count {} but {open_count} flags set", sol.open_count),
        });
    }

    let recomputed = sol.recompute_cost(inst);
    if relative_gap(sol.cost, recomputed) > COST_TOLERANCE {
        out.push(Violation::CostDrift {
            cached: sol.cost,
            recomputed,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn two_by_two(pairs: &[(usize, usize)]) -> Instance {
        Instance::new(
            vec![3, 3],
            vec![5, 5],
            vec![10.0, 10.0],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            pairs.iter().copied(),
        )
        .unwrap()
    }

    #[test]
    fn evaluates_objective() {
        let inst = two_by_two(&[]);
        assert_eq!(evaluate(&inst, [(0, 0, 3), (1, 1, 3)]), 26.0);
        assert_eq!(evaluate(&inst, []), 0.0);

        let single = Instance::new(vec![4], vec![4], vec![5.0], vec![vec![2.0]], []).unwrap();
        assert_eq!(evaluate(&single, [(0, 0, 4)]), 13.0);
    }

    #[test]
    fn two_by_two_optimum_by_enumeration() {
        // Every split (a, b) of customer 1 and (c, d) of customer 2 with
        // quantities to facility 1 / facility 2.
        let inst = two_by_two(&[]);
        let mut best = f64::INFINITY;
        for a in 0..=3u64 {
            for c in 0..=3u64 {
                let load1 = a + c;
                let load2 = (3 - a) + (3 - c);
                if load1 > 5 || load2 > 5 {
                    continue;
                }
                let ships = [(0, 0, a), (0, 1, 3 - a), (1, 0, c), (1, 1, 3 - c)];
                best = best.min(evaluate(&inst, ships));
            }
        }
        assert_eq!(best, 26.0);
    }

    #[test]
    fn audit_accepts_feasible_solution() {
        let inst = two_by_two(&[(0, 1)]);
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 1, 3)]).unwrap();
        assert_eq!(sol.cost(), 26.0);
        assert!(audit(&inst, &sol).is_empty());
        assert_eq!(sol.open_facilities(), vec![0, 1]);
        assert_eq!(sol.residual(&inst, 0), 2);
    }

    #[test]
    fn audit_flags_incompatible_customers() {
        let inst = Instance::new(
            vec![3, 3],
            vec![6, 5],
            vec![10.0, 10.0],
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            [(0, 1)],
        )
        .unwrap();
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 0, 3)]).unwrap();
        let violations = audit(&inst, &sol);
        assert_eq!(
            violations,
            vec![Violation::Incompatible {
                first: 0,
                second: 1,
                facility: 0
            }]
        );
    }

    #[test]
    fn audit_flags_shortfall() {
        let inst = two_by_two(&[]);
        let sol = Solution::from_shipments(&inst, [(0, 0, 2), (1, 1, 3)]).unwrap();
        assert!(audit(&inst, &sol).contains(&Violation::DemandMismatch {
            customer: 0,
            shipped: 2,
            demand: 3
        }));
    }

    #[test]
    fn audit_flags_capacity_and_stale_indices() {
        let inst = two_by_two(&[]);
        let mut sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 0, 3)]).unwrap();
        assert!(audit(&inst, &sol)
            .iter()
            .any(|v| matches!(v, Violation::CapacityExceeded { facility: 0, .. })));
        sol.cost += 1.0;
        sol.open[1] = true;
        let found = audit(&inst, &sol);
        assert!(found.iter().any(|v| matches!(v, Violation::CostDrift { .. })));
        assert!(found.contains(&Violation::OpenWithoutCustomers { facility: 1 }));
    }

    #[test]
    fn serialization_round_trips() {
        let inst = two_by_two(&[]);
        let sol = Solution::from_shipments(&inst, [(0, 0, 2), (0, 1, 1), (1, 1, 3)]).unwrap();
        let text = sol.to_string();
        assert!(text.starts_with("27\n1 1 2\n1 2 1\n2 2 3\n"), "{text}");
        assert_eq!(Solution::parse(&inst, &text).unwrap(), sol);
    }

    #[test]
    fn rejects_bad_shipments() {
        let inst = two_by_two(&[]);
        assert!(matches!(
            Solution::from_shipments(&inst, [(2, 0, 1)]),
            Err(SolutionError::OutOfRange { .. })
        ));
        assert!(matches!(
            Solution::from_shipments(&inst, [(0, 0, 0)]),
            Err(SolutionError::ZeroQuantity { .. })
        ));
    }
}
