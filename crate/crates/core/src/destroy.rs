//! Destroy operators and sub-problem extraction.
//!
//! A destroy step picks a group of open facilities, takes all their
//! customers, adds some closed facilities, and hands the resulting fragment
//! to the repair solver. Facilities that serve a selected customer are always
//! pulled into the fragment; their shipments to unselected customers stay
//! frozen and keep them open.

use std::collections::BTreeSet;

use rand::seq::index::sample;
use rand::Rng;
use thiserror::Error;

use crate::instance::Instance;
use crate::solution::Solution;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DestroyOperator {
    /// CF: a random open facility plus the open facilities that serve its
    /// customers most cheaply on average.
    CheapestFacilities,
    /// HC: cheapest-customers half plus expensive-customer half.
    HybridCustomers,
}

impl DestroyOperator {
    pub const ALL: [DestroyOperator; 2] = [
        DestroyOperator::CheapestFacilities,
        DestroyOperator::HybridCustomers,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DestroyOperator::CheapestFacilities => "CF",
            DestroyOperator::HybridCustomers => "HC",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedStrategy {
    /// R: uniform sample of closed facilities.
    Random,
    /// MC: closed facilities with the lowest average shipping cost to the
    /// sub-problem customers.
    MinCost,
}

#[derive(Debug, Error, PartialEq)]
pub enum DestroyError {
    #[error("quality is undefined for an empty customer set")]
    EmptyCustomerSet,
    #[error("the solution has no open facility")]
    NoOpenFacility,
}

/// A facility that the repair may re-decide.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubFacility {
    pub id: usize,
    pub was_open: bool,
    /// Units committed to customers outside the sub-problem.
    pub frozen_load: u64,
}

impl SubFacility {
    /// Facilities with frozen shipments cannot close.
    #[inline]
    pub fn forced_open(&self) -> bool {
        self.frozen_load > 0
    }
}

/// Self-contained fragment handed to the repair solver.
#[derive(Clone, Debug, PartialEq)]
pub struct SubProblem {
    /// Customers whose whole assignment is re-decided, sorted.
    pub customers: Vec<usize>,
    /// Re-decidable facilities, sorted by id.
    pub facilities: Vec<SubFacility>,
    /// `(customer, facility)` arcs banned because the facility keeps a frozen
    /// customer incompatible with that customer. Sorted.
    pub forbidden: Vec<(usize, usize)>,
    /// Incompatible pairs with both customers in the sub-problem.
    pub incompat: Vec<(usize, usize)>,
    /// Upper limit on facilities open after repair (forced-open included).
    pub open_limit: Option<usize>,
    /// Shipping cost of the current assignment of `customers` plus the
    /// opening cost of every currently open, non-forced facility.
    pub baseline_cost: f64,
}

/// New assignment for the customers of a sub-problem.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Fragment {
    /// `(customer, facility, quantity)` with global indices.
    pub shipments: Vec<(usize, usize, u64)>,
}

#[derive(Debug, Error, PartialEq)]
pub enum FragmentError {
    #[error("customer {0} is not part of the sub-problem")]
    ForeignCustomer(usize),
    #[error("facility {0} is not part of the sub-problem")]
    ForeignFacility(usize),
    #[error("zero shipment on ({0}, {1})")]
    ZeroQuantity(usize, usize),
    #[error("customer {customer} receives {shipped} of {demand}")]
    Demand {
        customer: usize,
        shipped: u64,
        demand: u64,
    },
    #[error("facility {facility} receives {load} units but only {available} are free")]
    Capacity {
        facility: usize,
        load: u64,
        available: u64,
    },
    #[error("arc ({0}, {1}) is forbidden")]
    Forbidden(usize, usize),
    #[error("incompatible customers {0} and {1} share facility {2}")]
    Incompatible(usize, usize, usize),
    #[error("{open} facilities open, limit {limit}")]
    OpenLimit { open: usize, limit: usize },
}

impl SubProblem {
    /// The whole instance as one sub-problem: every customer and facility,
    /// nothing frozen, no open limit and no cutoff.
    pub fn whole_instance(inst: &Instance) -> Self {
        Self {
            customers: (0..inst.num_customers()).collect(),
            facilities: (0..inst.num_facilities())
                .map(|id| SubFacility {
                    id,
                    was_open: false,
                    frozen_load: 0,
                })
                .collect(),
            forbidden: Vec::new(),
            incompat: inst.incompatible_pairs().to_vec(),
            open_limit: None,
            baseline_cost: f64::INFINITY,
        }
    }

    /// `o`: facilities tagged open at extraction.
    pub fn open_tagged(&self) -> usize {
        self.facilities.iter().filter(|f| f.was_open).count()
    }

    pub fn facility_position(&self, id: usize) -> Option<usize> {
        self.facilities.binary_search_by_key(&id, |f| f.id).ok()
    }

    pub fn contains_customer(&self, customer: usize) -> bool {
        self.customers.binary_search(&customer).is_ok()
    }

    pub fn is_forbidden(&self, customer: usize, facility: usize) -> bool {
        self.forbidden.binary_search(&(customer, facility)).is_ok()
    }

    /// Cost of a fragment under the sub-problem objective: shipping plus the
    /// opening cost of used facilities that are not forced open.
    pub fn fragment_cost(&self, inst: &Instance, fragment: &Fragment) -> f64 {
        let mut used = BTreeSet::new();
        let mut cost = 0.0;
        for &(i, j, q) in &fragment.shipments {
            cost += inst.ship_cost(i, j) * q as f64;
            used.insert(j);
        }
        for j in used {
            match self.facility_position(j) {
                Some(pos) if self.facilities[pos].forced_open() => {}
                _ => cost += inst.opening_cost(j),
            }
        }
        cost
    }

    /// Checks every sub-problem constraint and returns the fragment cost.
    pub fn check_fragment(&self, inst: &Instance, fragment: &Fragment) -> Result<f64, FragmentError> {
        let mut shipped = vec![0u64; self.customers.len()];
        let mut load = vec![0u64; self.facilities.len()];
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); self.facilities.len()];
        for &(i, j, q) in &fragment.shipments {
            let ci = self
                .customers
                .binary_search(&i)
                .map_err(|_| FragmentError::ForeignCustomer(i))?;
            let fj = self
                .facility_position(j)
                .ok_or(FragmentError::ForeignFacility(j))?;
            if q == 0 {
                return Err(FragmentError::ZeroQuantity(i, j));
            }
            if self.is_forbidden(i, j) {
                return Err(FragmentError::Forbidden(i, j));
            }
            shipped[ci] += q;
            load[fj] += q;
            users[fj].push(i);
        }
        for (ci, &i) in self.customers.iter().enumerate() {
            if shipped[ci] != inst.demand(i) {
                return Err(FragmentError::Demand {
                    customer: i,
                    shipped: shipped[ci],
                    demand: inst.demand(i),
                });
            }
        }
        let mut open = 0;
        for (fj, fac) in self.facilities.iter().enumerate() {
            let available = inst.capacity(fac.id) - fac.frozen_load;
            if load[fj] > available {
                return Err(FragmentError::Capacity {
                    facility: fac.id,
                    load: load[fj],
                    available,
                });
            }
            if load[fj] > 0 || fac.forced_open() {
                open += 1;
            }
            let list = &mut users[fj];
            list.sort_unstable();
            list.dedup();
            for (pos, &a) in list.iter().enumerate() {
                for &b in &list[pos + 1..] {
                    if inst.are_incompatible(a, b) {
                        return Err(FragmentError::Incompatible(a, b, fac.id));
                    }
                }
            }
        }
        if let Some(limit) = self.open_limit {
            if open > limit {
                return Err(FragmentError::OpenLimit { open, limit });
            }
        }
        Ok(self.fragment_cost(inst, fragment))
    }

    /// The current assignment of the sub-problem customers.
    pub fn current_fragment(&self, sol: &Solution) -> Fragment {
        let shipments = self
            .customers
            .iter()
            .flat_map(|&i| {
                sol.assignments(i)
                    .iter()
                    .map(move |s| (i, s.facility, s.quantity))
            })
            .collect();
        Fragment { shipments }
    }
}

/// Average unit shipping cost from `facility` to `customers` (the Q measure).
pub fn facility_quality(inst: &Instance, facility: usize, customers: &[usize]) -> Result<f64, DestroyError> {
    if customers.is_empty() {
        return Err(DestroyError::EmptyCustomerSet);
    }
    let total: f64 = customers.iter().map(|&i| inst.ship_cost(i, facility)).sum();
    Ok(total / customers.len() as f64)
}

/// Sorts `(score, facility)` ascending with index tie-break and keeps the
/// first `count` facilities.
fn lowest(mut scored: Vec<(f64, usize)>, count: usize) -> Vec<usize> {
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(count).map(|(_, j)| j).collect()
}

fn random_open<R: Rng + ?Sized>(sol: &Solution, rng: &mut R) -> Result<usize, DestroyError> {
    let open = sol.open_facilities();
    if open.is_empty() {
        return Err(DestroyError::NoOpenFacility);
    }
    Ok(open[rng.gen_range(0..open.len())])
}

/// Open facilities chosen by a destroy operator.
#[derive(Clone, Debug, PartialEq)]
pub struct OpenSelection {
    /// The randomly drawn facility `f`.
    pub seed: usize,
    /// All selected open facilities, `seed` included, sorted.
    pub facilities: Vec<usize>,
}

/// Number of open facilities to destroy: `max(1, round(nu * |F| / n))`,
/// rounding halves up.
pub fn destroy_size(nu: f64, open_count: usize, customers: usize) -> usize {
    assert!(customers > 0, "destroy size needs at least one customer");
    let raw = nu * open_count as f64 / customers as f64;
    ((raw + 0.5).floor() as usize).max(1)
}

/// CF operator: a random open facility `f` plus the `l_open` other open
/// facilities with the lowest average shipping cost to the customers of `f`.
pub fn destroy_cheapest_facilities<R: Rng + ?Sized>(
    inst: &Instance,
    sol: &Solution,
    l_open: usize,
    rng: &mut R,
) -> Result<OpenSelection, DestroyError> {
    let seed = random_open(sol, rng)?;
    let base = sol.customers_of(seed);
    let mut scored = Vec::new();
    for j in sol.open_facilities() {
        if j != seed {
            scored.push((facility_quality(inst, j, base)?, j));
        }
    }
    let mut facilities = lowest(scored, l_open);
    facilities.push(seed);
    facilities.sort_unstable();
    Ok(OpenSelection { seed, facilities })
}

/// Parts chosen by the HC operator.
#[derive(Clone, Debug, PartialEq)]
pub struct HybridSelection {
    pub seed: usize,
    /// CC half: open facilities whose customers are cheapest to serve from
    /// the seed facility.
    pub cheapest_customers: Vec<usize>,
    /// Most expensive customer of the seed facility.
    pub expensive_customer: usize,
    /// Facilities currently serving the expensive customer.
    pub expensive_servers: Vec<usize>,
    /// EC half: cheapest open facilities for the expensive customer.
    pub expensive_customer_picks: Vec<usize>,
}

impl HybridSelection {
    pub fn into_selection(self) -> OpenSelection {
        let mut all: BTreeSet<usize> = BTreeSet::new();
        all.insert(self.seed);
        all.extend(self.expensive_servers);
        all.extend(self.cheapest_customers);
        all.extend(self.expensive_customer_picks);
        OpenSelection {
            seed: self.seed,
            facilities: all.into_iter().collect(),
        }
    }
}

/// HC operator. CC ranks every other open facility by the average cost of
/// its own customers against the seed facility's cost column; EC takes the
/// seed's costliest customer and the open facilities cheapest for it,
/// skipping the seed, the customer's current servers and the CC picks.
pub fn destroy_hybrid_customers<R: Rng + ?Sized>(
    inst: &Instance,
    sol: &Solution,
    l_open: usize,
    rng: &mut R,
) -> Result<HybridSelection, DestroyError> {
    let seed = random_open(sol, rng)?;
    let half = l_open / 2;
    let open = sol.open_facilities();

    let mut scored = Vec::new();
    for &g in &open {
        if g != seed {
            scored.push((facility_quality(inst, seed, sol.customers_of(g))?, g));
        }
    }
    let cheapest_customers = lowest(scored, half);

    let expensive_customer = sol
        .customers_of(seed)
        .iter()
        .copied()
        .max_by(|&a, &b| {
            inst.ship_cost(a, seed)
                .total_cmp(&inst.ship_cost(b, seed))
                .then(b.cmp(&a))
        })
        .ok_or(DestroyError::NoOpenFacility)?;
    let mut expensive_servers: Vec<usize> = sol
        .assignments(expensive_customer)
        .iter()
        .map(|s| s.facility)
        .collect();
    expensive_servers.sort_unstable();

    let scored = open
        .iter()
        .copied()
        .filter(|&g| {
            g != seed && !expensive_servers.contains(&g) && !cheapest_customers.contains(&g)
        })
        .map(|g| (inst.ship_cost(expensive_customer, g), g))
        .collect();
    let expensive_customer_picks = lowest(scored, half);

    Ok(HybridSelection {
        seed,
        cheapest_customers,
        expensive_customer,
        expensive_servers,
        expensive_customer_picks,
    })
}

/// Runs the given operator and returns the selected open facilities.
pub fn destroy_open<R: Rng + ?Sized>(
    op: DestroyOperator,
    inst: &Instance,
    sol: &Solution,
    l_open: usize,
    rng: &mut R,
) -> Result<OpenSelection, DestroyError> {
    match op {
        DestroyOperator::CheapestFacilities => destroy_cheapest_facilities(inst, sol, l_open, rng),
        DestroyOperator::HybridCustomers => {
            destroy_hybrid_customers(inst, sol, l_open, rng).map(HybridSelection::into_selection)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClosedSelection {
    pub strategy: ClosedStrategy,
    pub facilities: Vec<usize>,
}

/// Picks up to `l_closed` closed facilities: MC with probability `p_mc`,
/// otherwise R. When fewer are closed, all of them are returned.
pub fn select_closed<R: Rng + ?Sized>(
    inst: &Instance,
    sol: &Solution,
    customers: &[usize],
    l_closed: usize,
    p_mc: f64,
    rng: &mut R,
) -> ClosedSelection {
    let strategy = if rng.gen_bool(p_mc.clamp(0.0, 1.0)) {
        ClosedStrategy::MinCost
    } else {
        ClosedStrategy::Random
    };
    let closed = sol.closed_facilities();
    let mut facilities = if closed.len() <= l_closed {
        closed
    } else {
        match strategy {
            ClosedStrategy::MinCost if !customers.is_empty() => {
                let scored = closed
                    .iter()
                    .map(|&g| (facility_quality(inst, g, customers).unwrap_or(0.0), g))
                    .collect();
                lowest(scored, l_closed)
            }
            _ => sample(rng, closed.len(), l_closed)
                .into_iter()
                .map(|idx| closed[idx])
                .collect(),
        }
    };
    facilities.sort_unstable();
    ClosedSelection {
        strategy,
        facilities,
    }
}

/// Customers of the selected open facilities, sorted.
pub fn selected_customers(sol: &Solution, open: &[usize]) -> Vec<usize> {
    let set: BTreeSet<usize> = open
        .iter()
        .flat_map(|&j| sol.customers_of(j).iter().copied())
        .collect();
    set.into_iter().collect()
}

/// Builds the sub-problem for the selected facilities. Every facility serving
/// a selected customer joins; its shipments to other customers are frozen.
pub fn extract_subproblem(inst: &Instance, sol: &Solution, open: &[usize], closed: &[usize]) -> SubProblem {
    let customers = selected_customers(sol, open);
    let mut ids: BTreeSet<usize> = open.iter().chain(closed).copied().collect();
    for &i in &customers {
        ids.extend(sol.assignments(i).iter().map(|s| s.facility));
    }
    let in_sub = |i: usize| customers.binary_search(&i).is_ok();

    let facilities: Vec<SubFacility> = ids
        .iter()
        .map(|&j| {
            let frozen_load = sol
                .customers_of(j)
                .iter()
                .filter(|&&i| !in_sub(i))
                .map(|&i| sol.quantity(i, j))
                .sum();
            SubFacility {
                id: j,
                was_open: sol.is_open(j),
                frozen_load,
            }
        })
        .collect();

    let mut forbidden = BTreeSet::new();
    let mut incompat = Vec::new();
    for &i in &customers {
        for &other in inst.conflicts(i) {
            if in_sub(other) {
                if i < other {
                    incompat.push((i, other));
                }
                continue;
            }
            for s in sol.assignments(other) {
                if ids.contains(&s.facility) {
                    forbidden.insert((i, s.facility));
                }
            }
        }
    }

    let mut baseline_cost: f64 = customers
        .iter()
        .flat_map(|&i| {
            sol.assignments(i)
                .iter()
                .map(move |s| inst.ship_cost(i, s.facility) * s.quantity as f64)
        })
        .sum();
    baseline_cost += facilities
        .iter()
        .filter(|f| f.was_open && !f.forced_open())
        .map(|f| inst.opening_cost(f.id))
        .sum::<f64>();

    let open_tagged = facilities.iter().filter(|f| f.was_open).count();
    SubProblem {
        customers,
        facilities,
        forbidden: forbidden.into_iter().collect(),
        incompat,
        open_limit: Some(open_tagged + 2),
        baseline_cost,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Three customers and four facilities on a line.
    fn line_instance() -> Instance {
        // costs[i][j] = |pos_i - pos_j| + 1
        let cust = [0.0, 4.0, 9.0];
        let fac = [0.0, 3.0, 5.0, 10.0];
        let costs = cust
            .iter()
            .map(|c: &f64| fac.iter().map(|f: &f64| (c - f).abs() + 1.0).collect())
            .collect();
        Instance::new(vec![3, 3, 3], vec![6, 6, 6, 6], vec![5.0, 6.0, 7.0, 8.0], costs, [(1, 2)])
            .unwrap()
    }

    #[test]
    fn quality_is_average_cost() {
        let inst = Instance::new(
            vec![1, 1],
            vec![2],
            vec![0.0],
            vec![vec![2.0], vec![4.0]],
            [],
        )
        .unwrap();
        assert_eq!(facility_quality(&inst, 0, &[0, 1]), Ok(3.0));
        assert_eq!(facility_quality(&inst, 0, &[1]), Ok(4.0));
        assert_eq!(facility_quality(&inst, 0, &[]), Err(DestroyError::EmptyCustomerSet));
    }

    #[test]
    fn destroy_size_rounds_half_up_with_floor_one() {
        assert_eq!(destroy_size(65.0, 20, 500), 3);
        assert_eq!(destroy_size(35.0, 35, 35), 35);
        assert_eq!(destroy_size(10.0, 1, 100), 1);
        assert_eq!(destroy_size(5.0, 1, 10), 1);
        assert_eq!(destroy_size(3.0, 1, 2), 2);
    }

    #[test]
    fn cf_exhausts_short_lists() {
        let inst = line_instance();
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 2, 3), (2, 3, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sel = destroy_cheapest_facilities(&inst, &sol, 5, &mut rng).unwrap();
        assert_eq!(sel.facilities, vec![0, 2, 3]);

        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 3, 3), (2, 3, 3)]).unwrap();
        let sel = destroy_cheapest_facilities(&inst, &sol, 1, &mut rng).unwrap();
        assert_eq!(sel.facilities, vec![0, 3]);
    }

    #[test]
    fn cf_ranks_by_quality() {
        // Seed is forced: find a seed draw that picks facility 0.
        let inst = line_instance();
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 2, 3), (2, 3, 3)]).unwrap();
        for s in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let sel = destroy_cheapest_facilities(&inst, &sol, 1, &mut rng).unwrap();
            if sel.seed == 0 {
                // Q over customer 0: facility 2 -> 6, facility 3 -> 11.
                assert_eq!(sel.facilities, vec![0, 2]);
                return;
            }
        }
        panic!("no seed selected facility 0");
    }

    #[test]
    fn cf_is_deterministic_per_seed() {
        let inst = line_instance();
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 2, 3), (2, 3, 3)]).unwrap();
        let run = |s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            destroy_cheapest_facilities(&inst, &sol, 1, &mut rng).unwrap()
        };
        assert_eq!(run(11), run(11));
    }

    #[test]
    fn hc_floor_case_keeps_seed_and_servers() {
        let inst = line_instance();
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 0, 2), (1, 1, 1), (2, 3, 3)]).unwrap();
        for s in 0..50 {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            let sel = destroy_hybrid_customers(&inst, &sol, 1, &mut rng).unwrap();
            assert!(sel.cheapest_customers.is_empty());
            assert!(sel.expensive_customer_picks.is_empty());
            if sel.seed == 0 {
                assert_eq!(sel.expensive_customer, 1);
                assert_eq!(sel.expensive_servers, vec![0, 1]);
                assert_eq!(sel.into_selection().facilities, vec![0, 1]);
                return;
            }
        }
        panic!("no seed selected facility 0");
    }

    #[test]
    fn select_closed_boundaries() {
        let inst = line_instance();
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 0, 3), (2, 0, 3)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let sel = select_closed(&inst, &sol, &[2], 1, 0.0, &mut rng);
            assert_eq!(sel.strategy, ClosedStrategy::Random);
            assert_eq!(sel.facilities.len(), 1);
        }
        // Customer 2 at position 9: facility 3 costs 2, facility 2 costs 5.
        let sel = select_closed(&inst, &sol, &[2], 1, 1.0, &mut rng);
        assert_eq!(sel.strategy, ClosedStrategy::MinCost);
        assert_eq!(sel.facilities, vec![3]);
        let sel = select_closed(&inst, &sol, &[2], 9, 1.0, &mut rng);
        assert_eq!(sel.facilities, vec![1, 2, 3]);
    }

    #[test]
    fn extraction_freezes_outside_loads() {
        let inst = line_instance();
        // Customer 1 is split between facilities 0 and 3 in `sol` and between
        // 0 and 2 in `sol2`; customer 2 (incompatible with 1) stays outside.
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 0, 2), (1, 3, 1), (2, 2, 3)]).unwrap();
        let sol2 = Solution::from_shipments(&inst, [(0, 0, 3), (1, 0, 2), (1, 2, 1), (2, 3, 3)]).unwrap();
        assert!(crate::solution::audit(&inst, &sol2).is_empty());
        let sp = extract_subproblem(&inst, &sol2, &[0], &[1]);
        assert_eq!(sp.customers, vec![0, 1]);
        let ids: Vec<usize> = sp.facilities.iter().map(|f| f.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(sp.facilities[2].frozen_load, 0);
        assert!(!sp.facilities[0].forced_open());
        assert!(sp.forbidden.is_empty());
        assert_eq!(sp.open_limit, Some(4));

        // Facility 3 only serves customer 1, so it joins with no frozen load.
        let sp = extract_subproblem(&inst, &sol, &[0], &[]);
        let ids: Vec<usize> = sp.facilities.iter().map(|f| f.id).collect();
        assert_eq!(ids, vec![0, 3]);
        let current = sp.current_fragment(&sol);
        assert_eq!(sp.check_fragment(&inst, &current), Ok(sp.baseline_cost));
    }

    #[test]
    fn extraction_forbids_arcs_next_to_frozen_conflicts() {
        let inst = line_instance();
        // Customer 1 selected via facility 0, also served by facility 3,
        // which keeps customer 2 (incompatible with 1) frozen.
        let sol = Solution::from_shipments(&inst, [(0, 0, 3), (1, 0, 2), (1, 3, 1), (2, 3, 3)]).unwrap();
        let sp = extract_subproblem(&inst, &sol, &[0], &[]);
        assert_eq!(sp.customers, vec![0, 1]);
        let f3 = sp.facilities[sp.facility_position(3).unwrap()];
        assert_eq!(f3.frozen_load, 3);
        assert!(f3.forced_open());
        assert_eq!(sp.forbidden, vec![(1, 3)]);
        // The current assignment itself violates the new ban only because
        // `sol` was infeasible to begin with (customers 1 and 2 share 3).
        assert!(!crate::solution::audit(&inst, &sol).is_empty());
        // Baseline: shipping of customers 0, 1 plus facility 0's opening cost.
        assert_eq!(sp.baseline_cost, 3.0 * 1.0 + 2.0 * 5.0 + 1.0 * 7.0 + 5.0);
    }
}
