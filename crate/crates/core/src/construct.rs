//! Initial solutions.

use thiserror::Error;

use crate::instance::Instance;
use crate::solution::Solution;

/// Extra facilities opened by [`construct_sorted_cost`] by default.
pub const DEFAULT_EXTRA_FACILITIES: usize = 5;

#[derive(Debug, Error, PartialEq)]
pub enum ConstructError {
    #[error("total capacity {capacity} is below total demand {demand}")]
    InsufficientCapacity { demand: u64, capacity: u64 },
    #[error("customer {customer} left with {missing} unserved units")]
    Unserved { customer: usize, missing: u64 },
}

fn check_capacity(inst: &Instance) -> Result<(), ConstructError> {
    let report = inst.feasibility_bound();
    if report.capacity_covers_demand {
        Ok(())
    } else {
        Err(ConstructError::InsufficientCapacity {
            demand: report.total_demand,
            capacity: report.total_capacity,
        })
    }
}

fn conflicts_with_facility(inst: &Instance, sol: &Solution, customer: usize, facility: usize) -> bool {
    inst.conflicts(customer)
        .iter()
        .any(|&other| sol.quantity(other, facility) > 0)
}

/// Opens the facilities with the lowest opening cost until their capacity
/// covers total demand, then `extra` more. Customers are served in input
/// order from the open facilities, cheapest shipping first.
pub fn construct_sorted_cost(inst: &Instance, extra: usize) -> Result<Solution, ConstructError> {
    check_capacity(inst)?;
    let m = inst.num_facilities();
    let mut by_cost: Vec<usize> = (0..m).collect();
    by_cost.sort_by(|&a, &b| inst.opening_cost(a).total_cmp(&inst.opening_cost(b)).then(a.cmp(&b)));

    let total = inst.total_demand();
    let mut covered = 0;
    let mut prefix = 0;
    while covered < total {
        covered += inst.capacity(by_cost[prefix]);
        prefix += 1;
    }
    let open = &by_cost[..(prefix + extra).min(m)];

    let mut sol = Solution::empty(inst);
    let mut residual: Vec<u64> = inst.capacities().to_vec();
    for i in 0..inst.num_customers() {
        let mut ranked = open.to_vec();
        ranked.sort_by(|&a, &b| inst.ship_cost(i, a).total_cmp(&inst.ship_cost(i, b)).then(a.cmp(&b)));
        let mut need = inst.demand(i);
        for j in ranked {
            if need == 0 {
                break;
            }
            if residual[j] == 0 || conflicts_with_facility(inst, &sol, i, j) {
                continue;
            }
            let q = need.min(residual[j]);
            sol.add(inst, i, j, q);
            residual[j] -= q;
            need -= q;
        }
        if need > 0 {
            return Err(ConstructError::Unserved {
                customer: i,
                missing: need,
            });
        }
    }
    Ok(sol)
}

/// Repeatedly ships as much as possible on the pair with the lowest unit
/// cost, where a closed facility adds its opening cost spread over its
/// capacity.
pub fn construct_amortized_greedy(inst: &Instance) -> Result<Solution, ConstructError> {
    check_capacity(inst)?;
    let n = inst.num_customers();
    let m = inst.num_facilities();
    let mut sol = Solution::empty(inst);
    let mut residual: Vec<u64> = inst.capacities().to_vec();
    let mut need: Vec<u64> = inst.demands().to_vec();
    // blocked[i * m + j]: facility j already serves a customer incompatible with i.
    let mut blocked = vec![false; n * m];
    let amortized: Vec<f64> = (0..m)
        .map(|j| inst.opening_cost(j) / inst.capacity(j) as f64)
        .collect();
    let mut remaining = n;

    while remaining > 0 {
        let mut best: Option<(f64, usize, usize)> = None;
        for j in 0..m {
            if residual[j] == 0 {
                continue;
            }
            let surcharge = if sol.is_open(j) { 0.0 } else { amortized[j] };
            for i in 0..n {
                if need[i] == 0 || blocked[i * m + j] {
                    continue;
                }
                let unit = inst.ship_cost(i, j) + surcharge;
                if best.is_none_or(|(b, _, _)| unit < b) {
                    best = Some((unit, j, i));
                }
            }
        }
        let Some((_, j, i)) = best else {
            let customer = (0..n).find(|&i| need[i] > 0).unwrap_or(0);
            return Err(ConstructError::Unserved {
                customer,
                missing: need[customer],
            });
        };
        let q = need[i].min(residual[j]);
        sol.add(inst, i, j, q);
        residual[j] -= q;
        need[i] -= q;
        if need[i] == 0 {
            remaining -= 1;
        }
        for &other in inst.conflicts(i) {
            blocked[other * m + j] = true;
        }
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_instance, GeneratorConfig};
    use crate::solution::audit;

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

    fn dominant() -> Instance {
        Instance::new(
            vec![2, 3, 4],
            vec![20, 9],
            vec![1.0, 50.0],
            vec![vec![1.0, 3.0], vec![2.0, 3.0], vec![1.0, 4.0]],
            [],
        )
        .unwrap()
    }

    #[test]
    fn sorted_cost_two_by_two() {
        let inst = two_by_two();
        let sol = construct_sorted_cost(&inst, 0).unwrap();
        assert_eq!(sol.open_count(), 2);
        assert_eq!(sol.quantity(0, 0), 3);
        assert_eq!(sol.quantity(1, 1), 3);
        assert_eq!(sol.cost(), 26.0);
    }

    #[test]
    fn amortized_two_by_two() {
        // (f1, c1) first at 1 + 2; then f1 is open and (f1, c2) at 2 beats
        // (f2, c2) at 1 + 2, leaving one unit for f2.
        let inst = two_by_two();
        let sol = construct_amortized_greedy(&inst).unwrap();
        assert_eq!(sol.quantity(0, 0), 3);
        assert_eq!(sol.quantity(1, 0), 2);
        assert_eq!(sol.quantity(1, 1), 1);
        assert_eq!(sol.cost(), 28.0);
        assert!(audit(&inst, &sol).is_empty());
    }

    #[test]
    fn dominant_facility_takes_everything() {
        let inst = dominant();
        for sol in [
            construct_sorted_cost(&inst, 0).unwrap(),
            construct_amortized_greedy(&inst).unwrap(),
        ] {
            assert_eq!(sol.open_facilities(), vec![0]);
            assert_eq!(sol.load(0), 9);
        }
    }

    #[test]
    fn incompatibility_can_make_sorted_cost_fail() {
        let inst = Instance::new(vec![1, 1], vec![5, 5], vec![1.0, 2.0], vec![vec![1.0, 1.0]; 2], [(0, 1)]).unwrap();
        assert_eq!(
            construct_sorted_cost(&inst, 0),
            Err(ConstructError::Unserved {
                customer: 1,
                missing: 1
            })
        );
        let sol = construct_sorted_cost(&inst, 1).unwrap();
        assert!(audit(&inst, &sol).is_empty());
    }

    #[test]
    fn amortized_reports_dead_end() {
        let inst = Instance::new(vec![1, 1], vec![5], vec![1.0], vec![vec![1.0]; 2], [(0, 1)]).unwrap();
        assert!(matches!(
            construct_amortized_greedy(&inst),
            Err(ConstructError::Unserved { customer: 1, .. })
        ));
    }

    #[test]
    fn capacity_shortfall_is_reported() {
        let inst = Instance::new(vec![7], vec![5], vec![1.0], vec![vec![1.0]], []).unwrap();
        assert_eq!(
            construct_sorted_cost(&inst, 0),
            Err(ConstructError::InsufficientCapacity { demand: 7, capacity: 5 })
        );
    }

    #[test]
    fn amortized_ties_pick_lowest_indices() {
        let inst = Instance::new(vec![2, 2], vec![4, 4], vec![0.0, 0.0], vec![vec![1.0, 1.0]; 2], []).unwrap();
        let a = construct_amortized_greedy(&inst).unwrap();
        let b = construct_amortized_greedy(&inst).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.open_facilities(), vec![0]);
    }

    #[test]
    fn generated_instances_construct_clean() {
        for seed in 0..10 {
            let inst = generate_instance(seed, &GeneratorConfig::new(60, 15, 0.05));
            let sorted = construct_sorted_cost(&inst, DEFAULT_EXTRA_FACILITIES).unwrap();
            let greedy = construct_amortized_greedy(&inst).unwrap();
            assert!(audit(&inst, &sorted).is_empty());
            assert!(audit(&inst, &greedy).is_empty());
            assert_eq!(greedy, construct_amortized_greedy(&inst).unwrap());
        }
    }
}
