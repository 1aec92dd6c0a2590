use std::collections::BTreeSet;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mscflp::clock::Clock;
use mscflp::construct::{construct_amortized_greedy, construct_sorted_cost};
use mscflp::destroy::{
    destroy_hybrid_customers, destroy_open, extract_subproblem, select_closed, selected_customers, ClosedStrategy,
    DestroyOperator, SubProblem,
};
use mscflp::engine::{initial_solution, select_operator, EngineConfig, OperatorStats, Timeout, Variant};
use mscflp::generate::{generate_instance, GeneratorConfig};
use mscflp::oracle::solve_exact;
use mscflp::repair::{solve_subproblem, AcceptMode, RepairParams, RepairStatus};
use mscflp::{audit, parse_instance, Instance, Solution};

fn instance(seed: u64, n: usize, m: usize, density: f64) -> Instance {
    generate_instance(seed, &GeneratorConfig::new(n, m, density))
}

fn start(inst: &Instance) -> Solution {
    let config = EngineConfig::new(inst.num_facilities(), Variant::BASE, Timeout::Seconds(1.0), 0);
    initial_solution(inst, &config).expect("generated instances are constructible")
}

fn repair_params(cutoff: f64, mode: AcceptMode) -> RepairParams {
    RepairParams {
        cutoff,
        mode,
        time_limit: 30.0,
        ..RepairParams::exact()
    }
}

fn facilities_after(sub: &SubProblem, shipments: &[(usize, usize, u64)]) -> usize {
    let mut used: BTreeSet<usize> = shipments.iter().map(|s| s.1).collect();
    used.extend(sub.facilities.iter().filter(|f| f.forced_open()).map(|f| f.id));
    used.len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn instance_text_round_trip(seed in 0u64..1000, n in 1usize..25, m in 1usize..12, density in 0.0f64..0.6) {
        let inst = instance(seed, n, m, density);
        let back = parse_instance(&inst.to_string()).unwrap();
        prop_assert_eq!(&back, &inst);
        let report = inst.feasibility_bound();
        prop_assert!(report.capacity_covers_demand);
        prop_assert!(inst.total_capacity() as f64 >= 1.2 * inst.total_demand() as f64);
    }

    #[test]
    fn solution_text_round_trip(seed in 0u64..1000, n in 2usize..30, m in 2usize..10) {
        let inst = instance(seed, n, m, 0.1);
        let config = EngineConfig::new(m, Variant::BASE, Timeout::Seconds(1.0), 0);
        let sol = initial_solution(&inst, &config);
        prop_assume!(sol.is_ok());
        let sol = sol.unwrap();
        let back = Solution::parse(&inst, &sol.to_string()).unwrap();
        prop_assert_eq!(back.cost(), sol.cost());
        prop_assert_eq!(back.shipments().collect::<Vec<_>>(), sol.shipments().collect::<Vec<_>>());
    }

    #[test]
    fn constructors_are_clean_and_no_better_than_optimum(seed in 0u64..500, n in 1usize..7, m in 1usize..5, density in prop::sample::select(vec![0.0, 0.2, 0.5])) {
        let inst = instance(seed, n, m, density);
        let exact = solve_exact(&inst);
        for sol in [construct_sorted_cost(&inst, 5), construct_amortized_greedy(&inst)].into_iter().flatten() {
            prop_assert!(audit(&inst, &sol).is_empty());
            let opt = exact.as_ref().expect("a clean solution exists, so the oracle finds one");
            prop_assert!(opt.cost <= sol.cost());
        }
    }

    #[test]
    fn hybrid_halves_are_disjoint(seed in 0u64..1000, l_open in 1usize..8) {
        let inst = instance(seed, 40, 15, 0.05);
        let sol = start(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let hc = destroy_hybrid_customers(&inst, &sol, l_open, &mut rng).unwrap();
        for g in &hc.expensive_customer_picks {
            prop_assert!(!hc.cheapest_customers.contains(g));
            prop_assert!(!hc.expensive_servers.contains(g));
            prop_assert!(*g != hc.seed);
        }
        prop_assert!(!hc.cheapest_customers.contains(&hc.seed));
        prop_assert!(hc.cheapest_customers.len() <= l_open / 2);
        prop_assert!(hc.expensive_customer_picks.len() <= l_open / 2);
    }

    #[test]
    fn extraction_is_self_contained(seed in 0u64..1000, op in 0usize..2) {
        let inst = instance(seed, 50, 15, 0.05);
        let sol = start(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let open = destroy_open(DestroyOperator::ALL[op], &inst, &sol, 2, &mut rng).unwrap();
        let customers = selected_customers(&sol, &open.facilities);
        let closed = select_closed(&inst, &sol, &customers, 3, 0.5, &mut rng);
        let sub = extract_subproblem(&inst, &sol, &open.facilities, &closed.facilities);
        let ids: BTreeSet<usize> = sub.facilities.iter().map(|f| f.id).collect();
        for &i in &sub.customers {
            for s in sol.assignments(i) {
                prop_assert!(ids.contains(&s.facility));
            }
        }
        // The current assignment is a witness at exactly the baseline cost.
        let current = sub.current_fragment(&sol);
        prop_assert_eq!(sub.check_fragment(&inst, &current).unwrap(), sub.baseline_cost);
    }

    #[test]
    fn cutoff_and_open_cap_are_respected(seed in 0u64..1000, op in 0usize..2, two_source in any::<bool>()) {
        let inst = instance(seed, 30, 10, 0.05);
        let sol = start(&inst);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let open = destroy_open(DestroyOperator::ALL[op], &inst, &sol, 2, &mut rng).unwrap();
        let customers = selected_customers(&sol, &open.facilities);
        let closed = select_closed(&inst, &sol, &customers, 3, 0.5, &mut rng);
        let sub = extract_subproblem(&inst, &sol, &open.facilities, &closed.facilities);
        for mode in [AcceptMode::Strict, AcceptMode::Weak] {
            let params = RepairParams { two_source, ..repair_params(sub.baseline_cost, mode) };
            let out = solve_subproblem(&inst, &sub, &params, &Clock::wall());
            match out.status {
                RepairStatus::Improved | RepairStatus::TimeoutWithIncumbent => {
                    let fragment = out.fragment.unwrap();
                    let cost = sub.check_fragment(&inst, &fragment).unwrap();
                    match mode {
                        AcceptMode::Strict => prop_assert!(cost < sub.baseline_cost),
                        AcceptMode::Weak => prop_assert!(cost <= sub.baseline_cost),
                    }
                    prop_assert!(facilities_after(&sub, &fragment.shipments) <= sub.open_limit.unwrap());
                    if two_source {
                        for &i in &sub.customers {
                            prop_assert!(fragment.shipments.iter().filter(|s| s.0 == i).count() <= 2);
                        }
                    }
                }
                // Without the two-source limit the current fragment is a
                // witness at the cutoff, so weak mode always finds something.
                RepairStatus::NoBetterFound => prop_assert!(mode == AcceptMode::Strict || two_source),
                RepairStatus::Infeasible => prop_assert!(false, "cutoff was finite"),
            }
        }
    }
}

#[test]
fn closed_strategy_frequency() {
    let inst = instance(7, 40, 20, 0.0);
    let sol = start(&inst);
    let customers = selected_customers(&sol, &sol.open_facilities()[..1]);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws = 20_000;
    let mc = (0..draws)
        .filter(|_| select_closed(&inst, &sol, &customers, 3, 0.44, &mut rng).strategy == ClosedStrategy::MinCost)
        .count();
    let share = mc as f64 / draws as f64;
    assert!((0.42..=0.46).contains(&share), "min-cost share {share}");
}

#[test]
fn operator_roulette_frequency() {
    let stats = OperatorStats::fixed(0.34);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 20_000;
    let cf = (0..draws)
        .filter(|_| select_operator(&stats, &mut rng) == DestroyOperator::CheapestFacilities)
        .count();
    let share = cf as f64 / draws as f64;
    assert!((0.32..=0.36).contains(&share), "CF share {share}");
}

#[test]
fn more_spare_facilities_cost_less_over_a_suite() {
    let mut totals = [0.0; 2];
    for seed in 0..20 {
        let inst = instance(1000 + seed, 115, 50, 0.02);
        for (slot, k) in [(0, 2), (1, 5)] {
            let mut extra = k;
            let sol = loop {
                match construct_sorted_cost(&inst, extra) {
                    Ok(sol) => break sol,
                    Err(_) => extra += 1,
                }
            };
            totals[slot] += sol.cost();
        }
    }
    assert!(totals[1] <= totals[0], "k=5 total {} > k=2 total {}", totals[1], totals[0]);
}
