use mscflp::clock::Clock;
use mscflp::destroy::SubProblem;
use mscflp::generate::{generate_instance, GeneratorConfig};
use mscflp::oracle::{solve_exact, OracleError};
use mscflp::repair::{solve_subproblem, RepairParams, RepairStatus};
use mscflp::solution::{audit, Solution};

#[test]
fn branch_and_bound_matches_brute_force() {
    let mut checked = 0;
    for seed in 0..240u64 {
        let density = [0.0, 0.2, 0.5][(seed % 3) as usize];
        let n = 2 + (seed % 5) as usize;
        let m = 1 + (seed / 5 % 4) as usize;
        let inst = generate_instance(seed, &GeneratorConfig::new(n, m, density));
        let sub = SubProblem::whole_instance(&inst);
        let out = solve_subproblem(&inst, &sub, &RepairParams::exact(), &Clock::wall());
        match solve_exact(&inst) {
            Ok(best) => {
                assert_eq!(out.status, RepairStatus::Improved, "seed {seed}");
                assert_eq!(out.cost, Some(best.cost), "seed {seed}");
                let sol = Solution::from_shipments(&inst, out.fragment.unwrap().shipments).unwrap();
                assert!(audit(&inst, &sol).is_empty(), "seed {seed}");
                assert_eq!(sol.cost(), best.cost);
                checked += 1;
            }
            Err(OracleError::Infeasible) => assert_eq!(out.status, RepairStatus::Infeasible, "seed {seed}"),
            Err(e) => panic!("seed {seed}: {e}"),
        }
    }
    assert!(checked > 150);
}
