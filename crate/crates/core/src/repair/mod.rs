//! Exact repair: the sub-problem is solved to optimality (or to the time
//! limit) below a cutoff given by the cost of the destroyed fragment.

mod bnb;
pub mod transport;

pub use bnb::BranchAndBound;
pub use transport::{solve_transportation, TransportSolution, TransportSolver};

use crate::clock::Clock;
use crate::destroy::{Fragment, SubProblem};
use crate::instance::Instance;

/// How the cutoff is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AcceptMode {
    /// Only fragments strictly cheaper than the cutoff count.
    Strict,
    /// Fragments costing exactly the cutoff count as well.
    Weak,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepairParams {
    pub cutoff: f64,
    pub mode: AcceptMode,
    /// At most two serving facilities per sub-problem customer.
    pub two_source: bool,
    /// Seconds on the supplied clock.
    pub time_limit: f64,
    pub node_limit: Option<u64>,
}

impl RepairParams {
    /// Unbounded exact solve: no cutoff, no time or node limit.
    pub fn exact() -> Self {
        Self {
            cutoff: f64::INFINITY,
            mode: AcceptMode::Weak,
            two_source: false,
            time_limit: f64::INFINITY,
            node_limit: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RepairStatus {
    /// Search finished with a fragment under the cutoff threshold; it is
    /// optimal for the sub-problem.
    Improved,
    /// No fragment under the threshold exists, or none was found before the
    /// limit hit (`timed_out` tells which).
    NoBetterFound,
    /// Limit hit; the best fragment found so far is returned.
    TimeoutWithIncumbent,
    /// Search finished without any feasible fragment and no cutoff applied.
    Infeasible,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RepairOutcome {
    pub status: RepairStatus,
    pub fragment: Option<Fragment>,
    /// Sub-problem objective of `fragment`.
    pub cost: Option<f64>,
    /// Proven lower bound on the sub-problem optimum (capped by the cutoff
    /// when the search closes without a fragment).
    pub lower_bound: f64,
    pub nodes: u64,
    /// Clock seconds spent.
    pub elapsed: f64,
    pub timed_out: bool,
}

/// Anything able to solve a sub-problem under the repair contract.
pub trait SubproblemSolver {
    fn solve(&mut self, inst: &Instance, sub: &SubProblem, params: &RepairParams, clock: &Clock) -> RepairOutcome;
}

/// Solves `sub` with the built-in branch-and-bound.
pub fn solve_subproblem(inst: &Instance, sub: &SubProblem, params: &RepairParams, clock: &Clock) -> RepairOutcome {
    BranchAndBound::default().solve(inst, sub, params, clock)
}
