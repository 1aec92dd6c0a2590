//! The large neighborhood search loop.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::clock::{Clock, ClockKind};
use crate::construct::{construct_amortized_greedy, construct_sorted_cost, ConstructError, DEFAULT_EXTRA_FACILITIES};
use crate::destroy::{destroy_open, destroy_size, extract_subproblem, select_closed, ClosedStrategy, DestroyOperator};
use crate::instance::Instance;
use crate::repair::{AcceptMode, BranchAndBound, RepairParams, RepairStatus, SubproblemSolver};
use crate::solution::{Solution, COST_TOLERANCE};

/// Tuned parameters for one instance size class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Profile {
    /// Target number of customers per sub-problem.
    pub nu: f64,
    pub closed: usize,
    pub p_mc: f64,
    pub p_cf: f64,
}

/// Facility count up to which the small profile applies.
pub const SMALL_PROFILE_MAX_FACILITIES: usize = 700;

pub const SMALL_PROFILE: Profile = Profile {
    nu: 65.0,
    closed: 9,
    p_mc: 0.44,
    p_cf: 0.34,
};

pub const LARGE_PROFILE: Profile = Profile {
    nu: 35.0,
    closed: 6,
    p_mc: 0.45,
    p_cf: 0.35,
};

/// Seconds granted to one repair.
pub const DEFAULT_REPAIR_SECONDS: f64 = 20.0;

pub fn default_profile(facilities: usize) -> Profile {
    if facilities <= SMALL_PROFILE_MAX_FACILITIES {
        SMALL_PROFILE
    } else {
        LARGE_PROFILE
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InitStrategy {
    SortedCost,
    AmortizedGreedy,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Adaptation {
    /// Roulette weights `(p_cf, 1 - p_cf)` for the whole run.
    Static,
    Adaptive { lambda: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Variant {
    pub init: InitStrategy,
    pub acceptance: AcceptMode,
    pub two_source: bool,
    pub adaptation: Adaptation,
}

impl Variant {
    pub const BASE: Variant = Variant {
        init: InitStrategy::SortedCost,
        acceptance: AcceptMode::Strict,
        two_source: false,
        adaptation: Adaptation::Static,
    };

    pub const INIT: Variant = Variant {
        init: InitStrategy::AmortizedGreedy,
        ..Variant::BASE
    };

    pub const ACCEPT: Variant = Variant {
        acceptance: AcceptMode::Weak,
        ..Variant::BASE
    };

    pub const INIT_ACCEPT: Variant = Variant {
        init: InitStrategy::AmortizedGreedy,
        acceptance: AcceptMode::Weak,
        ..Variant::BASE
    };

    pub const TWO_SOURCE: Variant = Variant {
        two_source: true,
        ..Variant::BASE
    };

    pub fn alns(lambda: f64) -> Variant {
        Variant {
            adaptation: Adaptation::Adaptive { lambda },
            ..Variant::BASE
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("unknown variant `{0}` (expected base, init, accept, init_accept, 2s or alns:<lambda>)")]
pub struct VariantParseError(String);

impl FromStr for Variant {
    type Err = VariantParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base" => Ok(Variant::BASE),
            "init" => Ok(Variant::INIT),
            "accept" => Ok(Variant::ACCEPT),
            "init_accept" => Ok(Variant::INIT_ACCEPT),
            "2s" => Ok(Variant::TWO_SOURCE),
            _ => s
                .strip_prefix("alns:")
                .and_then(|l| l.parse::<f64>().ok())
                .filter(|l| (0.0..=1.0).contains(l))
                .map(Variant::alns)
                .ok_or_else(|| VariantParseError(s.to_string())),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Adaptation::Adaptive { lambda } = self.adaptation {
            if *self == Variant::alns(lambda) {
                return write!(f, "alns:{lambda}");
            }
        }
        let known = [
            (Variant::BASE, "base"),
            (Variant::INIT, "init"),
            (Variant::ACCEPT, "accept"),
            (Variant::INIT_ACCEPT, "init_accept"),
            (Variant::TWO_SOURCE, "2s"),
        ];
        match known.iter().find(|(v, _)| v == self) {
            Some((_, name)) => f.write_str(name),
            None => write!(f, "{self:?}"),
        }
    }
}

/// Run length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Timeout {
    /// `10 * sqrt(m)` seconds.
    Short,
    /// `m` seconds.
    Long,
    Seconds(f64),
}

impl Timeout {
    pub fn seconds(self, facilities: usize) -> f64 {
        match self {
            Timeout::Short => 10.0 * (facilities as f64).sqrt(),
            Timeout::Long => facilities as f64,
            Timeout::Seconds(s) => s,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("invalid timeout `{0}` (expected short, long or a number of seconds)")]
pub struct TimeoutParseError(String);

impl FromStr for Timeout {
    type Err = TimeoutParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "short" => Ok(Timeout::Short),
            "long" => Ok(Timeout::Long),
            _ => s
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x >= 0.0)
                .map(Timeout::Seconds)
                .ok_or_else(|| TimeoutParseError(s.to_string())),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EngineConfig {
    pub profile: Profile,
    /// Per-repair budget, capped by the remaining run time.
    pub repair_seconds: f64,
    pub variant: Variant,
    pub timeout: Timeout,
    pub seed: u64,
    pub clock: ClockKind,
    /// Extra facilities opened by the sorted-cost construction.
    pub extra_facilities: usize,
    pub max_iterations: Option<u64>,
    pub record_iterations: bool,
}

impl EngineConfig {
    /// Defaults for an instance with `facilities` facilities.
    pub fn new(facilities: usize, variant: Variant, timeout: Timeout, seed: u64) -> Self {
        Self {
            profile: default_profile(facilities),
            repair_seconds: DEFAULT_REPAIR_SECONDS,
            variant,
            timeout,
            seed,
            clock: ClockKind::Wall,
            extra_facilities: DEFAULT_EXTRA_FACILITIES,
            max_iterations: None,
            record_iterations: false,
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        let p = &self.profile;
        let probability = |x: f64| (0.0..=1.0).contains(&x);
        if !(p.nu >= 1.0) {
            return Err(EngineError::InvalidConfig(format!("nu must be at least 1, got {}", p.nu)));
        }
        if !probability(p.p_mc) || !probability(p.p_cf) {
            return Err(EngineError::InvalidConfig("probabilities must lie in [0, 1]".into()));
        }
        if let Adaptation::Adaptive { lambda } = self.variant.adaptation {
            if !probability(lambda) {
                return Err(EngineError::InvalidConfig(format!("lambda must lie in [0, 1], got {lambda}")));
            }
        }
        if !(self.repair_seconds >= 0.0) || !(self.timeout.seconds(1) >= 0.0) {
            return Err(EngineError::InvalidConfig("time limits must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("initial solution: {0}")]
    Construct(#[from] ConstructError),
}

/// Smallest weight an operator can drop to under adaptation.
pub const MIN_WEIGHT: f64 = 1e-6;

/// Roulette state for the destroy operators, indexed like
/// [`DestroyOperator::ALL`].
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorStats {
    pub weights: [f64; 2],
    /// Number of iterations in which the operator improved the solution.
    pub improvements: [f64; 2],
    /// Seconds spent in iterations using the operator.
    pub seconds: [f64; 2],
}

impl OperatorStats {
    pub fn uniform() -> Self {
        Self::with_weights([0.5, 0.5])
    }

    /// Weights `(p_cf, 1 - p_cf)`.
    pub fn fixed(p_cf: f64) -> Self {
        Self::with_weights([p_cf, 1.0 - p_cf])
    }

    pub fn with_weights(weights: [f64; 2]) -> Self {
        Self {
            weights,
            improvements: [0.0; 2],
            seconds: [0.0; 2],
        }
    }

    pub fn probabilities(&self) -> [f64; 2] {
        let total: f64 = self.weights.iter().sum();
        self.weights.map(|w| w / total)
    }
}

fn operator_index(op: DestroyOperator) -> usize {
    match op {
        DestroyOperator::CheapestFacilities => 0,
        DestroyOperator::HybridCustomers => 1,
    }
}

/// Roulette-wheel draw proportional to the weights.
pub fn select_operator<R: Rng + ?Sized>(stats: &OperatorStats, rng: &mut R) -> DestroyOperator {
    let total: f64 = stats.weights.iter().sum();
    let mut ticket = rng.gen::<f64>() * total;
    for (op, &w) in DestroyOperator::ALL.iter().zip(&stats.weights) {
        if ticket < w {
            return *op;
        }
        ticket -= w;
    }
    *DestroyOperator::ALL
        .iter()
        .zip(&stats.weights)
        .rev()
        .find(|(_, &w)| w > 0.0)
        .map(|(op, _)| op)
        .unwrap_or(&DestroyOperator::ALL[0])
}

/// `lambda * weight + (1 - lambda) * improvements / seconds`, with the ratio
/// taken as zero while no time has been recorded.
pub fn adapted_weight(weight: f64, lambda: f64, improvements: f64, seconds: f64) -> f64 {
    let ratio = if seconds > 0.0 { improvements / seconds } else { 0.0 };
    lambda * weight + (1.0 - lambda) * ratio
}

/// Outcome of one iteration, as seen by the weight adaptation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterationOutcome {
    pub operator: DestroyOperator,
    pub improved: bool,
    pub seconds: f64,
}

/// Adds the iteration to the cumulative sums of its operator and recomputes
/// every weight.
pub fn update_weights(stats: &mut OperatorStats, outcome: &IterationOutcome, lambda: f64) {
    let idx = operator_index(outcome.operator);
    if outcome.improved {
        stats.improvements[idx] += 1.0;
    }
    stats.seconds[idx] += outcome.seconds;
    for i in 0..stats.weights.len() {
        stats.weights[i] = adapted_weight(stats.weights[i], lambda, stats.improvements[i], stats.seconds[i]).max(MIN_WEIGHT);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: u64,
    pub operator: DestroyOperator,
    pub closed_strategy: ClosedStrategy,
    pub customers: usize,
    pub facilities: usize,
    pub baseline: f64,
    pub repaired: Option<f64>,
    pub status: RepairStatus,
    pub accepted: bool,
    pub current_cost: f64,
    pub best_cost: f64,
    pub elapsed: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub best: Solution,
    /// `(elapsed seconds, best cost)` at the start and at every improvement
    /// of the best solution.
    pub trace: Vec<(f64, f64)>,
    pub iterations: u64,
    pub accepted: u64,
    pub repair_nodes: u64,
    pub time_to_best: f64,
    pub elapsed: f64,
    pub records: Vec<IterationRecord>,
}

/// Writes a trace as `elapsed_seconds,cost` rows.
pub fn write_trace<W: Write>(mut out: W, trace: &[(f64, f64)]) -> io::Result<()> {
    writeln!(out, "elapsed_seconds,cost")?;
    for (t, c) in trace {
        writeln!(out, "{t:.6},{c}")?;
    }
    Ok(())
}

/// Draws for a degenerate destroy before the iteration gives up.
const DESTROY_ATTEMPTS: usize = 8;

pub fn initial_solution(inst: &Instance, config: &EngineConfig) -> Result<Solution, ConstructError> {
    match config.variant.init {
        InitStrategy::AmortizedGreedy => construct_amortized_greedy(inst),
        InitStrategy::SortedCost => {
            let mut extra = config.extra_facilities;
            loop {
                match construct_sorted_cost(inst, extra) {
                    Err(ConstructError::Unserved { .. }) if extra < inst.num_facilities() => extra += 1,
                    other => return other,
                }
            }
        }
    }
}

/// Runs the search with the built-in repair solver.
pub fn run(inst: &Instance, config: &EngineConfig) -> Result<RunResult, EngineError> {
    run_with(inst, config, &mut BranchAndBound::default())
}

pub fn run_with<S: SubproblemSolver>(inst: &Instance, config: &EngineConfig, solver: &mut S) -> Result<RunResult, EngineError> {
    config.validate()?;
    let clock = Clock::new(config.clock);
    let budget = config.timeout.seconds(inst.num_facilities());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let variant = config.variant;
    let profile = config.profile;

    let mut current = initial_solution(inst, config)?;
    let mut best = current.clone();
    let mut trace = vec![(clock.elapsed(), best.cost())];
    let mut time_to_best = clock.elapsed();
    let mut stats = match variant.adaptation {
        Adaptation::Static => OperatorStats::fixed(profile.p_cf),
        Adaptation::Adaptive { .. } => OperatorStats::uniform(),
    };
    let mut iterations = 0;
    let mut accepted = 0;
    let mut repair_nodes = 0;
    let mut records = Vec::new();

    while clock.elapsed() < budget && config.max_iterations.is_none_or(|max| iterations < max) {
        iterations += 1;
        // Keeps the logical clock moving even when nothing gets repaired.
        clock.charge(1);
        let started = clock.elapsed();
        let operator = select_operator(&stats, &mut rng);
        let l_open = destroy_size(profile.nu, current.open_count(), inst.num_customers());
        let selection = (0..DESTROY_ATTEMPTS).find_map(|_| destroy_open(operator, inst, &current, l_open, &mut rng).ok());
        let Some(selection) = selection else {
            continue;
        };
        let customers = crate::destroy::selected_customers(&current, &selection.facilities);
        let closed = select_closed(inst, &current, &customers, profile.closed, profile.p_mc, &mut rng);
        let sub = extract_subproblem(inst, &current, &selection.facilities, &closed.facilities);

        let remaining = (budget - clock.elapsed()).max(0.0);
        let params = RepairParams {
            cutoff: sub.baseline_cost,
            mode: variant.acceptance,
            two_source: variant.two_source,
            time_limit: config.repair_seconds.min(remaining),
            node_limit: None,
        };
        let outcome = solver.solve(inst, &sub, &params, &clock);
        repair_nodes += outcome.nodes;

        let before = current.cost();
        let mut took = false;
        if let (Some(fragment), Some(cost)) = (&outcome.fragment, outcome.cost) {
            let ok = match variant.acceptance {
                AcceptMode::Strict => cost < sub.baseline_cost - COST_TOLERANCE * sub.baseline_cost.abs().max(1.0),
                AcceptMode::Weak => cost <= sub.baseline_cost + COST_TOLERANCE * sub.baseline_cost.abs().max(1.0),
            };
            if ok && current.apply_repair(inst, &sub, fragment).is_ok() {
                accepted += 1;
                took = true;
            }
        }
        let improved = current.cost() < before - COST_TOLERANCE * before.abs().max(1.0);
        if current.cost() < best.cost() - COST_TOLERANCE * best.cost().abs().max(1.0) {
            best = current.clone();
            time_to_best = clock.elapsed();
            trace.push((time_to_best, best.cost()));
        }
        if let Adaptation::Adaptive { lambda } = variant.adaptation {
            let outcome = IterationOutcome {
                operator,
                improved,
                seconds: clock.elapsed() - started,
            };
            update_weights(&mut stats, &outcome, lambda);
        }
        if config.record_iterations {
            records.push(IterationRecord {
                iteration: iterations,
                operator,
                closed_strategy: closed.strategy,
                customers: sub.customers.len(),
                facilities: sub.facilities.len(),
                baseline: sub.baseline_cost,
                repaired: outcome.cost,
                status: outcome.status,
                accepted: took,
                current_cost: current.cost(),
                best_cost: best.cost(),
                elapsed: clock.elapsed(),
            });
        }
    }

    Ok(RunResult {
        best,
        trace,
        iterations,
        accepted,
        repair_nodes,
        time_to_best,
        elapsed: clock.elapsed(),
        records,
    })
}
