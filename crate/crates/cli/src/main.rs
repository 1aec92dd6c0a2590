use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mscflp::clock::{Clock, ClockKind, DEFAULT_SECONDS_PER_NODE};
use mscflp::destroy::SubProblem;
use mscflp::dzn::parse_dzn;
use mscflp::engine::{self, write_trace, EngineConfig, Timeout, Variant};
use mscflp::generate::{generate_instance, GeneratorConfig};
use mscflp::harness::{parse_bks, run_benchmark, write_runs_csv, write_summary_csv, BenchmarkSpec, ProfileChoice};
use mscflp::par::Execution;
use mscflp::repair::{solve_subproblem, RepairParams};
use mscflp::{audit, Instance, Solution};

#[derive(Parser)]
#[command(name = "mscflp", version, about = "Facility location with incompatible customers: LNS solver and benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a random instance in the canonical format.
    Generate {
        #[arg(long)]
        customers: usize,
        #[arg(long)]
        facilities: usize,
        /// Probability that a customer pair is incompatible.
        #[arg(long, default_value_t = 0.02)]
        density: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an instance and, optionally, a solution for it.
    Validate {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run the search on one instance.
    Solve {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value = "init_accept")]
        variant: Variant,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        run: RunArgs,
        /// Where to write the best solution.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where to write the `elapsed_seconds,cost` trace.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Solve the whole instance with the branch-and-bound.
    Exact {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = 600.0)]
        time_limit: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a variant x instance x seed matrix and write CSV reports.
    Bench {
        /// Instance files (repeatable).
        #[arg(long, required_unless_present = "manifest")]
        instance: Vec<PathBuf>,
        /// File listing one instance path per line.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Variants (repeatable).
        #[arg(long, default_values = ["init_accept"])]
        variant: Vec<Variant>,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed_base: u64,
        #[command(flatten)]
        run: RunArgs,
        /// Best-known values, `name value` per line.
        #[arg(long)]
        bks: Option<PathBuf>,
        /// Per-run CSV; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Per-instance min/avg CSV.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Concurrent runs; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

#[derive(Args)]
struct RunArgs {
    /// `short` (10 sqrt(m) s), `long` (m s) or seconds.
    #[arg(long, default_value = "short")]
    timeout: Timeout,
    #[arg(long, default_value = "auto")]
    profile: ProfileChoice,
    #[arg(long, value_enum, default_value_t = ClockArg::Wall)]
    clock: ClockArg,
    /// Seconds charged per search node by the logical clock.
    #[arg(long, default_value_t = DEFAULT_SECONDS_PER_NODE)]
    seconds_per_node: f64,
    /// Time limit of each repair.
    #[arg(long, default_value_t = engine::DEFAULT_REPAIR_SECONDS)]
    repair_seconds: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClockArg {
    Wall,
    /// Advances per unit of search work; makes runs reproducible.
    Logical,
}

impl RunArgs {
    fn clock(&self) -> ClockKind {
        match self.clock {
            ClockArg::Wall => ClockKind::Wall,
            ClockArg::Logical => ClockKind::Logical {
                seconds_per_node: self.seconds_per_node,
            },
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let inst = if path.extension().is_some_and(|e| e == "dzn") {
        parse_dzn(&text)?
    } else {
        text.parse::<Instance>()?
    };
    Ok(inst)
}

fn instance_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn read_manifest(path: &Path) -> Result<Vec<PathBuf>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| base.join(l))
        .collect())
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Generate {
            customers,
            facilities,
            density,
            seed,
            out,
        } => {
            if customers == 0 || facilities == 0 {
                bail!("need at least one customer and one facility");
            }
            let inst = generate_instance(seed, &GeneratorConfig::new(customers, facilities, density));
            write!(output(out.as_deref())?, "{inst}")?;
            Ok(true)
        }
        Command::Validate { instance, solution } => {
            let inst = load_instance(&instance)?;
            let report = inst.feasibility_bound();
            println!(
                "{} facilities, {} customers, {} incompatible pairs",
                inst.num_facilities(),
                inst.num_customers(),
                inst.incompatible_pairs().len()
            );
            println!(
                "total demand {}, total capacity {}: {}",
                report.total_demand,
                report.total_capacity,
                if report.capacity_covers_demand { "ok" } else { "capacity too small" }
            );
            let mut ok = report.capacity_covers_demand;
            if let Some(path) = solution {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                let sol = Solution::parse(&inst, &text)?;
                let violations = audit(&inst, &sol);
                for v in &violations {
                    println!("violation: {v}");
                }
                if violations.is_empty() {
                    println!("solution feasible, cost {}", sol.cost());
                }
                ok &= violations.is_empty();
            }
            Ok(ok)
        }
        Command::Solve {
            instance,
            variant,
            seed,
            run,
            out,
            trace,
        } => {
            let inst = load_instance(&instance)?;
            let mut config = EngineConfig::new(inst.num_facilities(), variant, run.timeout, seed);
            config.profile = run.profile.resolve(inst.num_facilities());
            config.clock = run.clock();
            config.repair_seconds = run.repair_seconds;
            let result = engine::run(&inst, &config)?;
            eprintln!(
                "cost {} after {} iterations ({} accepted), best found at {:.3}s",
                result.best.cost(),
                result.iterations,
                result.accepted,
                result.time_to_best
            );
            write!(output(out.as_deref())?, "{}", result.best)?;
            if let Some(path) = trace {
                write_trace(output(Some(&path))?, &result.trace)?;
            }
            Ok(true)
        }
        Command::Exact {
            instance,
            time_limit,
            out,
        } => {
            let inst = load_instance(&instance)?;
            let sub = SubProblem::whole_instance(&inst);
            let params = RepairParams {
                time_limit,
                ..RepairParams::exact()
            };
            let outcome = solve_subproblem(&inst, &sub, &params, &Clock::wall());
            let verdict = match (&outcome.cost, outcome.timed_out) {
                (Some(c), false) => format!("optimal cost {c}"),
                (Some(c), true) => format!("time limit, best cost {c}, lower bound {}", outcome.lower_bound),
                (None, false) => "infeasible".to_string(),
                (None, true) => format!("time limit, no solution, lower bound {}", outcome.lower_bound),
            };
            eprintln!("{verdict} ({} nodes, {:.2}s)", outcome.nodes, outcome.elapsed);
            match outcome.fragment {
                Some(fragment) => {
                    let sol = Solution::from_shipments(&inst, fragment.shipments)?;
                    write!(output(out.as_deref())?, "{sol}")?;
                    Ok(true)
                }
                None => Ok(false),
            }
        }
        Command::Bench {
            instance,
            manifest,
            variant,
            runs,
            seed_base,
            run,
            bks,
            out,
            summary,
            jobs,
        } => {
            let mut paths = instance;
            if let Some(m) = manifest {
                paths.extend(read_manifest(&m)?);
            }
            let instances = paths
                .iter()
                .map(|p| Ok((instance_name(p), load_instance(p)?)))
                .collect::<Result<Vec<_>>>()?;
            let mut spec = BenchmarkSpec::new(instances, variant, runs, run.timeout);
            spec.seed_base = seed_base;
            spec.profile = run.profile;
            spec.clock = run.clock();
            spec.repair_seconds = run.repair_seconds;
            spec.execution = Execution::from_jobs(jobs);
            if let Some(path) = bks {
                let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                spec.bks = parse_bks(&text)?;
            }
            let report = run_benchmark(&spec);
            for row in &report.rows {
                if let Some(e) = &row.error {
                    eprintln!("{} {} seed {}: {e}", row.instance, row.variant, row.seed);
                }
            }
            write_runs_csv(output(out.as_deref())?, &report.rows)?;
            if let Some(path) = &out {
                // The run table has a fixed schema, so configuration hashes
                // go to a sidecar file.
                let mut side = output(Some(&path.with_extension("hashes.csv")))?;
                writeln!(side, "instance,variant,seed,config_hash")?;
                for r in &report.rows {
                    writeln!(side, "{},{},{},{:016x}", r.instance, r.variant, r.seed, r.config_hash)?;
                }
            }
            if let Some(path) = summary {
                write_summary_csv(output(Some(&path))?, &report.summary)?;
            }
            Ok(report.rows.iter().all(|r| r.error.is_none()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
