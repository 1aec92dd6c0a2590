//! Benchmark matrices: variants x instances x seeds, gaps against best-known
//! values, and CSV reports.

use std::collections::{BTreeMap, HashMap};
use std::hash::{Hash, Hasher};
use std::io::Write;

use thiserror::Error;

use crate::clock::ClockKind;
use crate::engine::{self, default_profile, EngineConfig, Profile, Timeout, Variant, LARGE_PROFILE, SMALL_PROFILE};
use crate::instance::Instance;
use crate::par::{map_ordered, Execution};

pub const RUNS_HEADER: [&str; 10] = [
    "instance",
    "variant",
    "seed",
    "timeout_s",
    "cost",
    "gap_pct",
    "time_to_best_s",
    "iterations",
    "accepted",
    "repair_nodes",
];

pub const SUMMARY_HEADER: [&str; 8] = [
    "instance", "variant", "runs", "min_cost", "avg_cost", "min_gap_pct", "avg_gap_pct", "failed",
];

#[derive(Debug, Error, PartialEq)]
pub enum GapError {
    #[error("best-known value must be positive, got {0}")]
    NonPositiveReference(f64),
}

/// Percentage gap of `cost` above `bks`; negative when `cost` beats it.
pub fn compute_gap(cost: f64, bks: f64) -> Result<f64, GapError> {
    if !(bks > 0.0) {
        return Err(GapError::NonPositiveReference(bks));
    }
    Ok((cost - bks) / bks * 100.0)
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct BksParseError {
    pub line: usize,
    pub message: String,
}

/// Parses `name value` lines; blank lines and `#` comments are skipped.
pub fn parse_bks(text: &str) -> Result<HashMap<String, f64>, BksParseError> {
    let mut map = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |message: &str| BksParseError {
            line: idx + 1,
            message: message.to_string(),
        };
        let mut parts = line.split_whitespace();
        let (Some(name), Some(value), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(err("expected `name value`"));
        };
        let value: f64 = value.parse().map_err(|_| err("value is not a number"))?;
        if map.insert(name.to_string(), value).is_some() {
            return Err(err("duplicate instance name"));
        }
    }
    Ok(map)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ProfileChoice {
    /// Chosen from the facility count.
    #[default]
    Auto,
    Small,
    Large,
}

impl ProfileChoice {
    pub fn resolve(self, facilities: usize) -> Profile {
        match self {
            ProfileChoice::Auto => default_profile(facilities),
            ProfileChoice::Small => SMALL_PROFILE,
            ProfileChoice::Large => LARGE_PROFILE,
        }
    }
}

impl std::str::FromStr for ProfileChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "auto" => Ok(ProfileChoice::Auto),
            "small" => Ok(ProfileChoice::Small),
            "large" => Ok(ProfileChoice::Large),
            _ => Err(format!("unknown profile `{s}` (expected auto, small or large)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchmarkSpec {
    /// `(name, instance)` in report order.
    pub instances: Vec<(String, Instance)>,
    pub bks: HashMap<String, f64>,
    pub variants: Vec<Variant>,
    pub runs: usize,
    pub seed_base: u64,
    pub timeout: Timeout,
    pub profile: ProfileChoice,
    pub clock: ClockKind,
    pub repair_seconds: f64,
    pub execution: Execution,
}

impl BenchmarkSpec {
    pub fn new(instances: Vec<(String, Instance)>, variants: Vec<Variant>, runs: usize, timeout: Timeout) -> Self {
        Self {
            instances,
            bks: HashMap::new(),
            variants,
            runs,
            seed_base: 0,
            timeout,
            profile: ProfileChoice::Auto,
            clock: ClockKind::Wall,
            repair_seconds: engine::DEFAULT_REPAIR_SECONDS,
            execution: Execution::default(),
        }
    }

    /// Engine configuration of one run.
    pub fn config(&self, inst: &Instance, variant: Variant, seed: u64) -> EngineConfig {
        let m = inst.num_facilities();
        let mut config = EngineConfig::new(m, variant, self.timeout, seed);
        config.profile = self.profile.resolve(m);
        config.clock = self.clock;
        config.repair_seconds = self.repair_seconds;
        config
    }

    /// Stable hash of everything that shapes a run except instance and seed.
    pub fn config_hash(&self, variant: Variant) -> u64 {
        let text = format!(
            "{variant}|{:?}|{:?}|{:?}|{}",
            self.timeout, self.profile, self.clock, self.repair_seconds
        );
        fnv1a(text.as_bytes())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hasher = Fnv1a(0xcbf2_9ce4_8422_2325);
    bytes.hash(&mut hasher);
    hasher.finish()
}

struct Fnv1a(u64);

impl Hasher for Fnv1a {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= u64::from(b);
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRow {
    pub instance: String,
    pub variant: String,
    pub seed: u64,
    pub config_hash: u64,
    pub timeout_s: f64,
    pub cost: Option<f64>,
    pub gap_pct: Option<f64>,
    pub time_to_best_s: f64,
    pub iterations: u64,
    pub accepted: u64,
    pub repair_nodes: u64,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub instance: String,
    pub variant: String,
    pub runs: usize,
    pub min_cost: Option<f64>,
    pub avg_cost: Option<f64>,
    pub min_gap_pct: Option<f64>,
    pub avg_gap_pct: Option<f64>,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkReport {
    pub rows: Vec<RunRow>,
    pub summary: Vec<SummaryRow>,
}

struct Job<'a> {
    name: &'a str,
    inst: &'a Instance,
    variant: Variant,
    seed: u64,
}

/// Runs every (instance, variant, seed) combination. Rows come back in
/// instance, then variant, then seed order regardless of scheduling.
pub fn run_benchmark(spec: &BenchmarkSpec) -> BenchmarkReport {
    let mut jobs = Vec::new();
    for (name, inst) in &spec.instances {
        for &variant in &spec.variants {
            for r in 0..spec.runs {
                jobs.push(Job {
                    name,
                    inst,
                    variant,
                    seed: spec.seed_base + r as u64,
                });
            }
        }
    }
    let rows = map_ordered(spec.execution, &jobs, |job| run_one(spec, job));
    let summary = summarize(&rows);
    BenchmarkReport { rows, summary }
}

fn run_one(spec: &BenchmarkSpec, job: &Job<'_>) -> RunRow {
    let config = spec.config(job.inst, job.variant, job.seed);
    let mut row = RunRow {
        instance: job.name.to_string(),
        variant: job.variant.to_string(),
        seed: job.seed,
        config_hash: spec.config_hash(job.variant),
        timeout_s: config.timeout.seconds(job.inst.num_facilities()),
        cost: None,
        gap_pct: None,
        time_to_best_s: 0.0,
        iterations: 0,
        accepted: 0,
        repair_nodes: 0,
        error: None,
    };
    match engine::run(job.inst, &config) {
        Ok(result) => {
            let cost = result.best.cost();
            row.cost = Some(cost);
            row.gap_pct = spec.bks.get(job.name).and_then(|&b| compute_gap(cost, b).ok());
            row.time_to_best_s = result.time_to_best;
            row.iterations = result.iterations;
            row.accepted = result.accepted;
            row.repair_nodes = result.repair_nodes;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

/// One row per (instance, variant) in first-appearance order.
pub fn summarize(rows: &[RunRow]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, String)> = Vec::new();
    let mut groups: BTreeMap<(String, String), Vec<&RunRow>> = BTreeMap::new();
    for row in rows {
        let key = (row.instance.clone(), row.variant.clone());
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(row);
    }
    order
        .into_iter()
        .map(|key| {
            let group = &groups[&key];
            let costs: Vec<f64> = group.iter().filter_map(|r| r.cost).collect();
            let gaps: Vec<f64> = group.iter().filter_map(|r| r.gap_pct).collect();
            SummaryRow {
                instance: key.0,
                variant: key.1,
                runs: group.len(),
                min_cost: min(&costs),
                avg_cost: mean(&costs),
                min_gap_pct: min(&gaps),
                avg_gap_pct: mean(&gaps),
                failed: group.len() - costs.len(),
            }
        })
        .collect()
}

fn min(values: &[f64]) -> Option<f64> {
    values.iter().copied().reduce(f64::min)
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn opt(value: Option<f64>, fmt: impl Fn(f64) -> String) -> String {
    value.map(fmt).unwrap_or_default()
}

pub fn write_runs_csv<W: Write>(out: W, rows: &[RunRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RUNS_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.variant.clone(),
            r.seed.to_string(),
            format!("{:.3}", r.timeout_s),
            opt(r.cost, |c| c.to_string()),
            opt(r.gap_pct, |g| format!("{g:.4}")),
            format!("{:.3}", r.time_to_best_s),
            r.iterations.to_string(),
            r.accepted.to_string(),
            r.repair_nodes.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(out: W, rows: &[SummaryRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    for r in rows {
        w.write_record([
            r.instance.clone(),
            r.variant.clone(),
            r.runs.to_string(),
            opt(r.min_cost, |c| c.to_string()),
            opt(r.avg_cost, |c| format!("{c:.4}")),
            opt(r.min_gap_pct, |g| format!("{g:.4}")),
            opt(r.avg_gap_pct, |g| format!("{g:.4}")),
            r.failed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
