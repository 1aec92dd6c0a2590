//! Problem data for the multi-source capacitated facility location problem
//! with customer incompatibilities, plus the canonical text format.
//!
//! Canonical layout (whitespace separated, `#` starts a comment line):
//!
//! ```text
//! m n
//! f_1 .. f_m          opening costs
//! s_1 .. s_m          capacities
//! d_1 .. d_n          demands
//! c_i1 .. c_im        n rows of unit shipping costs
//! p
//! i1 i2               p lines, 1-based customer indices
//! ```

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Immutable instance data. Customers and facilities are 0-based internally.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    demands: Vec<u64>,
    capacities: Vec<u64>,
    opening_costs: Vec<f64>,
    /// Row-major `n x m`.
    ship_costs: Vec<f64>,
    /// Canonical pairs `(a, b)` with `a < b`, sorted.
    incompat: Vec<(usize, usize)>,
    conflicts: Vec<Vec<usize>>,
}

#[derive(Debug, Error, PartialEq)]
pub enum InstanceError {
    #[error("instance has no customers or no facilities")]
    Empty,
    #[error("expected {expected} {what}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("customer {customer} has non-positive demand")]
    NonPositiveDemand { customer: usize },
    #[error("facility {facility} has non-positive capacity")]
    NonPositiveCapacity { facility: usize },
    #[error("facility {facility} has invalid opening cost {value}")]
    InvalidOpeningCost { facility: usize, value: f64 },
    #[error("invalid shipping cost {value} for customer {customer}, facility {facility}")]
    InvalidShipCost {
        customer: usize,
        facility: usize,
        value: f64,
    },
    #[error("incompatibility pair ({0}, {1}) references a customer out of range")]
    PairOutOfRange(usize, usize),
    #[error("customer {0} is paired with itself")]
    SelfPair(usize),
    #[error("duplicate incompatibility pair ({0}, {1})")]
    DuplicatePair(usize, usize),
}

impl Instance {
    /// Builds a validated instance. `ship_costs[i][j]` is the unit cost from
    /// facility `j` to customer `i`; pairs may be given in either order.
    pub fn new(
        demands: Vec<u64>,
        capacities: Vec<u64>,
        opening_costs: Vec<f64>,
        ship_costs: Vec<Vec<f64>>,
        pairs: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, InstanceError> {
        let n = demands.len();
        let m = capacities.len();
        if n == 0 || m == 0 {
            return Err(InstanceError::Empty);
        }
        if opening_costs.len() != m {
            return Err(InstanceError::LengthMismatch {
                what: "opening costs",
                expected: m,
                found: opening_costs.len(),
            });
        }
        if ship_costs.len() != n {
            return Err(InstanceError::LengthMismatch {
                what: "shipping cost rows",
                expected: n,
                found: ship_costs.len(),
            });
        }
        if let Some(customer) = demands.iter().position(|&d| d == 0) {
            return Err(InstanceError::NonPositiveDemand { customer });
        }
        if let Some(facility) = capacities.iter().position(|&s| s == 0) {
            return Err(InstanceError::NonPositiveCapacity { facility });
        }
        for (facility, &value) in opening_costs.iter().enumerate() {
            if !(value.is_finite() && value >= 0.0) {
                return Err(InstanceError::InvalidOpeningCost { facility, value });
            }
        }
        let mut flat = Vec::with_capacity(n * m);
        for (customer, row) in ship_costs.into_iter().enumerate() {
            if row.len() != m {
                return Err(InstanceError::LengthMismatch {
                    what: "shipping costs in a row",
                    expected: m,
                    found: row.len(),
                });
            }
            for (facility, &value) in row.iter().enumerate() {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(InstanceError::InvalidShipCost {
                        customer,
                        facility,
                        value,
                    });
                }
            }
            flat.extend(row);
        }
        let mut seen = BTreeSet::new();
        for (a, b) in pairs {
            if a >= n || b >= n {
                return Err(InstanceError::PairOutOfRange(a, b));
            }
            if a == b {
                return Err(InstanceError::SelfPair(a));
            }
            let pair = (a.min(b), a.max(b));
            if !seen.insert(pair) {
                return Err(InstanceError::DuplicatePair(pair.0, pair.1));
            }
        }
        Ok(Self::assemble(demands, capacities, opening_costs, flat, seen))
    }

    fn assemble(
        demands: Vec<u64>,
        capacities: Vec<u64>,
        opening_costs: Vec<f64>,
        ship_costs: Vec<f64>,
        pairs: BTreeSet<(usize, usize)>,
    ) -> Self {
        let mut conflicts = vec![Vec::new(); demands.len()];
        for &(a, b) in &pairs {
            conflicts[a].push(b);
            conflicts[b].push(a);
        }
        for list in &mut conflicts {
            list.sort_unstable();
        }
        Self {
            demands,
            capacities,
            opening_costs,
            ship_costs,
            incompat: pairs.into_iter().collect(),
            conflicts,
        }
    }

    #[inline]
    pub fn num_customers(&self) -> usize {
        self.demands.len()
    }

    #[inline]
    pub fn num_facilities(&self) -> usize {
        self.capacities.len()
    }

    #[inline]
    pub fn demand(&self, customer: usize) -> u64 {
        self.demands[customer]
    }

    #[inline]
    pub fn capacity(&self, facility: usize) -> u64 {
        self.capacities[facility]
    }

    #[inline]
    pub fn opening_cost(&self, facility: usize) -> f64 {
        self.opening_costs[facility]
    }

    /// Unit shipping cost from `facility` to `customer`.
    #[inline]
    pub fn ship_cost(&self, customer: usize, facility: usize) -> f64 {
        self.ship_costs[customer * self.capacities.len() + facility]
    }

    /// Shipping costs of one customer, indexed by facility.
    #[inline]
    pub fn ship_row(&self, customer: usize) -> &[f64] {
        let m = self.capacities.len();
        &self.ship_costs[customer * m..(customer + 1) * m]
    }

    pub fn demands(&self) -> &[u64] {
        &self.demands
    }

    pub fn capacities(&self) -> &[u64] {
        &self.capacities
    }

    pub fn opening_costs(&self) -> &[f64] {
        &self.opening_costs
    }

    /// Canonical incompatible pairs, smaller index first.
    pub fn incompatible_pairs(&self) -> &[(usize, usize)] {
        &self.incompat
    }

    /// Customers that may not share a facility with `customer`, sorted.
    #[inline]
    pub fn conflicts(&self, customer: usize) -> &[usize] {
        &self.conflicts[customer]
    }

    pub fn are_incompatible(&self, a: usize, b: usize) -> bool {
        self.conflicts[a].binary_search(&b).is_ok()
    }

    pub fn total_demand(&self) -> u64 {
        self.demands.iter().sum()
    }

    pub fn total_capacity(&self) -> u64 {
        self.capacities.iter().sum()
    }

    /// Aggregate capacity check. Necessary but never sufficient for
    /// feasibility once incompatibilities are present.
    pub fn feasibility_bound(&self) -> FeasibilityReport {
        let total_demand = self.total_demand();
        let total_capacity = self.total_capacity();
        FeasibilityReport {
            total_demand,
            total_capacity,
            capacity_covers_demand: total_capacity >= total_demand,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeasibilityReport {
    pub total_demand: u64,
    pub total_capacity: u64,
    pub capacity_covers_demand: bool,
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "total demand {}, total capacity {}, aggregate condition {}",
            self.total_demand,
            self.total_capacity,
            if self.capacity_covers_demand {
                "holds"
            } else {
                "fails"
            }
        )
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum ParseErrorKind {
    #[error("malformed header: expected `m n` with positive counts")]
    MalformedHeader,
    #[error("unexpected end of input while reading {0}")]
    UnexpectedEof(&'static str),
    #[error("cannot parse `{token}` as {what}")]
    BadToken { token: String, what: &'static str },
    #[error("negative value {0}")]
    Negative(String),
    #[error("non-positive demand")]
    NonPositiveDemand,
    #[error("non-positive capacity")]
    NonPositiveCapacity,
    #[error("customer index {0} out of range")]
    PairIndexOutOfRange(usize),
    #[error("customer {0} paired with itself")]
    SelfPair(usize),
    #[error("duplicate pair ({0}, {1})")]
    DuplicatePair(usize, usize),
    #[error("trailing data `{0}` after the last pair")]
    TrailingData(String),
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        let mut last_line = 1;
        for (idx, line) in text.lines().enumerate() {
            last_line = idx + 1;
            if line.trim_start().starts_with('#') {
                continue;
            }
            items.extend(line.split_whitespace().map(|tok| (idx + 1, tok)));
        }
        Self {
            items,
            pos: 0,
            last_line,
        }
    }

    fn next(&mut self, what: &'static str) -> Result<(usize, &'a str), ParseError> {
        match self.items.get(self.pos) {
            Some(&item) => {
                self.pos += 1;
                Ok(item)
            }
            None => Err(ParseError {
                line: self.last_line,
                kind: ParseErrorKind::UnexpectedEof(what),
            }),
        }
    }

    fn unsigned(&mut self, what: &'static str) -> Result<(usize, u64), ParseError> {
        let (line, tok) = self.next(what)?;
        if tok.starts_with('-') {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::Negative(tok.to_string()),
            });
        }
        tok.parse::<u64>().map(|v| (line, v)).map_err(|_| ParseError {
            line,
            kind: ParseErrorKind::BadToken {
                token: tok.to_string(),
                what,
            },
        })
    }

    fn cost(&mut self, what: &'static str) -> Result<f64, ParseError> {
        let (line, tok) = self.next(what)?;
        let value = tok.parse::<f64>().map_err(|_| ParseError {
            line,
            kind: ParseErrorKind::BadToken {
                token: tok.to_string(),
                what,
            },
        })?;
        if !value.is_finite() {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::BadToken {
                    token: tok.to_string(),
                    what,
                },
            });
        }
        if value < 0.0 {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::Negative(tok.to_string()),
            });
        }
        Ok(value)
    }
}

/// Parses the canonical text format.
pub fn parse_instance(text: &str) -> Result<Instance, ParseError> {
    let mut tokens = Tokens::new(text);
    let header = |tokens: &mut Tokens<'_>| -> Result<usize, ParseError> {
        let (line, tok) = tokens.next("header")?;
        match tok.parse::<usize>() {
            Ok(v) if v > 0 => Ok(v),
            _ => Err(ParseError {
                line,
                kind: ParseErrorKind::MalformedHeader,
            }),
        }
    };
    let m = header(&mut tokens)?;
    let n = header(&mut tokens)?;

    let opening_costs = (0..m)
        .map(|_| tokens.cost("opening cost"))
        .collect::<Result<Vec<_>, _>>()?;
    let mut capacities = Vec::with_capacity(m);
    for _ in 0..m {
        let (line, s) = tokens.unsigned("capacity")?;
        if s == 0 {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::NonPositiveCapacity,
            });
        }
        capacities.push(s);
    }
    let mut demands = Vec::with_capacity(n);
    for _ in 0..n {
        let (line, d) = tokens.unsigned("demand")?;
        if d == 0 {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::NonPositiveDemand,
            });
        }
        demands.push(d);
    }
    let mut ship_costs = Vec::with_capacity(n * m);
    for _ in 0..n * m {
        ship_costs.push(tokens.cost("shipping cost")?);
    }
    let (_, p) = tokens.unsigned("pair count")?;
    let mut pairs = BTreeSet::new();
    for _ in 0..p {
        let (line, a) = tokens.unsigned("pair index")?;
        let (_, b) = tokens.unsigned("pair index")?;
        for idx in [a, b] {
            if idx == 0 || idx as usize > n {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::PairIndexOutOfRange(idx as usize),
                });
            }
        }
        let (a, b) = (a as usize - 1, b as usize - 1);
        if a == b {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::SelfPair(a + 1),
            });
        }
        let pair = (a.min(b), a.max(b));
        if !pairs.insert(pair) {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::DuplicatePair(pair.0 + 1, pair.1 + 1),
            });
        }
    }
    if let Some(&(line, tok)) = tokens.items.get(tokens.pos) {
        return Err(ParseError {
            line,
            kind: ParseErrorKind::TrailingData(tok.to_string()),
        });
    }
    Ok(Instance::assemble(
        demands,
        capacities,
        opening_costs,
        ship_costs,
        pairs,
    ))
}

impl FromStr for Instance {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_instance(s)
    }
}

fn write_row<T: fmt::Display>(f: &mut fmt::Formatter<'_>, row: &[T]) -> fmt::Result {
    for (idx, value) in row.iter().enumerate() {
        if idx > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{value}")?;
    }
    f.write_str("\n")
}

/// Serializes to the canonical format; `parse_instance` reads it back
/// unchanged.
impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.num_facilities(), self.num_customers())?;
        write_row(f, &self.opening_costs)?;
        write_row(f, &self.capacities)?;
        write_row(f, &self.demands)?;
        for i in 0..self.num_customers() {
            write_row(f, self.ship_row(i))?;
        }
        writeln!(f, "{}", self.incompat.len())?;
        for &(a, b) in &self.incompat {
            writeln!(f, "{} {}", a + 1, b + 1)?;
        }
        Ok(())
    }
}
