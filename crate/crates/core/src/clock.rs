//! Time source shared by the engine and the repair solver.
//!
//! The wall clock is what benchmark runs use. The logical clock advances by a
//! fixed amount per unit of search work (one branch-and-bound node), which
//! makes time-limited runs reproducible bit for bit.

use std::cell::Cell;
use std::time::Instant;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ClockKind {
    Wall,
    Logical { seconds_per_node: f64 },
}

impl ClockKind {
    /// Logical clock with the default node cost.
    pub const fn logical() -> Self {
        ClockKind::Logical {
            seconds_per_node: DEFAULT_SECONDS_PER_NODE,
        }
    }
}

/// Roughly the cost of one node on a desk machine for sub-problems of the
/// tuned size.
pub const DEFAULT_SECONDS_PER_NODE: f64 = 1e-3;

#[derive(Debug)]
pub struct Clock {
    kind: ClockKind,
    start: Instant,
    logical: Cell<f64>,
}

impl Clock {
    pub fn new(kind: ClockKind) -> Self {
        Self {
            kind,
            start: Instant::now(),
            logical: Cell::new(0.0),
        }
    }

    pub fn wall() -> Self {
        Self::new(ClockKind::Wall)
    }

    pub fn kind(&self) -> ClockKind {
        self.kind
    }

    /// Seconds since construction.
    pub fn elapsed(&self) -> f64 {
        match self.kind {
            ClockKind::Wall => self.start.elapsed().as_secs_f64(),
            ClockKind::Logical { .. } => self.logical.get(),
        }
    }

    /// Records `nodes` units of work. No effect on the wall clock.
    pub fn charge(&self, nodes: u64) {
        if let ClockKind::Logical { seconds_per_node } = self.kind {
            self.logical.set(self.logical.get() + nodes as f64 * seconds_per_node);
        }
    }
}
