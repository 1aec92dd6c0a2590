//! Large neighborhood search for the multi-source capacitated facility
//! location problem with customer incompatibilities.
//!
//! Destroy operators pick a group of open facilities, their customers and a
//! few closed facilities; the resulting sub-problem is re-solved exactly by a
//! branch-and-bound ([`repair`]) and merged back when it is not worse.

pub mod clock;
pub mod construct;
pub mod destroy;
pub mod dzn;
pub mod engine;
pub mod generate;
pub mod harness;
pub mod instance;
pub mod oracle;
pub mod par;
pub mod repair;
pub mod solution;

pub use engine::{run, EngineConfig, RunResult, Timeout, Variant};
pub use instance::{parse_instance, Instance};
pub use solution::{audit, Solution};
