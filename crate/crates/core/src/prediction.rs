use web_time::Instant;

use crate::hierarchy::ClassSet;

/// Solver output for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub set: ClassSet,
    pub mass: f64,
    /// Solver-specific work counter: feasible-family size for the
    /// enumerating solver, search nodes for branch-and-bound, queue pops for
    /// the tree search, subsets scanned for the oracle.
    pub n: u64,
    pub time_us: f64,
}

pub(crate) fn elapsed_us(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e6
}
