//! Bayes-optimal set-valued prediction over a class hierarchy.
//!
//! Given a rooted class tree and a conditional class distribution, the
//! crate finds the class set of maximal probability mass whose size is at
//! most `k` and which can be written as a union of at most `r` disjoint
//! tree nodes. Three exact solvers are provided and checked against each
//! other and against an exhaustive oracle:
//!
//! * [`mvm`]: scan of the explicitly enumerated feasible family,
//! * [`kcg`]: knapsack with conflict graph over tree nodes, solved by
//!   branch-and-bound,
//! * [`rts`]: best-first recursive tree search over a hierarchically
//!   factorized distribution.

pub mod error;
pub mod eval;
pub mod hierarchy;
pub mod io;
pub mod kcg;
pub mod mvm;
pub mod prediction;
pub mod prob;
pub mod rts;
pub mod synth;

pub use error::{Error, Result};
pub use hierarchy::{Budgets, ClassSet, Cover, Hierarchy, Interval, NodeId, NodeSpec};
pub use prediction::Prediction;
pub use prob::{FlatDistribution, HierarchicalDistribution, NodeMasses};

/// Default cap on the number of feasible sets the enumerating solver may
/// materialize.
pub const DEFAULT_ENUM_GUARD: u64 = 10_000_000;
