//! Primal-dual approximation for directed Steiner tree on quasi-bipartite
//! graphs.
//!
//! The solver grows dual variables on active moats and pays for arcs through
//! separate antenna, expansion and killer buckets, then prunes with reverse
//! delete. Alongside it live exact oracles for small instances, instance
//! generators and an auditor that re-checks the dual certificate of each run.
//!
//! All algorithms are generic over the [`Cost`] scalar. The aliases below fix
//! it to an exact big rational, which is what the auditor's equality checks
//! need, or to `f64` for quick approximate runs.

pub mod audit;
pub mod engine;
pub mod error;
pub mod gen;
pub mod instance;
pub mod moats;
pub mod oracle;
pub mod scalar;

pub use engine::{
    alive_report, grow_phase, reverse_delete, solve, solve_standard_baseline, BucketKind,
    GrowthRule, GrowthTrace, Solution,
};
pub use instance::{
    normalize_parallel, parse_instance, validate, Arc, ArcId, ArcSet, FamilyTag, Instance, NodeId, NodeKind,
    Violation,
};
pub use moats::{active_moats, classify_arc, scc_decompose, EdgeRole, Moat, MoatKey};
pub use scalar::Cost;

/// Exact rational scalar.
pub type Rational = num_rational::BigRational;

pub type ExactInstance = Instance<Rational>;
pub type ExactSolution = Solution<Rational>;
pub type ExactTrace = GrowthTrace<Rational>;

pub type FloatInstance = Instance<f64>;
pub type FloatSolution = Solution<f64>;
pub type FloatTrace = GrowthTrace<f64>;
