//! Constrained k-service clustering via sampled candidate lists.
//!
//! A solver builds a short list of candidate center sets by D^ell sampling
//! around a seed solution, then runs a constraint-specific partition
//! algorithm on every candidate and keeps the cheapest result. The
//! [`streaming`] module does the same in a constant number of passes over
//! the clients.

pub mod error;
pub mod flow;
pub mod instances;
pub mod invariants;
pub mod io;
pub mod list;
pub mod metric;
pub mod oracle;
pub mod partition;
pub mod sampling;
pub mod solver;
pub mod streaming;

pub use error::{Error, Result};
pub use instances::{gen_bad_instance, gen_random, BadInstanceBundle, BadInstanceParams, GenMode, RandomSpec};
pub use list::{build_list, build_list_from_seeds, AlgorithmParams, Candidate, CandidateList, ListMode, SampleScheme};
pub use metric::{mcpm_centers, phi, psi, CenterSet, Clustering, CostReport, Metric, MetricInstance};
pub use oracle::OracleBudget;
pub use partition::{partition, ConstraintSpec, PartitionResult};
pub use solver::{solve, solve_with_list, Solution, SolveOptions};
pub use streaming::{MemoryStream, PointStream, StreamContext, StreamSeeding};
