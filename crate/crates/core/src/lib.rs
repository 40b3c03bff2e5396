//! Reduction of constrained pseudo-Boolean problems to Ising models and a
//! distributed, qubit-capped QAOA solver built on an exact statevector
//! simulator.

pub mod distributed;
pub mod harness;
pub mod ising;
pub mod optim;
pub mod partition;
pub mod qaoa;
pub mod pbf;
pub mod reduction;

pub use ising::{brute_force_min, energy, induced_submodel, IsingError, IsingModel, SpinAssignment, SubModel};
pub use pbf::{
    parse_problem, ConstrainedProblem, Constraint, ConstraintKind, LambdaPolicy, MultilinearPolynomial, PbfError,
    PenaltyWeight, ReductionConfig, Sense, Term,
};
pub use reduction::{reduce_full, Reconstruction, ReductionError, ReductionStep, ReductionTrace};
pub use distributed::{
    approximation_ratio, naive_merge, solve_distributed, solve_with_local_solutions, solve_with_partition,
    Baseline, DistributedConfig, DistributedError, DistributedReport, SignSearch, SubgraphSolution,
};
pub use partition::{modularity, partition_with, Partition, PartitionError, PartitionMethod};
pub use qaoa::{optimize, Decode, QaoaConfig, QaoaError, QaoaResult};
pub use harness::{gen_er, gen_regular, run_benchmark, BenchResult, BenchSpec, GraphClass, HarnessError, Method};
