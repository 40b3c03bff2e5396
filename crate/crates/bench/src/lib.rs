//! Fixed instances shared by the criterion benchmarks.

use pbqaoa::harness::{gen_er, gen_regular};
use pbqaoa::{parse_problem, ConstrainedProblem, DistributedConfig, IsingModel, QaoaConfig};

pub const KNAPSACK: &str = "\
max: 2 x1 + 5 x2 + 2 x3 + 2 x4 - 2 x7 + 8 x1*x2 + 6 x1*x3 + 10 x1*x4 + 4 x1*x5 + 2 x2*x3 + 6 x2*x4 + 3 x2*x6 + 4 x3*x4 + 4 x4*x7 + 7 x1*x3*x4
8 x1 + 6 x2 + 5 x3 + 3 x4 <= 16
";

pub fn knapsack() -> ConstrainedProblem {
    parse_problem(KNAPSACK).expect("fixture parses")
}

/// Unweighted 5-regular graph.
pub fn regular(n: usize) -> IsingModel {
    gen_regular(n, 5, None, 1).expect("fixture is feasible")
}

/// Weighted Erdos-Renyi graph with average degree 5.
pub fn weighted_er(n: usize) -> IsingModel {
    gen_er(n, 5.0, Some((1, 6)), 1).expect("fixture is feasible")
}

pub fn distributed_config(q_cap: usize) -> DistributedConfig {
    DistributedConfig {
        q_cap,
        qaoa: QaoaConfig::default(),
        ..DistributedConfig::default()
    }
}
