//! Graph generators, random problem instances and the benchmark runner.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distributed::{
    approximation_ratio, local_solutions, naive_merge, solve_with_local_solutions, DistributedConfig,
    DistributedError, SignSearch,
};
use crate::ising::{brute_force_min, maxcut_model, IsingModel, BRUTE_FORCE_CAP};
use crate::partition::{modularity, partition_with, PartitionMethod};
use crate::pbf::{ConstrainedProblem, Constraint, ConstraintKind, MultilinearPolynomial, Sense};
use crate::qaoa::{optimize, QaoaConfig};

const REGULAR_ATTEMPTS: usize = 1000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("no {d}-regular graph on {n} nodes (n*d must be even and d < n)")]
    InfeasibleRegular { n: usize, d: usize },
    #[error("could not sample a {d}-regular graph on {n} nodes")]
    RegularSamplingFailed { n: usize, d: usize },
    #[error("average degree {avg} must lie in (0, {n} - 1]")]
    InvalidDegree { n: usize, avg: f64 },
    #[error("invalid weight range [{0}, {1}]")]
    InvalidWeights(i64, i64),
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Distributed(#[from] DistributedError),
}

fn weight<R: Rng>(rng: &mut R, weights: Option<(i64, i64)>) -> f64 {
    match weights {
        Some((lo, hi)) => rng.gen_range(lo..=hi) as f64,
        None => 1.0,
    }
}

fn check_weights(weights: Option<(i64, i64)>) -> Result<(), HarnessError> {
    match weights {
        Some((lo, hi)) if lo > hi => Err(HarnessError::InvalidWeights(lo, hi)),
        _ => Ok(()),
    }
}

/// One pairing attempt: pair random stubs, set aside pairs that would make a
/// loop or a multi-edge, and retry on the leftovers while a valid pair exists.
fn try_regular<R: Rng>(n: usize, d: usize, rng: &mut R) -> Option<BTreeSet<(usize, usize)>> {
    let mut edges = BTreeSet::new();
    let mut stubs: Vec<usize> = (0..n).flat_map(|v| std::iter::repeat(v).take(d)).collect();
    while !stubs.is_empty() {
        stubs.shuffle(rng);
        let mut left = Vec::new();
        for pair in stubs.chunks(2) {
            let (a, b) = (pair[0].min(pair[1]), pair[0].max(pair[1]));
            if a != b && edges.insert((a, b)) {
                continue;
            }
            left.extend_from_slice(pair);
        }
        if !left.is_empty() {
            let distinct: BTreeSet<usize> = left.iter().copied().collect();
            let open = distinct
                .iter()
                .any(|&a| distinct.iter().any(|&b| a < b && !edges.contains(&(a, b))));
            if !open {
                return None;
            }
        }
        stubs = left;
    }
    Some(edges)
}

/// Uniform-ish random `d`-regular simple graph as a Max-Cut model.
/// `weights` draws integer weights uniformly from the inclusive range.
pub fn gen_regular(n: usize, d: usize, weights: Option<(i64, i64)>, seed: u64) -> Result<IsingModel, HarnessError> {
    if d >= n.max(1) || (n * d) % 2 == 1 {
        return Err(HarnessError::InfeasibleRegular { n, d });
    }
    check_weights(weights)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..REGULAR_ATTEMPTS {
        if let Some(edges) = try_regular(n, d, &mut rng) {
            let edges: Vec<(usize, usize, f64)> = edges.into_iter().map(|(a, b)| (a, b, weight(&mut rng, weights))).collect();
            return Ok(maxcut_model(n, &edges));
        }
    }
    Err(HarnessError::RegularSamplingFailed { n, d })
}

/// Erdos-Renyi graph with edge probability `avg_degree / (n - 1)`.
pub fn gen_er(n: usize, avg_degree: f64, weights: Option<(i64, i64)>, seed: u64) -> Result<IsingModel, HarnessError> {
    if n < 2 || !(avg_degree > 0.0 && avg_degree <= (n - 1) as f64) {
        return Err(HarnessError::InvalidDegree { n, avg: avg_degree });
    }
    gen_er_p(n, avg_degree / (n - 1) as f64, weights, seed)
}

/// Erdos-Renyi graph with an explicit edge probability.
pub fn gen_er_p(n: usize, p: f64, weights: Option<(i64, i64)>, seed: u64) -> Result<IsingModel, HarnessError> {
    check_weights(weights)?;
    let p = p.clamp(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(p) {
                edges.push((i, j, weight(&mut rng, weights)));
            }
        }
    }
    Ok(maxcut_model(n, &edges))
}

/// Random constrained problem: up to `max_vars` variables, terms of degree at
/// most `max_degree` with integer coefficients in `[-coeff, coeff]`, and with
/// probability one half a single feasible `<=` constraint.
pub fn random_problem<R: Rng>(rng: &mut R, max_vars: usize, max_degree: usize, coeff: i64) -> ConstrainedProblem {
    let n = rng.gen_range(1..=max_vars.max(1));
    let poly = |rng: &mut R, terms: usize| {
        let mut p = MultilinearPolynomial::new();
        for _ in 0..terms {
            let d = rng.gen_range(1..=max_degree.min(n).max(1));
            let vars: Vec<usize> = (0..d).map(|_| rng.gen_range(0..n)).collect();
            p.add_term(&vars, rng.gen_range(-coeff..=coeff) as f64);
        }
        p
    };
    let terms = rng.gen_range(1..=2 * n);
    let objective = poly(rng, terms);
    let names = (0..n).map(|i| format!("x{}", i + 1)).collect();
    let sense = if rng.gen_bool(0.5) { Sense::Min } else { Sense::Max };
    let mut problem = ConstrainedProblem::new(objective, sense, names);
    if rng.gen_bool(0.5) {
        let terms = rng.gen_range(1..=n.min(4));
        let mut g = poly(rng, terms);
        let witness: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        let at = g.evaluate(&witness).expect("witness covers every variable");
        let room = rng.gen_range(0..=2) as f64;
        g.add_term(&[], -(at + room));
        problem.constraints.push(Constraint {
            poly: g,
            kind: ConstraintKind::Leq,
        });
    }
    problem
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GraphClass {
    /// Unweighted regular.
    UR,
    /// Weighted regular.
    WR,
    /// Unweighted Erdos-Renyi.
    UE,
    /// Weighted Erdos-Renyi.
    WE,
}

impl GraphClass {
    pub const ALL: [GraphClass; 4] = [Self::UR, Self::WR, Self::UE, Self::WE];

    pub fn weighted(self) -> bool {
        matches!(self, Self::WR | Self::WE)
    }

    pub fn regular(self) -> bool {
        matches!(self, Self::UR | Self::WR)
    }
}

impl fmt::Display for GraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for GraphClass {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "UR" => Ok(Self::UR),
            "WR" => Ok(Self::WR),
            "UE" => Ok(Self::UE),
            "WE" => Ok(Self::WE),
            _ => Err(format!("unknown graph class '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pipeline {
    /// Compression, joins and top-down updates.
    Ours,
    /// Local solutions kept, only community signs optimized.
    Naive,
}

/// A pipeline paired with a partition method, written `ours-louvain` etc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Method {
    pub pipeline: Pipeline,
    pub partition: PartitionMethod,
}

impl Method {
    pub const fn new(pipeline: Pipeline, partition: PartitionMethod) -> Self {
        Self { pipeline, partition }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = match self.pipeline {
            Pipeline::Ours => "ours",
            Pipeline::Naive => "naive",
        };
        write!(f, "{p}-{}", self.partition)
    }
}

impl FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (p, m) = s.split_once('-').ok_or_else(|| format!("unknown method '{s}'"))?;
        let pipeline = match p {
            "ours" => Pipeline::Ours,
            "naive" => Pipeline::Naive,
            _ => return Err(format!("unknown method '{s}'")),
        };
        Ok(Self::new(pipeline, m.parse()?))
    }
}

impl TryFrom<String> for Method {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Method> for String {
    fn from(m: Method) -> Self {
        m.to_string()
    }
}

/// One benchmark cell: a graph class, its size parameters and the methods to
/// compare over a list of seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub graph_class: GraphClass,
    pub n: usize,
    /// Regular classes; default 9.
    #[serde(default)]
    pub degree: Option<usize>,
    /// Erdos-Renyi classes; default 5.
    #[serde(default)]
    pub avg_degree: Option<f64>,
    /// Weighted classes; default `[1, 6]`.
    #[serde(default)]
    pub weight_range: Option<(i64, i64)>,
    pub q_cap: usize,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub qaoa: QaoaConfig,
}

impl BenchSpec {
    pub fn new(graph_class: GraphClass, n: usize, q_cap: usize, methods: Vec<Method>, seeds: Vec<u64>) -> Self {
        Self {
            graph_class,
            n,
            degree: None,
            avg_degree: None,
            weight_range: None,
            q_cap,
            methods,
            seeds,
            qaoa: QaoaConfig::default(),
        }
    }

    fn weights(&self) -> Option<(i64, i64)> {
        self.graph_class.weighted().then(|| self.weight_range.unwrap_or((1, 6)))
    }

    /// The instance for `seed`.
    pub fn graph(&self, seed: u64) -> Result<IsingModel, HarnessError> {
        if self.graph_class.regular() {
            gen_regular(self.n, self.degree.unwrap_or(9), self.weights(), seed)
        } else {
            gen_er(self.n, self.avg_degree.unwrap_or(5.0), self.weights(), seed)
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.q_cap < 2 {
            return Err(HarnessError::InvalidSpec("q_cap must be at least 2".into()));
        }
        if self.methods.is_empty() || self.seeds.is_empty() {
            return Err(HarnessError::InvalidSpec("methods and seeds must be nonempty".into()));
        }
        self.qaoa
            .validate()
            .map_err(|e| HarnessError::InvalidSpec(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Exhaustive ground state.
    Exhaustive,
    /// Lowest energy found by any method on the same graph.
    BestFound,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Exhaustive => "exhaustive",
            Self::BestFound => "best-found",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Denominator {
    pub seed: u64,
    pub v_min: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub class: GraphClass,
    pub method: Method,
    pub seed: u64,
    pub n: usize,
    pub q: usize,
    pub r: f64,
    pub value: f64,
    pub modularity: f64,
    pub tree_height: usize,
    pub runtime_ms: f64,
}

/// Box-plot statistics of one column.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub lower_fence: f64,
    pub upper_fence: f64,
}

impl Stats {
    pub const NAMES: [&'static str; 6] = ["mean", "median", "q1", "q3", "lower_fence", "upper_fence"];

    /// Quartiles by linear interpolation; fences at 1.5 IQR.
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self {
                mean: f64::NAN,
                median: f64::NAN,
                q1: f64::NAN,
                q3: f64::NAN,
                lower_fence: f64::NAN,
                upper_fence: f64::NAN,
            };
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let quantile = |q: f64| {
            let pos = q * (v.len() - 1) as f64;
            let lo = pos.floor() as usize;
            let hi = pos.ceil() as usize;
            v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
        };
        let (q1, q3) = (quantile(0.25), quantile(0.75));
        let iqr = q3 - q1;
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            median: quantile(0.5),
            q1,
            q3,
            lower_fence: q1 - 1.5 * iqr,
            upper_fence: q3 + 1.5 * iqr,
        }
    }

    fn values(&self) -> [f64; 6] {
        [self.mean, self.median, self.q1, self.q3, self.lower_fence, self.upper_fence]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub class: GraphClass,
    pub method: Method,
    pub n: usize,
    pub q: usize,
    pub r: Stats,
    pub value: Stats,
    pub modularity: Stats,
    pub tree_height: Stats,
    pub runtime_ms: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<SummaryRow>,
    pub denominators: Vec<Denominator>,
}

pub const CSV_HEADER: &str = "class,method,seed,n,q,r,value,Q_modularity,tree_height,runtime_ms";

impl BenchResult {
    pub fn mean_r(&self, class: GraphClass, method: Method) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.class == class && s.method == method)
            .map(|s| s.r.mean)
    }

    pub fn extend(&mut self, other: BenchResult) {
        self.rows.extend(other.rows);
        self.summary.extend(other.summary);
        self.denominators.extend(other.denominators);
    }

    /// Per-seed rows, then one summary row per statistic with the statistic's
    /// name in the seed column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{:.6},{},{:.6},{},{:.3}\n",
                r.class, r.method, r.seed, r.n, r.q, r.r, r.value, r.modularity, r.tree_height, r.runtime_ms
            ));
        }
        for s in &self.summary {
            let cols = [s.r.values(), s.value.values(), s.modularity.values(), s.tree_height.values(), s.runtime_ms.values()];
            for (k, name) in Stats::NAMES.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{:.6},{:.6},{:.6},{:.3},{:.3}\n",
                    s.class, s.method, name, s.n, s.q, cols[0][k], cols[1][k], cols[2][k], cols[3][k], cols[4][k]
                ));
            }
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for s in &self.summary {
            out.push_str(&format!(
                "{} {:<14} n={} q={}  r mean {:.4} median {:.4} [q1 {:.4}, q3 {:.4}]  Q {:.3}  height {:.2}  {:.1} ms\n",
                s.class, s.method, s.n, s.q, s.r.mean, s.r.median, s.r.q1, s.r.q3, s.modularity.mean, s.tree_height.mean, s.runtime_ms.mean
            ));
        }
        let exhaustive = self.denominators.iter().filter(|d| d.provenance == Provenance::Exhaustive).count();
        out.push_str(&format!(
            "denominators: {} exhaustive, {} best-found\n",
            exhaustive,
            self.denominators.len() - exhaustive
        ));
        out
    }
}

struct SeedOutcome {
    rows: Vec<BenchRow>,
    denominator: Denominator,
}

fn run_seed(spec: &BenchSpec, seed: u64) -> Result<SeedOutcome, HarnessError> {
    let model = spec.graph(seed)?;
    let config = DistributedConfig {
        q_cap: spec.q_cap,
        qaoa: spec.qaoa.with_seed(seed),
        ..DistributedConfig::default()
    };
    // (method, value, modularity, height, ms)
    let mut results: Vec<(Method, f64, f64, usize, f64)> = Vec::new();
    if model.n() <= spec.q_cap {
        let start = Instant::now();
        let plain = optimize(&model, &config.qaoa).map_err(DistributedError::from)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        for &m in &spec.methods {
            results.push((m, plain.best_energy, 0.0, 0, ms));
        }
    } else {
        let mut partitions: Vec<PartitionMethod> = Vec::new();
        for m in &spec.methods {
            if !partitions.contains(&m.partition) {
                partitions.push(m.partition);
            }
        }
        for pm in partitions {
            let start = Instant::now();
            let partition = partition_with(&model, pm, spec.q_cap, seed);
            let q = modularity(&model, &partition);
            let local = local_solutions(&model, &partition, &config)?;
            let shared = start.elapsed().as_secs_f64() * 1e3;
            for &m in spec.methods.iter().filter(|m| m.partition == pm) {
                let start = Instant::now();
                let (value, height) = match m.pipeline {
                    Pipeline::Ours => {
                        let r = solve_with_local_solutions(&model, &partition, Some(local.clone()), &config)?;
                        (r.value, r.tree_height)
                    }
                    Pipeline::Naive => (naive_merge(&local, &model, SignSearch::Qaoa, &config)?.value, 1),
                };
                results.push((m, value, q, height, shared + start.elapsed().as_secs_f64() * 1e3));
            }
        }
    }
    let denominator = if model.n() <= BRUTE_FORCE_CAP {
        Denominator {
            seed,
            v_min: brute_force_min(&model).map_err(DistributedError::from)?.1,
            provenance: Provenance::Exhaustive,
        }
    } else {
        Denominator {
            seed,
            v_min: results.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
            provenance: Provenance::BestFound,
        }
    };
    let rows = results
        .into_iter()
        .map(|(method, value, modularity, tree_height, runtime_ms)| BenchRow {
            class: spec.graph_class,
            method,
            seed,
            n: model.n(),
            q: spec.q_cap,
            r: ratio(denominator.v_min, value),
            value,
            modularity,
            tree_height,
            runtime_ms,
        })
        .collect();
    Ok(SeedOutcome { rows, denominator })
}

/// Ratio against the no-cut reference `v_max = 0`; a graph whose optimum is
/// also zero scores 1.
fn ratio(v_min: f64, value: f64) -> f64 {
    approximation_ratio(0.0, v_min, value).unwrap_or(1.0)
}

/// Runs every method on every seed's graph. Seeds run in parallel; rows come
/// back ordered by method (as listed) then seed.
pub fn run_benchmark(spec: &BenchSpec) -> Result<BenchResult, HarnessError> {
    spec.validate()?;
    let outcomes: Vec<SeedOutcome> = spec
        .seeds
        .par_iter()
        .map(|&seed| run_seed(spec, seed))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut summary = Vec::new();
    for &m in &spec.methods {
        let cell: Vec<BenchRow> = outcomes
            .iter()
            .flat_map(|o| o.rows.iter().filter(|r| r.method == m).cloned())
            .collect();
        let col = |f: fn(&BenchRow) -> f64| Stats::of(&cell.iter().map(f).collect::<Vec<_>>());
        summary.push(SummaryRow {
            class: spec.graph_class,
            method: m,
            n: spec.n,
            q: spec.q_cap,
            r: col(|r| r.r),
            value: col(|r| r.value),
            modularity: col(|r| r.modularity),
            tree_height: col(|r| r.tree_height as f64),
            runtime_ms: col(|r| r.runtime_ms),
        });
        rows.extend(cell);
    }
    Ok(BenchResult {
        rows,
        summary,
        denominators: outcomes.into_iter().map(|o| o.denominator).collect(),
    })
}
