//! Distributed QAOA under a qubit cap.
//!
//! The model is partitioned into communities that each fit on one device.
//! Every community is solved locally, then its in-nodes (those with no
//! neighbor outside the community) are replaced by one representative spin
//! whose value means "keep" (+1) or "flip" (-1) the local in-part. The
//! compressed graphs are joined while they fit the cap and the process repeats
//! until a single graph remains. The root solution is pushed back down level by
//! level: each community's candidate is read off the parent's solution and its
//! representative set is re-optimized with every other spin fixed.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::{brute_force_min, induced_submodel, IsingError, IsingModel, SpinAssignment};
use crate::partition::{modularity, partition_with, Partition, PartitionError, PartitionMethod};
use crate::qaoa::{optimize, QaoaConfig, QaoaError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistributedError {
    #[error(transparent)]
    Qaoa(#[from] QaoaError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Ising(#[from] IsingError),
    #[error("qubit cap must be at least 2 (got {0})")]
    CapTooSmall(usize),
    #[error("community {community} has {size} nodes, cap is {cap}")]
    OverCap { community: usize, size: usize, cap: usize },
    #[error("partition covers {got} nodes, model has {expected}")]
    PartitionMismatch { expected: usize, got: usize },
    #[error("local solution for community {0} does not match its nodes")]
    SolutionMismatch(usize),
    #[error("ratio needs v_max > v_min (got {v_max} and {v_min})")]
    DegenerateRange { v_max: f64, v_min: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Baseline {
    None,
    Naive,
}

impl std::str::FromStr for Baseline {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "naive" => Ok(Self::Naive),
            other => Err(format!("unknown baseline '{other}'")),
        }
    }
}

/// How the naive baseline chooses community signs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignSearch {
    /// QAOA on the sign model, in chunks of the cap when it is too large.
    Qaoa,
    /// Enumerate every sign vector.
    Exhaustive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedConfig {
    pub q_cap: usize,
    pub partition: PartitionMethod,
    pub qaoa: QaoaConfig,
    pub baseline: Baseline,
    /// Representative sets up to this size are re-solved exhaustively.
    pub exact_local_limit: usize,
    /// Also try the naive sign merge of the level-0 local solutions and keep
    /// whichever final assignment is lower.
    #[serde(default = "default_true")]
    pub sign_guard: bool,
}

fn default_true() -> bool {
    true
}

impl Default for DistributedConfig {
    fn default() -> Self {
        Self {
            q_cap: 10,
            partition: PartitionMethod::Louvain,
            qaoa: QaoaConfig::default(),
            baseline: Baseline::None,
            exact_local_limit: 12,
            sign_guard: true,
        }
    }
}

impl DistributedConfig {
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            qaoa: self.qaoa.with_seed(seed),
            ..self.clone()
        }
    }
}

/// Local solution of one community.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubgraphSolution {
    pub community: usize,
    pub level: usize,
    /// Community nodes, sorted; `local_z[k]` belongs to `nodes[k]`.
    pub nodes: Vec<usize>,
    pub local_z: SpinAssignment,
    pub in_set: Vec<usize>,
    pub out_set: Vec<usize>,
    /// Out-nodes folded into the representative to make room in a join.
    #[serde(default)]
    pub absorbed: Vec<usize>,
    /// Energy of the community's internal terms at `local_z`.
    pub energy: f64,
}

impl SubgraphSolution {
    /// Nodes flipped together by the representative spin.
    pub fn rep_set(&self) -> Vec<usize> {
        let mut r: Vec<usize> = self.in_set.iter().chain(&self.absorbed).copied().collect();
        r.sort_unstable();
        r
    }

    pub fn value_of(&self, node: usize) -> i8 {
        let k = self.nodes.binary_search(&node).expect("node belongs to the community");
        self.local_z.get(k)
    }
}

/// `(in_set, out_set)` of every community: in-nodes have all neighbors inside.
pub fn classify_nodes(model: &IsingModel, partition: &Partition) -> Vec<(Vec<usize>, Vec<usize>)> {
    let adj = model.adjacency();
    partition
        .communities
        .iter()
        .enumerate()
        .map(|(k, nodes)| {
            nodes
                .iter()
                .partition(|&&v| adj[v].iter().all(|&(u, _)| partition.community_of[u] == k))
        })
        .collect()
}

fn mix_seed(seed: u64, level: usize, community: usize) -> u64 {
    let mut z = seed
        .wrapping_add((level as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add((community as u64 + 1).wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Solves the community's internal terms (no boundary fields) with QAOA.
pub fn solve_local(
    model: &IsingModel,
    partition: &Partition,
    community: usize,
    level: usize,
    config: &QaoaConfig,
) -> Result<SubgraphSolution, DistributedError> {
    let nodes = partition.communities[community].clone();
    if nodes.len() > partition.q_cap {
        return Err(DistributedError::OverCap {
            community,
            size: nodes.len(),
            cap: partition.q_cap,
        });
    }
    let sub = model.restrict(&nodes, false);
    let result = optimize(&sub, config)?;
    let classes = classify_nodes(model, partition);
    let (in_set, out_set) = classes[community].clone();
    Ok(SubgraphSolution {
        community,
        level,
        nodes,
        energy: result.best_energy,
        local_z: result.best_bitstring,
        in_set,
        out_set,
        absorbed: Vec::new(),
    })
}

/// Builds a solution from a given local assignment (in community node order).
pub fn fixed_solution(
    model: &IsingModel,
    partition: &Partition,
    community: usize,
    local_z: SpinAssignment,
) -> Result<SubgraphSolution, DistributedError> {
    let nodes = partition.communities[community].clone();
    if local_z.len() != nodes.len() {
        return Err(DistributedError::SolutionMismatch(community));
    }
    let energy = model.restrict(&nodes, false).energy(&local_z)?;
    let (in_set, out_set) = classify_nodes(model, partition)[community].clone();
    Ok(SubgraphSolution {
        community,
        level: 0,
        nodes,
        local_z,
        in_set,
        out_set,
        absorbed: Vec::new(),
        energy,
    })
}

/// A community with its representative set collapsed into one spin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressedGraph {
    pub community: usize,
    pub rep_set: Vec<usize>,
    /// Community nodes kept as copies.
    pub out_nodes: Vec<usize>,
    /// `(j, sum_{i in rep} w_ij z_i)` for every neighbor `j` of the rep set.
    pub rep_edges: Vec<(usize, f64)>,
    /// `sum_{i in rep} w_i z_i`.
    pub rep_linear: f64,
    /// Energy of the couplings inside the rep set at the local solution.
    pub carried_constant: f64,
    /// Internal terms among the copied nodes, indexed like `out_nodes`.
    pub out_model: IsingModel,
}

impl CompressedGraph {
    /// Energy with representative value `rep` and copied nodes at `out_z`
    /// (indexed like `out_nodes`); carried constant excluded. Rep edges that
    /// leave the community are ignored.
    pub fn energy(&self, rep: i8, out_z: &[i8]) -> f64 {
        let pos: BTreeMap<usize, usize> = self.out_nodes.iter().enumerate().map(|(k, &v)| (v, k)).collect();
        let r = f64::from(rep);
        let edges: f64 = self
            .rep_edges
            .iter()
            .filter_map(|(j, w)| pos.get(j).map(|&k| w * r * f64::from(out_z[k])))
            .sum();
        edges + self.rep_linear * r + self.out_model.energy_of(out_z)
    }
}

pub fn compress(model: &IsingModel, solution: &SubgraphSolution) -> CompressedGraph {
    let rep_set = solution.rep_set();
    let in_rep: BTreeSet<usize> = rep_set.iter().copied().collect();
    let out_nodes: Vec<usize> = solution.nodes.iter().copied().filter(|v| !in_rep.contains(v)).collect();
    let mut edges: BTreeMap<usize, f64> = BTreeMap::new();
    let mut carried = 0.0;
    for ((i, j), w) in model.quadratic_terms() {
        match (in_rep.contains(&i), in_rep.contains(&j)) {
            (true, true) => carried += w * f64::from(solution.value_of(i) * solution.value_of(j)),
            (true, false) => *edges.entry(j).or_insert(0.0) += w * f64::from(solution.value_of(i)),
            (false, true) => *edges.entry(i).or_insert(0.0) += w * f64::from(solution.value_of(j)),
            (false, false) => {}
        }
    }
    let rep_linear = rep_set
        .iter()
        .map(|&i| model.linear(i) * f64::from(solution.value_of(i)))
        .sum();
    CompressedGraph {
        community: solution.community,
        out_model: model.restrict(&out_nodes, false),
        rep_set,
        out_nodes,
        rep_edges: edges.into_iter().collect(),
        rep_linear,
        carried_constant: carried,
    }
}

/// Next-level model built from per-community representative sets.
#[derive(Debug, Clone)]
struct CompressedLevel {
    model: IsingModel,
    /// Next-level nodes contributed by each community.
    groups: Vec<Vec<usize>>,
    rep_node: Vec<Option<usize>>,
    copy_node: Vec<Option<usize>>,
}

fn compress_level(model: &IsingModel, solutions: &[SubgraphSolution], level: usize) -> CompressedLevel {
    let n = model.n();
    let mut count = 0usize;
    let mut groups = Vec::new();
    let mut rep_node = vec![None; solutions.len()];
    let mut copy_node = vec![None; n];
    // (next id, factor) for each node of this level
    let mut image = vec![(usize::MAX, 1i8); n];
    let mut labels = Vec::new();
    for (k, sol) in solutions.iter().enumerate() {
        let mut group = Vec::new();
        let rep = sol.rep_set();
        if !rep.is_empty() {
            let id = count;
            count += 1;
            labels.push(format!("I{}.{}", level + 1, k));
            rep_node[k] = Some(id);
            group.push(id);
            for &v in &rep {
                image[v] = (id, sol.value_of(v));
            }
        }
        for &v in &sol.nodes {
            if image[v].0 == usize::MAX {
                let id = count;
            count += 1;
                labels.push(model.labels[v].clone());
                copy_node[v] = Some(id);
                group.push(id);
                image[v] = (id, 1);
            }
        }
        groups.push(group);
    }
    let mut next = IsingModel::with_labels(labels);
    next.offset = model.offset;
    for ((u, v), w) in model.quadratic_terms() {
        let (a, fa) = image[u];
        let (b, fb) = image[v];
        let wf = w * f64::from(fa * fb);
        if a == b {
            next.offset += wf;
        } else {
            next.add_quadratic(a, b, wf);
        }
    }
    for (u, h) in model.linear_terms() {
        let (a, fa) = image[u];
        next.add_linear(a, h * f64::from(fa));
    }
    CompressedLevel {
        model: next,
        groups,
        rep_node,
        copy_node,
    }
}

/// Greedily merges groups in descending order of total `|w|` between them,
/// as long as the union fits `q_cap`; unconnected pairs merge last.
pub fn join(model: &IsingModel, groups: &[Vec<usize>], q_cap: usize) -> Vec<Vec<usize>> {
    let mut groups: Vec<Vec<usize>> = groups.to_vec();
    let mut owner = vec![usize::MAX; model.n()];
    for (g, nodes) in groups.iter().enumerate() {
        for &v in nodes {
            owner[v] = g;
        }
    }
    let mut alive: Vec<bool> = vec![true; groups.len()];
    loop {
        let mut weight: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for ((u, v), w) in model.quadratic_terms() {
            let (a, b) = (owner[u], owner[v]);
            if a != b {
                *weight.entry((a.min(b), a.max(b))).or_insert(0.0) += w.abs();
            }
        }
        let live: Vec<usize> = (0..groups.len()).filter(|&g| alive[g]).collect();
        let mut best: Option<(f64, usize, usize)> = None;
        for (x, &a) in live.iter().enumerate() {
            for &b in &live[x + 1..] {
                if groups[a].len() + groups[b].len() > q_cap {
                    continue;
                }
                let w = weight.get(&(a, b)).copied().unwrap_or(0.0);
                if best.map_or(true, |(bw, _, _)| w > bw) {
                    best = Some((w, a, b));
                }
            }
        }
        let Some((_, a, b)) = best else { break };
        let moved = std::mem::take(&mut groups[b]);
        for &v in &moved {
            owner[v] = a;
        }
        groups[a].extend(moved);
        alive[b] = false;
    }
    groups
        .into_iter()
        .zip(alive)
        .filter(|(_, a)| *a)
        .map(|(mut g, _)| {
            g.sort_unstable();
            g
        })
        .collect()
}

/// Community values implied by the parent's solution: the representative's
/// sign applied to the local rep-set values, copied nodes read directly.
pub fn global_update(solution: &SubgraphSolution, level_assignment: &[i8]) -> SpinAssignment {
    SpinAssignment::new(solution.nodes.iter().map(|&v| level_assignment[v]).collect())
        .expect("level assignment holds spins")
}

fn expand(level: &LevelData, next_z: &[i8]) -> Vec<i8> {
    let mut z = vec![1i8; level.model.n()];
    for (k, sol) in level.solutions.iter().enumerate() {
        let sign = level.compressed.rep_node[k].map_or(1, |id| next_z[id]);
        for &v in &sol.rep_set() {
            z[v] = sign * sol.value_of(v);
        }
        for &v in &sol.nodes {
            if let Some(id) = level.compressed.copy_node[v] {
                z[v] = next_z[id];
            }
        }
    }
    z
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdatePath {
    /// Candidate equals the local solution or its flip.
    Truncated,
    /// The representative set was re-optimized.
    Updated,
}

/// Outcome of [`local_update`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalUpdate {
    pub solution: SubgraphSolution,
    pub path: UpdatePath,
}

/// Re-optimizes the representative set of `solution` with every other spin
/// fixed at `assignment` (a full assignment of `model`), writing the result
/// into `assignment`. The kept in-part is never worse than the candidate or
/// its in-part flip.
pub fn local_update(
    model: &IsingModel,
    solution: &SubgraphSolution,
    assignment: &mut [i8],
    exact_limit: usize,
    config: &QaoaConfig,
) -> Result<LocalUpdate, DistributedError> {
    let candidate = global_update(solution, assignment);
    let rep = solution.rep_set();
    let flipped = solution.local_z.flipped();
    let path = if candidate == solution.local_z || candidate == flipped {
        UpdatePath::Truncated
    } else {
        UpdatePath::Updated
    };
    if !rep.is_empty() {
        let fix: BTreeMap<usize, i8> = (0..model.n())
            .filter(|v| rep.binary_search(v).is_err())
            .map(|v| (v, assignment[v]))
            .collect();
        let sub = induced_submodel(model, &rep, &fix)?;
        let current: Vec<i8> = rep.iter().map(|&v| assignment[v]).collect();
        let mut best_z = current.clone();
        let mut best_e = sub.energy_of(&current);
        let neg: Vec<i8> = current.iter().map(|s| -s).collect();
        let e = sub.energy_of(&neg);
        if e < best_e {
            best_z = neg;
            best_e = e;
        }
        if path == UpdatePath::Updated {
            let folded = sub.folded();
            let resolved = if rep.len() <= exact_limit {
                brute_force_min(&folded)?.0
            } else {
                optimize(&folded, config)?.best_bitstring
            };
            let e = sub.energy_of(resolved.values());
            if e < best_e {
                best_z = resolved.values().to_vec();
            }
        }
        for (&v, &s) in rep.iter().zip(&best_z) {
            assignment[v] = s;
        }
    }
    let local_z = global_update(solution, assignment);
    let energy = model.restrict(&solution.nodes, false).energy(&local_z)?;
    Ok(LocalUpdate {
        solution: SubgraphSolution {
            local_z,
            energy,
            ..solution.clone()
        },
        path,
    })
}

#[derive(Debug, Clone)]
struct LevelData {
    model: IsingModel,
    partition: Partition,
    solutions: Vec<SubgraphSolution>,
    compressed: CompressedLevel,
    /// Community of the next level that absorbed each community's group.
    parent: Vec<usize>,
}

/// Per-level summary in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub level: usize,
    pub nodes: usize,
    pub community_sizes: Vec<usize>,
    /// Sum of local-solution energies before the top-down pass.
    pub local_energy: f64,
    /// Energy of this level's model after the top-down update.
    pub energy: f64,
    pub truncated: usize,
    pub updated: usize,
    /// Community index at the next level holding each community.
    pub parent: Vec<usize>,
    /// Final (updated) community solutions.
    pub solutions: Vec<SubgraphSolution>,
}

/// One node of the merge tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeNode {
    pub level: usize,
    pub community: usize,
    pub size: usize,
    /// Representative value chosen by the parent (+1 keep, -1 flip).
    pub sign: i8,
    pub children: Vec<MergeNode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub value: f64,
    pub signs: Vec<i8>,
    pub assignment: SpinAssignment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedReport {
    pub assignment: SpinAssignment,
    pub value: f64,
    /// Number of compression levels below the root.
    pub tree_height: usize,
    pub root_size: usize,
    pub root_value: f64,
    /// QAOA expectation at the root's optimized angles.
    pub root_expectation: f64,
    pub levels: Vec<LevelReport>,
    pub partition: Partition,
    pub modularity: f64,
    /// Level-0 local solutions before the top-down pass.
    pub local_solutions: Vec<SubgraphSolution>,
    /// Out-nodes folded into representatives to guarantee join progress.
    pub absorptions: usize,
    /// The naive-signed candidate beat the top-down result.
    pub guard_used: bool,
    pub baseline: Option<BaselineReport>,
    #[serde(skip)]
    signs: Vec<Vec<i8>>,
}

impl DistributedReport {
    pub fn merge_tree(&self) -> MergeNode {
        let top = self.levels.len();
        let mut below: Vec<MergeNode> = Vec::new();
        for (i, lvl) in self.levels.iter().enumerate() {
            let mut nodes: Vec<MergeNode> = lvl
                .solutions
                .iter()
                .enumerate()
                .map(|(k, s)| MergeNode {
                    level: i,
                    community: k,
                    size: s.nodes.len(),
                    sign: self.signs[i][k],
                    children: Vec::new(),
                })
                .collect();
            if i > 0 {
                let prev = &self.levels[i - 1];
                for (child, &p) in below.drain(..).zip(&prev.parent) {
                    nodes[p].children.push(child);
                }
            }
            below = nodes;
        }
        let mut root = MergeNode {
            level: top,
            community: 0,
            size: self.root_size,
            sign: 1,
            children: Vec::new(),
        };
        if let Some(last) = self.levels.last() {
            for (child, &p) in below.into_iter().zip(&last.parent) {
                debug_assert_eq!(p, 0);
                root.children.push(child);
            }
        }
        root
    }
}

fn external_weight(model: &IsingModel, partition: &Partition, v: usize) -> f64 {
    let c = partition.community_of[v];
    model
        .adjacency()
        .get(v)
        .map(|a| a.iter().filter(|(u, _)| partition.community_of[*u] != c).map(|(_, w)| w.abs()).sum())
        .unwrap_or(0.0)
}

fn group_size(sol: &SubgraphSolution) -> usize {
    let rep = sol.rep_set().len();
    sol.nodes.len() - rep + usize::from(rep > 0)
}

/// Shrinks the two smallest compressed graphs by folding out-nodes into their
/// representatives until they fit together.
fn absorb_for_progress(model: &IsingModel, partition: &Partition, solutions: &mut [SubgraphSolution], q_cap: usize) -> usize {
    let m = solutions.len();
    let mut best: Option<(usize, usize, usize)> = None;
    for a in 0..m {
        for b in a + 1..m {
            let s = group_size(&solutions[a]) + group_size(&solutions[b]);
            if best.map_or(true, |(bs, _, _)| s < bs) {
                best = Some((s, a, b));
            }
        }
    }
    let Some((_, a, b)) = best else { return 0 };
    let mut count = 0;
    while group_size(&solutions[a]) + group_size(&solutions[b]) > q_cap {
        let k = if group_size(&solutions[b]) > group_size(&solutions[a]) { b } else { a };
        let sol = &mut solutions[k];
        let rep = sol.rep_set();
        let pick = sol
            .out_set
            .iter()
            .copied()
            .filter(|v| rep.binary_search(v).is_err())
            .min_by(|&x, &y| {
                external_weight(model, partition, x)
                    .total_cmp(&external_weight(model, partition, y))
                    .then(x.cmp(&y))
            })
            .expect("a group larger than one node has an out-node left");
        sol.absorbed.push(pick);
        sol.absorbed.sort_unstable();
        count += 1;
    }
    count
}

fn solve_level(
    model: &IsingModel,
    partition: &Partition,
    level: usize,
    config: &DistributedConfig,
) -> Result<Vec<SubgraphSolution>, DistributedError> {
    (0..partition.len())
        .into_par_iter()
        .map(|k| {
            let cfg = config.qaoa.with_seed(mix_seed(config.qaoa.seed, level, k));
            solve_local(model, partition, k, level, &cfg)
        })
        .collect()
}

/// Level-0 local solutions with the same seeds the pipeline would use.
pub fn local_solutions(
    model: &IsingModel,
    partition: &Partition,
    config: &DistributedConfig,
) -> Result<Vec<SubgraphSolution>, DistributedError> {
    solve_level(model, partition, 0, config)
}

/// Runs the full pipeline with a partition chosen by `config.partition`.
pub fn solve_distributed(model: &IsingModel, config: &DistributedConfig) -> Result<DistributedReport, DistributedError> {
    if config.q_cap < 2 {
        return Err(DistributedError::CapTooSmall(config.q_cap));
    }
    let partition = partition_with(model, config.partition, config.q_cap, config.qaoa.seed);
    solve_with_partition(model, &partition, config)
}

/// Runs the pipeline on a given level-0 partition.
pub fn solve_with_partition(
    model: &IsingModel,
    partition: &Partition,
    config: &DistributedConfig,
) -> Result<DistributedReport, DistributedError> {
    solve_with_local_solutions(model, partition, None, config)
}

/// Runs the pipeline on a given partition, optionally with fixed level-0
/// local solutions (one per community, in community order).
pub fn solve_with_local_solutions(
    model: &IsingModel,
    partition: &Partition,
    local: Option<Vec<SubgraphSolution>>,
    config: &DistributedConfig,
) -> Result<DistributedReport, DistributedError> {
    let q = config.q_cap;
    if q < 2 {
        return Err(DistributedError::CapTooSmall(q));
    }
    if partition.n() != model.n() {
        return Err(DistributedError::PartitionMismatch {
            expected: model.n(),
            got: partition.n(),
        });
    }
    for (k, c) in partition.communities.iter().enumerate() {
        if c.len() > q {
            return Err(DistributedError::OverCap {
                community: k,
                size: c.len(),
                cap: q,
            });
        }
    }
    if let Some(sols) = &local {
        if sols.len() != partition.len() || sols.iter().zip(&partition.communities).any(|(s, c)| &s.nodes != c) {
            return Err(DistributedError::SolutionMismatch(0));
        }
    }

    let mut levels: Vec<LevelData> = Vec::new();
    let mut local_energies: Vec<f64> = Vec::new();
    let mut current_model = model.clone();
    let mut current_partition = if model.n() <= q {
        Partition::from_communities(model.n(), if model.n() == 0 { vec![] } else { vec![(0..model.n()).collect()] }, q)?
    } else {
        partition.clone()
    };
    let mut injected = if model.n() <= q { None } else { local };
    let mut level0_solutions = Vec::new();
    let mut absorptions = 0;

    while current_partition.len() > 1 {
        let level = levels.len();
        let mut solutions = match injected.take() {
            Some(s) => s,
            None => solve_level(&current_model, &current_partition, level, config)?,
        };
        if level == 0 {
            level0_solutions = solutions.clone();
        }
        local_energies.push(solutions.iter().map(|s| s.energy).sum());
        let (compressed, joined) = loop {
            let compressed = compress_level(&current_model, &solutions, level);
            let joined = join(&compressed.model, &compressed.groups, q);
            if joined.len() < compressed.groups.len() {
                break (compressed, joined);
            }
            absorptions += absorb_for_progress(&current_model, &current_partition, &mut solutions, q);
        };
        let next_partition = Partition::from_communities(compressed.model.n(), joined, q)?;
        let parent = compressed
            .groups
            .iter()
            .map(|g| next_partition.community_of[g[0]])
            .collect();
        let next_model = compressed.model.clone();
        levels.push(LevelData {
            model: current_model,
            partition: current_partition,
            solutions,
            compressed,
            parent,
        });
        current_model = next_model;
        current_partition = next_partition;
    }

    let root_size = current_model.n();
    let root = optimize(&current_model, &config.qaoa)?;
    let root_value = root.best_energy;
    let mut z = root.best_bitstring.values().to_vec();

    let mut reports: Vec<LevelReport> = Vec::with_capacity(levels.len());
    let mut signs: Vec<Vec<i8>> = vec![Vec::new(); levels.len()];
    for i in (0..levels.len()).rev() {
        let lvl = &levels[i];
        signs[i] = lvl.compressed.rep_node.iter().map(|r| r.map_or(1, |id| z[id])).collect();
        let mut level_z = expand(lvl, &z);
        let mut truncated = 0;
        let mut updated = Vec::with_capacity(lvl.solutions.len());
        for sol in &lvl.solutions {
            let cfg = config.qaoa.with_seed(mix_seed(config.qaoa.seed ^ 0x5555, i, sol.community));
            let up = local_update(&lvl.model, sol, &mut level_z, config.exact_local_limit, &cfg)?;
            if up.path == UpdatePath::Truncated {
                truncated += 1;
            }
            updated.push(up.solution);
        }
        reports.push(LevelReport {
            level: i,
            nodes: lvl.model.n(),
            community_sizes: lvl.partition.communities.iter().map(|c| c.len()).collect(),
            local_energy: local_energies[i],
            energy: lvl.model.energy_of(&level_z),
            truncated,
            updated: lvl.solutions.len() - truncated,
            parent: lvl.parent.clone(),
            solutions: updated,
        });
        z = level_z;
    }
    reports.reverse();

    let mut guard_used = false;
    if let Some(first) = levels.first() {
        polish(model, &first.solutions, &mut z, config)?;
        if config.sign_guard {
            let search = if first.solutions.len() <= config.exact_local_limit {
                SignSearch::Exhaustive
            } else {
                SignSearch::Qaoa
            };
            let naive = naive_merge(&first.solutions, model, search, config)?;
            let mut alt = naive.assignment.values().to_vec();
            polish(model, &first.solutions, &mut alt, config)?;
            if model.energy_of(&alt) < model.energy_of(&z) - 1e-9 {
                z = alt;
                guard_used = true;
            }
        }
    }

    let assignment = SpinAssignment::new(z)?;
    let value = model.energy(&assignment)?;
    let used_partition = levels.first().map_or(current_partition.clone(), |l| l.partition.clone());
    let mut report = DistributedReport {
        assignment,
        value,
        tree_height: levels.len(),
        root_size,
        root_value,
        root_expectation: root.expectation,
        levels: reports,
        modularity: modularity(model, &used_partition),
        partition: used_partition,
        local_solutions: level0_solutions,
        absorptions,
        guard_used,
        baseline: None,
        signs,
    };
    if config.baseline == Baseline::Naive {
        report.baseline = Some(if report.local_solutions.is_empty() {
            BaselineReport {
                value: report.value,
                signs: vec![1],
                assignment: report.assignment.clone(),
            }
        } else {
            naive_merge(&report.local_solutions, model, SignSearch::Qaoa, config)?
        });
    }
    Ok(report)
}

/// One sweep over the communities: each is re-solved with every other spin
/// fixed and replaced when strictly better.
fn polish(
    model: &IsingModel,
    solutions: &[SubgraphSolution],
    z: &mut [i8],
    config: &DistributedConfig,
) -> Result<(), DistributedError> {
    for sol in solutions {
        let nodes = &sol.nodes;
        let fix: BTreeMap<usize, i8> = (0..model.n())
            .filter(|v| nodes.binary_search(v).is_err())
            .map(|v| (v, z[v]))
            .collect();
        let sub = induced_submodel(model, nodes, &fix)?;
        let folded = sub.folded();
        let cand = if nodes.len() <= config.exact_local_limit {
            brute_force_min(&folded)?.0
        } else {
            let cfg = config.qaoa.with_seed(mix_seed(config.qaoa.seed ^ 0xAAAA, 0, sol.community));
            optimize(&folded, &cfg)?.best_bitstring
        };
        let current: Vec<i8> = nodes.iter().map(|&v| z[v]).collect();
        if sub.energy_of(cand.values()) < sub.energy_of(&current) - 1e-9 {
            for (&v, &s) in nodes.iter().zip(cand.values()) {
                z[v] = s;
            }
        }
    }
    Ok(())
}

/// Sign model over communities: `E(s) = v(concat s_k z_k)` for fixed local
/// solutions.
pub fn sign_model(solutions: &[SubgraphSolution], model: &IsingModel) -> IsingModel {
    let m = solutions.len();
    let mut owner = vec![(usize::MAX, 0i8); model.n()];
    for (k, s) in solutions.iter().enumerate() {
        for (pos, &v) in s.nodes.iter().enumerate() {
            owner[v] = (k, s.local_z.get(pos));
        }
    }
    let mut sm = IsingModel::new(m);
    sm.offset = model.offset;
    for ((u, v), w) in model.quadratic_terms() {
        let (a, za) = owner[u];
        let (b, zb) = owner[v];
        let wf = w * f64::from(za * zb);
        if a == b {
            sm.offset += wf;
        } else {
            sm.add_quadratic(a, b, wf);
        }
    }
    for (u, h) in model.linear_terms() {
        let (a, za) = owner[u];
        sm.add_linear(a, h * f64::from(za));
    }
    sm
}

/// Enumerates sign vectors from all +1 upward, keeping the first minimum.
fn exhaustive_signs(sm: &IsingModel) -> Vec<i8> {
    let m = sm.n();
    assert!(m <= 24, "exhaustive sign search capped at 24 communities");
    let mut best = (f64::INFINITY, 0u64);
    let mut s = vec![1i8; m];
    for mask in 0u64..(1u64 << m) {
        for (k, sk) in s.iter_mut().enumerate() {
            *sk = if (mask >> k) & 1 == 1 { -1 } else { 1 };
        }
        let e = sm.energy_of(&s);
        if e < best.0 - 1e-9 {
            best = (e, mask);
        }
    }
    (0..m).map(|k| if (best.1 >> k) & 1 == 1 { -1 } else { 1 }).collect()
}

/// QAOA over the sign model; above the cap, solve chunks of `q` communities
/// and recurse on the chunk signs.
fn qaoa_signs(sm: &IsingModel, q: usize, config: &QaoaConfig, depth: usize) -> Result<Vec<i8>, DistributedError> {
    let m = sm.n();
    if m <= 1 {
        return Ok(exhaustive_signs(sm));
    }
    if m <= q {
        return Ok(optimize(sm, &config.with_seed(mix_seed(config.seed, 1000 + depth, 0)))?
            .best_bitstring
            .values()
            .to_vec());
    }
    let chunks: Vec<Vec<usize>> = (0..m).collect::<Vec<_>>().chunks(q).map(|c| c.to_vec()).collect();
    let mut inner = vec![1i8; m];
    for (c, nodes) in chunks.iter().enumerate() {
        let sub = sm.restrict(nodes, false);
        let r = optimize(&sub, &config.with_seed(mix_seed(config.seed, 1000 + depth, c + 1)))?;
        for (&v, &s) in nodes.iter().zip(r.best_bitstring.values()) {
            inner[v] = s;
        }
    }
    let sols: Vec<SubgraphSolution> = chunks
        .iter()
        .enumerate()
        .map(|(c, nodes)| SubgraphSolution {
            community: c,
            level: depth + 1,
            nodes: nodes.clone(),
            local_z: SpinAssignment::new(nodes.iter().map(|&v| inner[v]).collect()).expect("spins"),
            in_set: Vec::new(),
            out_set: nodes.clone(),
            absorbed: Vec::new(),
            energy: 0.0,
        })
        .collect();
    let outer = qaoa_signs(&sign_model(&sols, sm), q, config, depth + 1)?;
    Ok((0..m).map(|v| inner[v] * outer[v / q]).collect())
}

/// Baseline: keep every local solution and choose only the community signs.
pub fn naive_merge(
    solutions: &[SubgraphSolution],
    model: &IsingModel,
    search: SignSearch,
    config: &DistributedConfig,
) -> Result<BaselineReport, DistributedError> {
    let sm = sign_model(solutions, model);
    let signs = match search {
        SignSearch::Exhaustive => exhaustive_signs(&sm),
        SignSearch::Qaoa => qaoa_signs(&sm, config.q_cap, &config.qaoa, 0)?,
    };
    let mut z = vec![1i8; model.n()];
    for (s, &sk) in solutions.iter().zip(&signs) {
        for (pos, &v) in s.nodes.iter().enumerate() {
            z[v] = sk * s.local_z.get(pos);
        }
    }
    let assignment = SpinAssignment::new(z)?;
    let value = model.energy(&assignment)?;
    Ok(BaselineReport {
        value,
        signs,
        assignment,
    })
}

/// `(v_max - achieved) / (v_max - v_min)`.
pub fn approximation_ratio(v_max: f64, v_min: f64, achieved: f64) -> Result<f64, DistributedError> {
    if !(v_max > v_min) {
        return Err(DistributedError::DegenerateRange { v_max, v_min });
    }
    Ok((v_max - achieved) / (v_max - v_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::nine_node_example;
    use crate::partition::louvain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn nine_node_partition() -> Partition {
        Partition::from_communities(9, vec![vec![0, 1, 2, 3, 4], vec![5, 6, 7, 8]], 6).unwrap()
    }

    fn nine_node_solutions() -> Vec<SubgraphSolution> {
        let m = nine_node_example();
        let p = nine_node_partition();
        vec![
            fixed_solution(&m, &p, 0, SpinAssignment::new(vec![-1, -1, 1, -1, -1]).unwrap()).unwrap(),
            fixed_solution(&m, &p, 1, SpinAssignment::new(vec![-1, 1, 1, -1]).unwrap()).unwrap(),
        ]
    }

    fn config(q: usize) -> DistributedConfig {
        DistributedConfig {
            q_cap: q,
            ..Default::default()
        }
    }

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, weighted: bool) -> IsingModel {
        let mut m = IsingModel::new(n);
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(p) {
                    let w = if weighted { rng.gen_range(1..=6) as f64 } else { 1.0 };
                    m.add_quadratic(i, j, w);
                }
            }
        }
        m
    }

    #[test]
    fn classify_examples() {
        let m = nine_node_example();
        let c = classify_nodes(&m, &nine_node_partition());
        assert_eq!(c[0], (vec![0, 1, 2], vec![3, 4]));
        assert_eq!(c[1], (vec![7, 8], vec![5, 6]));
        let all = Partition::from_communities(9, vec![(0..9).collect()], 9).unwrap();
        assert!(classify_nodes(&m, &all)[0].1.is_empty());
        let pair = IsingModel::new(2);
        let mut pair = pair;
        pair.add_quadratic(0, 1, 1.0);
        let c = classify_nodes(&pair, &Partition::singletons(2, 2));
        assert_eq!(c, [(vec![], vec![0]), (vec![], vec![1])]);
    }

    #[test]
    fn solve_local_examples() {
        let m = nine_node_example();
        let s = solve_local(&m, &nine_node_partition(), 1, 0, &QaoaConfig::default()).unwrap();
        assert_eq!(s.energy, -4.0);
        let mut single = IsingModel::new(1);
        single.add_linear(0, -3.0);
        let p = Partition::singletons(1, 2);
        let s = solve_local(&single, &p, 0, 0, &QaoaConfig::default()).unwrap();
        assert_eq!((s.local_z.values(), s.energy), (&[1i8][..], -3.0));
    }

    #[test]
    fn compress_examples() {
        let m = nine_node_example();
        let sols = nine_node_solutions();
        let c = compress(&m, &sols[0]);
        assert_eq!(c.rep_edges, [(3, 1.0), (4, 1.0)]);
        assert_eq!(c.out_nodes, [3, 4]);
        let v = |z: &[i8]| m.restrict(&sols[0].nodes, false).energy_of(z);
        let local = sols[0].local_z.values().to_vec();
        let flip_in: Vec<i8> = local.iter().enumerate().map(|(k, &s)| if k < 3 { -s } else { s }).collect();
        let out = [local[3], local[4]];
        assert_eq!(c.energy(1, &out) + c.carried_constant, v(&local));
        assert_eq!(c.energy(-1, &out) + c.carried_constant, v(&flip_in));
        // Aggregate identity from the per-edge decomposition.
        let cross_linear = c.energy(1, &out) - c.out_model.energy_of(&out);
        assert_eq!(cross_linear, (v(&local) - v(&flip_in)) / 2.0);

        let mut no_in = IsingModel::new(2);
        no_in.add_quadratic(0, 1, 1.0);
        let p = Partition::singletons(2, 2);
        let s = fixed_solution(&no_in, &p, 0, SpinAssignment::new(vec![1]).unwrap()).unwrap();
        let c = compress(&no_in, &s);
        assert!(c.rep_edges.is_empty() && c.rep_linear == 0.0 && c.carried_constant == 0.0);
        assert_eq!(c.out_nodes, [0]);
    }

    #[test]
    fn compressed_energy_invariant_on_random_communities() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let mut m = random_graph(&mut rng, 8, 0.5, true);
            for i in 0..8 {
                m.add_linear(i, rng.gen_range(-3..=3) as f64);
            }
            let part = Partition::from_communities(8, vec![(0..8).collect()], 8).unwrap();
            let z = SpinAssignment::new((0..8).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect()).unwrap();
            let mut sol = fixed_solution(&m, &part, 0, z).unwrap();
            // Treat a random subset as the representative set.
            sol.in_set = (0..8).filter(|_| rng.gen_bool(0.5)).collect();
            sol.out_set = (0..8).filter(|v| !sol.in_set.contains(v)).collect();
            let c = compress(&m, &sol);
            for _ in 0..50 {
                let out_z: Vec<i8> = c.out_nodes.iter().map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
                for rep in [1i8, -1] {
                    let mut full = vec![0i8; 8];
                    for &v in &sol.in_set {
                        full[v] = rep * sol.value_of(v);
                    }
                    for (k, &v) in c.out_nodes.iter().enumerate() {
                        full[v] = out_z[k];
                    }
                    let lhs = c.energy(rep, &out_z) + c.carried_constant;
                    assert!((lhs - m.energy_of(&full)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn join_examples() {
        let mut m = IsingModel::new(6);
        m.add_quadratic(2, 3, 1.0);
        let j = join(&m, &[vec![0, 1, 2], vec![3, 4, 5]], 6);
        assert_eq!(j, [vec![0, 1, 2, 3, 4, 5]]);

        let mut m = IsingModel::new(12);
        m.add_quadratic(0, 4, 1.0);
        m.add_quadratic(4, 8, 3.0);
        let groups: Vec<Vec<usize>> = (0..3).map(|g| (4 * g..4 * g + 4).collect()).collect();
        let j = join(&m, &groups, 6);
        assert_eq!(j.len(), 3);
        let j = join(&m, &groups, 8);
        assert_eq!(j, [vec![0, 1, 2, 3], vec![4, 5, 6, 7, 8, 9, 10, 11]]);
    }

    #[test]
    fn nine_node_level_one_joins_to_one_graph() {
        let m = nine_node_example();
        let cl = compress_level(&m, &nine_node_solutions(), 0);
        assert_eq!(cl.model.n(), 6);
        assert_eq!(cl.groups, [vec![0, 1, 2], vec![3, 4, 5]]);
        // 2 z3 z5 and 2 z4 z6 installed verbatim between copies.
        assert_eq!(cl.model.quadratic(1, 4), 2.0);
        assert_eq!(cl.model.quadratic(2, 5), 2.0);
        assert_eq!(join(&cl.model, &cl.groups, 6).len(), 1);
    }

    #[test]
    fn global_and_local_update_on_example() {
        let m = nine_node_example();
        let sols = nine_node_solutions();
        // Parent: I1 = +1 keeps (-1,-1,+1), z3 = -1, z4 = +1; I2 = -1 flips C2's in-part.
        let mut z = vec![-1, -1, 1, -1, 1, 1, -1, -1, 1];
        let c1 = global_update(&sols[0], &z);
        assert_eq!(c1.values(), &[-1, -1, 1, -1, 1]);
        assert_ne!(c1, sols[0].local_z);
        assert_ne!(c1, sols[0].local_z.flipped());
        let c2 = global_update(&sols[1], &z);
        assert_eq!(c2, sols[1].local_z.flipped());

        let up = local_update(&m, &sols[1], &mut z, 12, &QaoaConfig::default()).unwrap();
        assert_eq!(up.path, UpdatePath::Truncated);
        let before = m.energy_of(&z);
        let up = local_update(&m, &sols[0], &mut z, 12, &QaoaConfig::default()).unwrap();
        assert_eq!(up.path, UpdatePath::Updated);
        // (+1)(-1)(+1) is one of the tied minimizers; energy is what matters.
        let reference = [1i8, -1, 1, -1, 1, 1, -1, -1, 1];
        assert_eq!(m.energy_of(&z), m.energy_of(&reference));
        assert!(m.energy_of(&z) <= before);
        assert_eq!(m.energy_of(&z), -10.0);
    }

    #[test]
    fn local_update_keeps_optimal_candidate() {
        let m = nine_node_example();
        let sols = nine_node_solutions();
        let mut z = vec![1, -1, 1, -1, 1, 1, -1, -1, 1];
        let before = m.energy_of(&z);
        local_update(&m, &sols[0], &mut z, 12, &QaoaConfig::default()).unwrap();
        assert_eq!(m.energy_of(&z), before);
    }

    #[test]
    fn naive_examples() {
        let m = nine_node_example();
        let sols = nine_node_solutions();
        for search in [SignSearch::Exhaustive, SignSearch::Qaoa] {
            let r = naive_merge(&sols, &m, search, &config(6)).unwrap();
            assert_eq!(r.value, -6.0);
        }
        let r = naive_merge(&sols, &m, SignSearch::Exhaustive, &config(6)).unwrap();
        assert_eq!(r.signs, [1, 1]);

        let mut lin = IsingModel::new(2);
        lin.add_linear(0, 1.0);
        let p = Partition::from_communities(2, vec![vec![0, 1]], 2).unwrap();
        let s = fixed_solution(&lin, &p, 0, SpinAssignment::new(vec![1, 1]).unwrap()).unwrap();
        let r = naive_merge(&[s], &lin, SignSearch::Qaoa, &config(2)).unwrap();
        assert_eq!((r.signs, r.value), (vec![-1], -1.0));
    }

    #[test]
    fn exhaustive_signs_are_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let g = random_graph(&mut rng, 20, 0.25, true);
            let p = louvain(&g, 4, 1);
            let sols: Vec<SubgraphSolution> = (0..p.len())
                .map(|k| solve_local(&g, &p, k, 0, &QaoaConfig::default()).unwrap())
                .collect();
            let sm = sign_model(&sols, &g);
            let r = naive_merge(&sols, &g, SignSearch::Exhaustive, &config(4)).unwrap();
            if sm.n() <= 10 {
                assert_eq!(r.value, brute_force_min(&sm).unwrap().1);
            }
        }
    }

    #[test]
    fn nine_node_distributed_reaches_optimum() {
        let m = nine_node_example();
        let hits = (0..20)
            .filter(|&s| solve_distributed(&m, &config(6).with_seed(s)).unwrap().value == -10.0)
            .count();
        assert!(hits >= 19, "{hits}");
        let r = solve_with_local_solutions(&m, &nine_node_partition(), Some(nine_node_solutions()), &config(6)).unwrap();
        assert_eq!(r.value, -10.0);
        assert_eq!(r.tree_height, 1);
        assert_eq!(r.root_size, 6);
    }

    #[test]
    fn small_model_is_plain_qaoa() {
        let m = nine_node_example();
        let cfg = config(10).with_seed(3);
        let r = solve_distributed(&m, &cfg).unwrap();
        let q = optimize(&m, &cfg.qaoa).unwrap();
        assert_eq!(r.assignment, q.best_bitstring);
        assert_eq!(r.tree_height, 0);
    }

    #[test]
    fn tall_tree_on_24_nodes() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let g = random_graph(&mut rng, 24, 0.2, false);
        let r = solve_distributed(&g, &config(6)).unwrap();
        assert!(r.tree_height >= 2, "{}", r.tree_height);
        assert_eq!(r.assignment.len(), 24);
        assert_eq!(r.value, g.energy(&r.assignment).unwrap());
        let tree = r.merge_tree();
        assert_eq!(tree.level, r.tree_height);
        fn leaves(t: &MergeNode) -> usize {
            if t.level == 0 {
                t.size
            } else {
                t.children.iter().map(leaves).sum()
            }
        }
        assert_eq!(leaves(&tree), 24);
        // Levels never increase energy on the way down.
        for w in r.levels.windows(2) {
            assert!(w[0].energy <= w[1].energy + 1e-9);
        }
        assert!(r.levels.last().unwrap().energy <= r.root_value + 1e-9);
    }

    #[test]
    fn theorem_three_dominance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut strict = 0;
        for t in 0..30 {
            let n = rng.gen_range(10..=24);
            let weighted = t % 2 == 0;
            let g = random_graph(&mut rng, n, 0.25, weighted);
            let cfg = config(6).with_seed(t);
            let p = louvain(&g, 6, t);
            let sols: Vec<SubgraphSolution> = (0..p.len())
                .map(|k| solve_local(&g, &p, k, 0, &cfg.qaoa.with_seed(t * 100 + k as u64)).unwrap())
                .collect();
            let ours = solve_with_local_solutions(&g, &p, Some(sols.clone()), &cfg).unwrap();
            let naive = naive_merge(&sols, &g, SignSearch::Exhaustive, &cfg).unwrap();
            assert!(ours.value <= naive.value + 1e-9, "instance {t}: {} > {}", ours.value, naive.value);
            if ours.value < naive.value {
                strict += 1;
            }
        }
        assert!(strict > 0);
    }

    #[test]
    fn ratio_examples() {
        assert_eq!(approximation_ratio(0.0, -10.0, -10.0).unwrap(), 1.0);
        assert_eq!(approximation_ratio(0.0, -10.0, 0.0).unwrap(), 0.0);
        assert_eq!(approximation_ratio(0.0, -10.0, -6.0).unwrap(), 0.6);
        assert!(approximation_ratio(1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn disconnected_graph_terminates() {
        let mut g = IsingModel::new(12);
        for b in 0..4 {
            g.add_quadratic(3 * b, 3 * b + 1, 1.0);
            g.add_quadratic(3 * b + 1, 3 * b + 2, 1.0);
            g.add_quadratic(3 * b, 3 * b + 2, 1.0);
        }
        let r = solve_distributed(&g, &config(3)).unwrap();
        assert_eq!(r.value, brute_force_min(&g).unwrap().1);
    }
}
