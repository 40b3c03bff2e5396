//! Qubit-capped community detection on the coupling graph of an Ising model.
//!
//! Edge weights are coupling magnitudes `|w_ij|`. Modularity uses the
//! ordered-pair convention `Q = (1/2m) sum_ij [A_ij - k_i k_j / 2m] d(c_i, c_j)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::IsingModel;

const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PartitionError {
    #[error("node {0} is assigned to no community")]
    Uncovered(usize),
    #[error("node {0} appears in more than one community")]
    Overlap(usize),
    #[error("node {node} out of range for {n} nodes")]
    OutOfRange { node: usize, n: usize },
    #[error("community {community} has {size} nodes, cap is {cap}")]
    OverCap { community: usize, size: usize, cap: usize },
    #[error("community {0} is empty")]
    Empty(usize),
    #[error("node {node} is already in community {community}")]
    AlreadyMember { node: usize, community: usize },
    #[error("qubit cap must be at least 1")]
    ZeroCap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PartitionMethod {
    Louvain,
    Random,
    Greedy,
}

impl std::str::FromStr for PartitionMethod {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "louvain" => Ok(Self::Louvain),
            "random" => Ok(Self::Random),
            "greedy" => Ok(Self::Greedy),
            other => Err(format!("unknown partition method '{other}'")),
        }
    }
}

impl std::fmt::Display for PartitionMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Louvain => "louvain",
            Self::Random => "random",
            Self::Greedy => "greedy",
        })
    }
}

/// Disjoint communities covering `0..n`, each of size at most `q_cap`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub community_of: Vec<usize>,
    pub communities: Vec<Vec<usize>>,
    pub q_cap: usize,
}

impl Partition {
    /// Validates and canonicalizes: members sorted, communities ordered by
    /// their smallest node.
    pub fn from_communities(n: usize, communities: Vec<Vec<usize>>, q_cap: usize) -> Result<Self, PartitionError> {
        if q_cap == 0 {
            return Err(PartitionError::ZeroCap);
        }
        let mut comms: Vec<Vec<usize>> = communities;
        for (k, c) in comms.iter_mut().enumerate() {
            if c.is_empty() {
                return Err(PartitionError::Empty(k));
            }
            c.sort_unstable();
        }
        comms.sort_by_key(|c| c[0]);
        let mut community_of = vec![usize::MAX; n];
        for (k, c) in comms.iter().enumerate() {
            if c.len() > q_cap {
                return Err(PartitionError::OverCap {
                    community: k,
                    size: c.len(),
                    cap: q_cap,
                });
            }
            for &v in c {
                if v >= n {
                    return Err(PartitionError::OutOfRange { node: v, n });
                }
                if community_of[v] != usize::MAX {
                    return Err(PartitionError::Overlap(v));
                }
                community_of[v] = k;
            }
        }
        if let Some(v) = community_of.iter().position(|&c| c == usize::MAX) {
            return Err(PartitionError::Uncovered(v));
        }
        Ok(Self {
            community_of,
            communities: comms,
            q_cap,
        })
    }

    /// Builds from arbitrary per-node labels.
    pub fn from_labels(labels: &[usize], q_cap: usize) -> Result<Self, PartitionError> {
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (v, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(v);
        }
        Self::from_communities(labels.len(), groups.into_values().collect(), q_cap)
    }

    pub fn singletons(n: usize, q_cap: usize) -> Self {
        Self::from_communities(n, (0..n).map(|v| vec![v]).collect(), q_cap.max(1)).expect("singletons are valid")
    }

    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    pub fn n(&self) -> usize {
        self.community_of.len()
    }

    /// `node community` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, c) in self.community_of.iter().enumerate() {
            let _ = writeln!(out, "{v} {c}");
        }
        out
    }
}

/// Undirected weighted graph with self-loops, used by the modularity code.
#[derive(Debug, Clone)]
struct Graph {
    adj: Vec<BTreeMap<usize, f64>>,
    /// Intra weight carried by an aggregated node, counted once per edge.
    self_loop: Vec<f64>,
    /// Weighted degree, self-loops counted twice.
    degree: Vec<f64>,
    /// Number of original nodes represented.
    size: Vec<usize>,
    m: f64,
}

impl Graph {
    fn from_model(model: &IsingModel) -> Self {
        let n = model.n();
        let mut adj = vec![BTreeMap::new(); n];
        for ((i, j), w) in model.quadratic_terms() {
            *adj[i].entry(j).or_insert(0.0) += w.abs();
            *adj[j].entry(i).or_insert(0.0) += w.abs();
        }
        let degree: Vec<f64> = adj.iter().map(|a| a.values().sum()).collect();
        let m = degree.iter().sum::<f64>() / 2.0;
        Self {
            adj,
            self_loop: vec![0.0; n],
            degree,
            size: vec![1; n],
            m,
        }
    }

    fn n(&self) -> usize {
        self.adj.len()
    }

    /// Collapses communities (labels dense `0..k`) into single nodes.
    fn aggregate(&self, labels: &[usize], k: usize) -> Self {
        let mut adj = vec![BTreeMap::new(); k];
        let mut self_loop = vec![0.0; k];
        let mut degree = vec![0.0; k];
        let mut size = vec![0; k];
        for v in 0..self.n() {
            let c = labels[v];
            self_loop[c] += self.self_loop[v];
            degree[c] += self.degree[v];
            size[c] += self.size[v];
            for (&u, &w) in &self.adj[v] {
                let cu = labels[u];
                if cu == c {
                    if v < u {
                        self_loop[c] += w;
                    }
                } else {
                    *adj[c].entry(cu).or_insert(0.0) += w;
                }
            }
        }
        Self {
            adj,
            self_loop,
            degree,
            size,
            m: self.m,
        }
    }
}

fn q_from_labels(g: &Graph, labels: &[usize]) -> f64 {
    if g.m <= 0.0 {
        return 0.0;
    }
    let k = labels.iter().max().map_or(0, |&m| m + 1);
    let mut inner = vec![0.0; k];
    let mut tot = vec![0.0; k];
    for v in 0..g.n() {
        let c = labels[v];
        inner[c] += g.self_loop[v];
        tot[c] += g.degree[v];
        for (&u, &w) in &g.adj[v] {
            if v < u && labels[u] == c {
                inner[c] += w;
            }
        }
    }
    let two_m = 2.0 * g.m;
    inner
        .iter()
        .zip(&tot)
        .map(|(&i, &t)| i / g.m - (t / two_m) * (t / two_m))
        .sum()
}

/// Modularity of `partition` over the `|w_ij|` coupling graph; zero when the
/// graph has no edges.
pub fn modularity(model: &IsingModel, partition: &Partition) -> f64 {
    q_from_labels(&Graph::from_model(model), &partition.community_of)
}

/// Change in modularity when `node`, taken out of its community as a
/// singleton, joins community `target`:
/// `w(node, target) / m - tot(target) k_node / (2 m^2)`.
pub fn modularity_gain(
    model: &IsingModel,
    partition: &Partition,
    node: usize,
    target: usize,
) -> Result<f64, PartitionError> {
    if partition.community_of[node] == target {
        return Err(PartitionError::AlreadyMember { node, community: target });
    }
    let g = Graph::from_model(model);
    if g.m <= 0.0 {
        return Ok(0.0);
    }
    let members = &partition.communities[target];
    let w_in: f64 = members.iter().filter_map(|u| g.adj[node].get(u)).sum();
    let tot: f64 = members.iter().map(|&u| g.degree[u]).sum();
    Ok(w_in / g.m - tot * g.degree[node] / (2.0 * g.m * g.m))
}

/// Result of a Louvain run with the modularity after every phase-1 sweep
/// and every aggregation.
#[derive(Debug, Clone, PartialEq)]
pub struct LouvainRun {
    pub partition: Partition,
    pub q_history: Vec<f64>,
}

/// Relabels densely in order of first appearance.
fn densify(labels: &mut [usize]) -> usize {
    let mut map = BTreeMap::new();
    let mut order = Vec::new();
    for l in labels.iter() {
        if !map.contains_key(l) {
            map.insert(*l, order.len());
            order.push(*l);
        }
    }
    for l in labels.iter_mut() {
        *l = map[l];
    }
    order.len()
}

/// One local-moving phase from the given labels (dense, below `g.n()`). Returns whether any node moved; `history` gets the
/// modularity (in terms of the level graph) after each sweep that moved.
fn local_moves(g: &Graph, labels: &mut [usize], q_cap: usize, rng: &mut ChaCha8Rng, history: &mut Vec<f64>) -> bool {
    let n = g.n();
    let mut tot = vec![0.0; n];
    let mut size = vec![0; n];
    for v in 0..n {
        tot[labels[v]] += g.degree[v];
        size[labels[v]] += g.size[v];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let m = g.m;
    let mut moved_any = false;
    loop {
        let mut moved = false;
        for &v in &order {
            let old = labels[v];
            tot[old] -= g.degree[v];
            size[old] -= g.size[v];
            let mut links: BTreeMap<usize, f64> = BTreeMap::new();
            for (&u, &w) in &g.adj[v] {
                *links.entry(labels[u]).or_insert(0.0) += w;
            }
            let gain = |c: usize, w: f64| w / m - tot[c] * g.degree[v] / (2.0 * m * m);
            let stay = gain(old, links.get(&old).copied().unwrap_or(0.0));
            let mut best = (old, stay);
            for (&c, &w) in &links {
                if c == old || size[c] + g.size[v] > q_cap {
                    continue;
                }
                let d = gain(c, w);
                if d > best.1 + GAIN_EPS {
                    best = (c, d);
                }
            }
            labels[v] = best.0;
            tot[best.0] += g.degree[v];
            size[best.0] += g.size[v];
            if best.0 != old {
                moved = true;
            }
        }
        if !moved {
            break;
        }
        moved_any = true;
        history.push(q_from_labels(g, labels));
    }
    moved_any
}

/// Two-phase Louvain under a community-size cap followed by one node-level
/// refinement pass; deterministic for a seed.
pub fn louvain_run(model: &IsingModel, q_cap: usize, seed: u64) -> LouvainRun {
    let n = model.n();
    let cap = q_cap.max(1);
    let mut g = Graph::from_model(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // membership[v] = current aggregated node of original node v
    let mut membership: Vec<usize> = (0..n).collect();
    let mut history = vec![q_from_labels(&g, &membership)];
    if g.m > 0.0 {
        loop {
            let mut labels: Vec<usize> = (0..g.n()).collect();
            let moved = local_moves(&g, &mut labels, cap, &mut rng, &mut history);
            if !moved {
                break;
            }
            let k = densify(&mut labels);
            for c in membership.iter_mut() {
                *c = labels[*c];
            }
            g = g.aggregate(&labels, k);
            history.push(q_from_labels(&g, &(0..k).collect::<Vec<_>>()));
        }
        // Refinement: single-node moves on the original graph, starting from
        // the aggregated communities.
        let g0 = Graph::from_model(model);
        if local_moves(&g0, &mut membership, cap, &mut rng, &mut history) {
            densify(&mut membership);
        }
    }
    let partition = Partition::from_labels(&membership, cap).expect("cap enforced during moves");
    LouvainRun {
        partition,
        q_history: history,
    }
}

pub fn louvain(model: &IsingModel, q_cap: usize, seed: u64) -> Partition {
    louvain_run(model, q_cap, seed).partition
}

/// Shuffles the nodes and cuts them into consecutive chunks of `q_cap`.
pub fn random_partition(model: &IsingModel, q_cap: usize, seed: u64) -> Partition {
    let cap = q_cap.max(1);
    let mut nodes: Vec<usize> = (0..model.n()).collect();
    nodes.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let chunks = nodes.chunks(cap).map(|c| c.to_vec()).collect();
    Partition::from_communities(model.n(), chunks, cap).expect("chunks are valid")
}

/// Agglomerative greedy modularity from singletons: repeatedly merge the
/// adjacent pair with the largest positive gain whose union fits the cap.
pub fn greedy_modularity(model: &IsingModel, q_cap: usize) -> Partition {
    let cap = q_cap.max(1);
    let g = Graph::from_model(model);
    let n = g.n();
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|v| Some(vec![v])).collect();
    let mut tot = g.degree.clone();
    let mut links: Vec<BTreeMap<usize, f64>> = g.adj.clone();
    if g.m > 0.0 {
        loop {
            let mut best: Option<(f64, usize, usize)> = None;
            for a in 0..n {
                let Some(ma) = &members[a] else { continue };
                for (&b, &w) in links[a].range(a + 1..) {
                    let mb = members[b].as_ref().expect("links point at live communities");
                    if ma.len() + mb.len() > cap {
                        continue;
                    }
                    let d = w / g.m - tot[a] * tot[b] / (2.0 * g.m * g.m);
                    if d > GAIN_EPS && best.map_or(true, |(bd, _, _)| d > bd + GAIN_EPS) {
                        best = Some((d, a, b));
                    }
                }
            }
            let Some((_, a, b)) = best else { break };
            let mb = members[b].take().expect("live");
            members[a].as_mut().expect("live").extend(mb);
            tot[a] += tot[b];
            let lb = std::mem::take(&mut links[b]);
            for (c, w) in lb {
                links[c].remove(&b);
                if c != a {
                    *links[a].entry(c).or_insert(0.0) += w;
                    *links[c].entry(a).or_insert(0.0) += w;
                }
            }
            links[a].remove(&b);
        }
    }
    Partition::from_communities(n, members.into_iter().flatten().collect(), cap).expect("cap enforced during merges")
}

pub fn partition_with(model: &IsingModel, method: PartitionMethod, q_cap: usize, seed: u64) -> Partition {
    match method {
        PartitionMethod::Louvain => louvain(model, q_cap, seed),
        PartitionMethod::Random => random_partition(model, q_cap, seed),
        PartitionMethod::Greedy => greedy_modularity(model, q_cap),
    }
}
