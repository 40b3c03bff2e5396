//! Ising models over spins `z in {-1, +1}^n`, their energy, an exhaustive
//! ground-state oracle, and induced submodels with boundary fields.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap for [`brute_force_min`].
pub const BRUTE_FORCE_CAP: usize = 26;

const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsingError {
    #[error("assignment has {got} spins, model has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("spin value {0} is not -1 or +1")]
    InvalidSpin(i64),
    #[error("model has {0} spins; exhaustive search is capped at {BRUTE_FORCE_CAP}")]
    TooLarge(usize),
    #[error("spin {0} is both interior and fixed")]
    Overlap(usize),
    #[error("edge ({0}, {1}) leaves the interior to an unfixed spin")]
    UnfixedBoundary(usize, usize),
    #[error("spin index {index} out of range for {n} spins")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("graph text line {line}: {message}")]
    Format { line: usize, message: String },
}

/// A vector of spins, each exactly `-1` or `+1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinAssignment(Vec<i8>);

impl SpinAssignment {
    pub fn new(values: Vec<i8>) -> Result<Self, IsingError> {
        if let Some(&bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(IsingError::InvalidSpin(bad as i64));
        }
        Ok(Self(values))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Spin `k` is `-1` when bit `k` of `bits` is set (`|0> <-> +1`).
    pub fn from_basis_index(bits: usize, n: usize) -> Self {
        Self((0..n).map(|k| if (bits >> k) & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn to_basis_index(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s < 0)
            .fold(0, |acc, (k, _)| acc | (1 << k))
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> i8 {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, s: i8) {
        assert!(s == 1 || s == -1, "spin must be -1 or +1");
        self.0[i] = s;
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }

    /// Boolean view `x = (1 - z) / 2`.
    pub fn to_bools(&self) -> Vec<bool> {
        self.0.iter().map(|&s| s < 0).collect()
    }

    /// Formats as `(+1)(-1)...`.
    pub fn pretty(&self) -> String {
        self.0
            .iter()
            .map(|&s| if s > 0 { "(+1)" } else { "(-1)" })
            .collect()
    }
}

impl TryFrom<Vec<i8>> for SpinAssignment {
    type Error = IsingError;
    fn try_from(v: Vec<i8>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SpinAssignment> for Vec<i8> {
    fn from(s: SpinAssignment) -> Self {
        s.0
    }
}

/// `sum w_ij z_i z_j + sum w_k z_k + offset`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "IsingJson", try_from = "IsingJson")]
pub struct IsingModel {
    n: usize,
    linear: BTreeMap<usize, f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    pub labels: Vec<String>,
}

fn pair(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

fn accumulate<K: Ord + Copy>(map: &mut BTreeMap<K, f64>, key: K, w: f64) {
    let e = map.entry(key).or_insert(0.0);
    *e += w;
    if e.abs() <= crate::pbf::COEFF_EPS {
        map.remove(&key);
    }
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            linear: BTreeMap::new(),
            quadratic: BTreeMap::new(),
            offset: 0.0,
            labels: (0..n).map(|i| format!("z{i}")).collect(),
        }
    }

    pub fn with_labels(labels: Vec<String>) -> Self {
        let mut m = Self::new(labels.len());
        m.labels = labels;
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_linear(&mut self, i: usize, w: f64) {
        assert!(i < self.n, "spin {i} out of range");
        accumulate(&mut self.linear, i, w);
    }

    /// Adds `w z_i z_j`; a self pair is the constant `w`.
    pub fn add_quadratic(&mut self, i: usize, j: usize, w: f64) {
        assert!(i < self.n && j < self.n, "pair ({i}, {j}) out of range");
        if i == j {
            self.offset += w;
            return;
        }
        accumulate(&mut self.quadratic, pair(i, j), w);
    }

    pub fn linear(&self, i: usize) -> f64 {
        self.linear.get(&i).copied().unwrap_or(0.0)
    }

    pub fn quadratic(&self, i: usize, j: usize) -> f64 {
        self.quadratic.get(&pair(i, j)).copied().unwrap_or(0.0)
    }

    pub fn linear_terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.linear.iter().map(|(&i, &w)| (i, w))
    }

    pub fn quadratic_terms(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.quadratic.iter().map(|(&p, &w)| (p, w))
    }

    pub fn num_edges(&self) -> usize {
        self.quadratic.len()
    }

    pub fn remove_quadratic(&mut self, i: usize, j: usize) -> f64 {
        self.quadratic.remove(&pair(i, j)).unwrap_or(0.0)
    }

    pub fn remove_linear(&mut self, i: usize) -> f64 {
        self.linear.remove(&i).unwrap_or(0.0)
    }

    /// Adjacency lists `(neighbor, w_ij)` sorted by neighbor.
    pub fn adjacency(&self) -> Vec<Vec<(usize, f64)>> {
        let mut adj = vec![Vec::new(); self.n];
        for (&(i, j), &w) in &self.quadratic {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
        for a in &mut adj {
            a.sort_by_key(|&(j, _)| j);
        }
        adj
    }

    pub fn sum_abs_weights(&self) -> f64 {
        self.quadratic.values().map(|w| w.abs()).sum()
    }

    pub fn energy(&self, z: &SpinAssignment) -> Result<f64, IsingError> {
        if z.len() != self.n {
            return Err(IsingError::DimensionMismatch {
                expected: self.n,
                got: z.len(),
            });
        }
        Ok(self.energy_of(z.values()))
    }

    /// Energy without the dimension check.
    pub fn energy_of(&self, z: &[i8]) -> f64 {
        let q: f64 = self
            .quadratic
            .iter()
            .map(|(&(i, j), &w)| w * f64::from(z[i] * z[j]))
            .sum();
        let l: f64 = self.linear.iter().map(|(&i, &w)| w * f64::from(z[i])).sum();
        q + l + self.offset
    }

    /// Copy of the model over `nodes` (in the given order) keeping only terms
    /// entirely inside. The offset is carried only when `keep_offset`.
    pub fn restrict(&self, nodes: &[usize], keep_offset: bool) -> IsingModel {
        let local: HashMap<usize, usize> = nodes.iter().enumerate().map(|(k, &g)| (g, k)).collect();
        let mut m = IsingModel::with_labels(nodes.iter().map(|&g| self.labels[g].clone()).collect());
        for (&i, &w) in &self.linear {
            if let Some(&li) = local.get(&i) {
                m.add_linear(li, w);
            }
        }
        for (&(i, j), &w) in &self.quadratic {
            if let (Some(&li), Some(&lj)) = (local.get(&i), local.get(&j)) {
                m.add_quadratic(li, lj, w);
            }
        }
        if keep_offset {
            m.offset = self.offset;
        }
        m
    }
}

#[derive(Serialize, Deserialize)]
struct LinearJson {
    i: usize,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct QuadJson {
    i: usize,
    j: usize,
    w: f64,
}

#[derive(Serialize, Deserialize)]
struct IsingJson {
    n: usize,
    linear: Vec<LinearJson>,
    quadratic: Vec<QuadJson>,
    offset: f64,
    #[serde(default)]
    labels: Vec<String>,
}

impl From<IsingModel> for IsingJson {
    fn from(m: IsingModel) -> Self {
        Self {
            n: m.n,
            linear: m.linear.iter().map(|(&i, &w)| LinearJson { i, w }).collect(),
            quadratic: m
                .quadratic
                .iter()
                .map(|(&(i, j), &w)| QuadJson { i, j, w })
                .collect(),
            offset: m.offset,
            labels: m.labels,
        }
    }
}

impl TryFrom<IsingJson> for IsingModel {
    type Error = IsingError;
    fn try_from(j: IsingJson) -> Result<Self, Self::Error> {
        let mut m = if j.labels.len() == j.n {
            IsingModel::with_labels(j.labels)
        } else {
            IsingModel::new(j.n)
        };
        for l in j.linear {
            if l.i >= j.n {
                return Err(IsingError::IndexOutOfRange { index: l.i, n: j.n });
            }
            m.add_linear(l.i, l.w);
        }
        for q in j.quadratic {
            if q.i >= j.n || q.j >= j.n {
                return Err(IsingError::IndexOutOfRange {
                    index: q.i.max(q.j),
                    n: j.n,
                });
            }
            m.add_quadratic(q.i, q.j, q.w);
        }
        m.offset = j.offset;
        Ok(m)
    }
}

pub fn energy(model: &IsingModel, z: &SpinAssignment) -> Result<f64, IsingError> {
    model.energy(z)
}

/// Lexicographic rank with `-1 < +1` and spin 0 most significant.
fn lex_key(gray: u64, n: usize) -> u64 {
    let mut key = 0u64;
    for i in 0..n {
        let up = (gray >> i) & 1 == 0;
        if up {
            key |= 1 << (n - 1 - i);
        }
    }
    key
}

/// Exhaustive ground state. Ties go to the lexicographically smallest
/// assignment (`-1 < +1`, spin 0 first).
pub fn brute_force_min(model: &IsingModel) -> Result<(SpinAssignment, f64), IsingError> {
    let n = model.n();
    if n > BRUTE_FORCE_CAP {
        return Err(IsingError::TooLarge(n));
    }
    if n == 0 {
        return Ok((SpinAssignment(Vec::new()), model.offset));
    }
    let adj = model.adjacency();
    let mut s = vec![1i8; n];
    // Local field h_i = w_i + sum_j w_ij s_j.
    let mut h: Vec<f64> = (0..n)
        .map(|i| model.linear(i) + adj[i].iter().map(|&(_, w)| w).sum::<f64>())
        .collect();
    let mut e = model.energy_of(&s);
    let mut gray = 0u64;
    let mut best = (e, gray);
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        let old = f64::from(s[i]);
        e -= 2.0 * old * h[i];
        s[i] = -s[i];
        for &(j, w) in &adj[i] {
            h[j] -= 2.0 * w * old;
        }
        gray ^= 1 << i;
        if e < best.0 - TIE_EPS {
            best = (e, gray);
        } else if (e - best.0).abs() <= TIE_EPS && lex_key(gray, n) < lex_key(best.1, n) {
            best = (e.min(best.0), gray);
        }
    }
    let z = SpinAssignment((0..n).map(|i| if (best.1 >> i) & 1 == 1 { -1 } else { 1 }).collect());
    let value = model.energy_of(z.values());
    Ok((z, value))
}

/// Interior block of a model with the exterior spins frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct SubModel {
    /// Terms entirely inside the interior; offset zero.
    pub model: IsingModel,
    /// Field on each interior spin from fixed exterior spins.
    pub boundary_linear: Vec<f64>,
    /// Local index to global index.
    pub index_map: Vec<usize>,
}

impl SubModel {
    pub fn energy_of(&self, z: &[i8]) -> f64 {
        self.model.energy_of(z)
            + self
                .boundary_linear
                .iter()
                .zip(z)
                .map(|(b, &s)| b * f64::from(s))
                .sum::<f64>()
    }

    /// Model with boundary fields folded into the linear terms.
    pub fn folded(&self) -> IsingModel {
        let mut m = self.model.clone();
        for (i, &b) in self.boundary_linear.iter().enumerate() {
            m.add_linear(i, b);
        }
        m
    }
}

/// Restricts `model` to `interior` with `exterior_fix` spins held constant.
/// The full offset and exterior-only terms are excluded, so
/// `E(full) = sub.energy(interior) + E(exterior-only)`.
pub fn induced_submodel(
    model: &IsingModel,
    interior: &[usize],
    exterior_fix: &BTreeMap<usize, i8>,
) -> Result<SubModel, IsingError> {
    let n = model.n();
    for &i in interior {
        if i >= n {
            return Err(IsingError::IndexOutOfRange { index: i, n });
        }
        if exterior_fix.contains_key(&i) {
            return Err(IsingError::Overlap(i));
        }
    }
    let inside: BTreeSet<usize> = interior.iter().copied().collect();
    let local: HashMap<usize, usize> = interior.iter().enumerate().map(|(k, &g)| (g, k)).collect();
    let sub = model.restrict(interior, false);
    let mut boundary = vec![0.0; interior.len()];
    for ((i, j), w) in model.quadratic_terms() {
        let (a, b) = match (inside.contains(&i), inside.contains(&j)) {
            (true, false) => (i, j),
            (false, true) => (j, i),
            _ => continue,
        };
        let zb = exterior_fix
            .get(&b)
            .ok_or(IsingError::UnfixedBoundary(a, b))?;
        boundary[local[&a]] += w * f64::from(*zb);
    }
    Ok(SubModel {
        model: sub,
        boundary_linear: boundary,
        index_map: interior.to_vec(),
    })
}

// ---------------------------------------------------------------------------
// Graph text format

/// Writes `n`, `q i j w`, `l i w` and `c offset` lines.
pub fn write_graph(model: &IsingModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "n {}", model.n());
    for ((i, j), w) in model.quadratic_terms() {
        let _ = writeln!(out, "q {i} {j} {w}");
    }
    for (i, w) in model.linear_terms() {
        let _ = writeln!(out, "l {i} {w}");
    }
    if model.offset != 0.0 {
        let _ = writeln!(out, "c {}", model.offset);
    }
    out
}

/// Parses the graph text format. Without an `n` line the spin count is the
/// largest index plus one.
pub fn read_graph(text: &str) -> Result<IsingModel, IsingError> {
    let mut declared: Option<usize> = None;
    let mut quads = Vec::new();
    let mut lins = Vec::new();
    let mut offset = 0.0;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let fail = |message: String| IsingError::Format {
            line: line_no,
            message,
        };
        let idx = |s: &str| -> Result<usize, IsingError> {
            s.parse().map_err(|_| fail(format!("bad index '{s}'")))
        };
        let num = |s: &str| -> Result<f64, IsingError> {
            s.parse().map_err(|_| fail(format!("bad number '{s}'")))
        };
        match (fields[0], fields.len()) {
            ("n", 2) => declared = Some(idx(fields[1])?),
            ("q", 4) => quads.push((idx(fields[1])?, idx(fields[2])?, num(fields[3])?)),
            ("l", 3) => lins.push((idx(fields[1])?, num(fields[2])?)),
            ("c", 2) => offset += num(fields[1])?,
            _ => return Err(fail(format!("expected 'q i j w', 'l i w' or 'c offset', got '{line}'"))),
        }
    }
    let max_index = quads
        .iter()
        .flat_map(|&(i, j, _)| [i, j])
        .chain(lins.iter().map(|&(i, _)| i))
        .max();
    let n = match (declared, max_index) {
        (Some(n), Some(m)) if m >= n => return Err(IsingError::IndexOutOfRange { index: m, n }),
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => 0,
    };
    let mut model = IsingModel::new(n);
    for (i, j, w) in quads {
        model.add_quadratic(i, j, w);
    }
    for (i, w) in lins {
        model.add_linear(i, w);
    }
    model.offset = offset;
    Ok(model)
}

/// Max-Cut instance as an Ising minimization: `sum w_ij z_i z_j`.
pub fn maxcut_model(n: usize, edges: &[(usize, usize, f64)]) -> IsingModel {
    let mut m = IsingModel::new(n);
    for &(i, j, w) in edges {
        m.add_quadratic(i, j, w);
    }
    m
}

/// Cut weight of `z` for a Max-Cut model: `(sum w - E) / 2`.
pub fn cut_value(model: &IsingModel, z: &SpinAssignment) -> f64 {
    let total: f64 = model.quadratic_terms().map(|(_, w)| w).sum();
    (total - (model.energy_of(z.values()) - model.offset)) / 2.0
}

/// The nine-node Max-Cut example graph used throughout the tests.
pub fn nine_node_example() -> IsingModel {
    maxcut_model(
        9,
        &[
            (0, 1, 1.0),
            (1, 2, 1.0),
            (0, 2, 1.0),
            (2, 3, 1.0),
            (3, 4, 1.0),
            (2, 4, 1.0),
            (5, 6, 1.0),
            (6, 8, 1.0),
            (7, 8, 1.0),
            (5, 7, 1.0),
            (3, 5, 2.0),
            (4, 6, 2.0),
        ],
    )
}
