//! Reduction of a constrained pseudo-Boolean problem to a simplified Ising
//! model: uncoupled-variable fixing, quadratization, the Boolean-to-spin map
//! and chain elimination, with a replayable trace for back-substitution.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ising::IsingModel;
use crate::pbf::{
    penalize, slack_all, to_minimization, ConstrainedProblem, LambdaPolicy, MultilinearPolynomial, PbfError,
    ReductionConfig, Sense,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReductionError {
    #[error(transparent)]
    Pbf(#[from] PbfError),
    #[error("Ising mapping needs degree <= 2, polynomial has degree {0}")]
    DegreeTooHigh(usize),
    #[error("assignment has {got} spins, reduced model has {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("auxiliary variable {aux} disagrees with the product of {i} and {j}; lambda is too small")]
    AuxInconsistency { aux: usize, i: usize, j: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FixReason {
    Uncoupled,
}

/// One replayable step of the reduction. Boolean steps index the polynomial
/// variable space; chain and renaming steps index spins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum ReductionStep {
    FixedBoolean {
        index: usize,
        value: bool,
        reason: FixReason,
    },
    AuxDefinition {
        aux: usize,
        i: usize,
        j: usize,
        lambda: f64,
    },
    /// Spin `k` stands for polynomial variable `var_of_spin[k]`.
    IsingMapMarker { var_of_spin: Vec<usize> },
    /// `z_j = -sign(quad * z_i + linear)`, `sign(0) = +1`.
    ChainRule {
        eliminated: usize,
        neighbor: Option<usize>,
        quad: f64,
        linear: f64,
    },
    /// Final spin `k` was spin `map[k]` before renaming.
    Renaming { map: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionTrace {
    pub steps: Vec<ReductionStep>,
    pub original_var_count: usize,
    /// Size of the polynomial variable space (originals, slacks, auxiliaries).
    pub total_var_count: usize,
    pub final_var_count: usize,
    pub sense_flip: bool,
    /// Constant of the final model.
    pub offset: f64,
    pub var_names: Vec<String>,
    #[serde(skip)]
    pub problem: Option<ConstrainedProblem>,
}

/// Back-substituted solution of the original problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    /// Values of the original variables, by index.
    pub assignment: Vec<bool>,
    /// Values of every polynomial variable including slacks and auxiliaries.
    pub full_assignment: Vec<bool>,
    /// Objective in the original sense, when the trace carries a problem.
    pub objective: Option<f64>,
    pub feasible: bool,
}

fn occurrence_counts(poly: &MultilinearPolynomial) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for (vars, _) in poly.terms() {
        for &v in vars {
            *counts.entry(v).or_insert(0) += 1;
        }
    }
    counts
}

fn fix_variable(poly: &MultilinearPolynomial, var: usize, value: bool) -> MultilinearPolynomial {
    let mut out = MultilinearPolynomial::new();
    for (vars, c) in poly.terms() {
        if vars.contains(&var) {
            if value {
                let rest: Vec<usize> = vars.iter().copied().filter(|&v| v != var).collect();
                out.add_term(&rest, c);
            }
        } else {
            out.add_term(vars, c);
        }
    }
    out
}

/// Fixes every variable that occurs in exactly one term: to 0 when that
/// term's coefficient is positive, to 1 when negative. Repeats until no such
/// variable remains, so a second call is a no-op.
pub fn eliminate_uncoupled(poly: &MultilinearPolynomial) -> (MultilinearPolynomial, Vec<ReductionStep>) {
    let mut current = poly.clone();
    let mut steps = Vec::new();
    loop {
        let counts = occurrence_counts(&current);
        let found = counts.iter().find(|&(_, &c)| c == 1).map(|(&v, _)| v);
        let Some(var) = found else { break };
        let coeff = current
            .terms()
            .find(|(vars, _)| vars.contains(&var))
            .map(|(_, c)| c)
            .unwrap_or(0.0);
        let value = coeff < 0.0;
        current = fix_variable(&current, var, value);
        steps.push(ReductionStep::FixedBoolean {
            index: var,
            value,
            reason: FixReason::Uncoupled,
        });
    }
    (current, steps)
}

fn most_frequent_pair(poly: &MultilinearPolynomial) -> Option<(usize, usize)> {
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for (vars, _) in poly.terms().filter(|(v, _)| v.len() >= 3) {
        for (a, &i) in vars.iter().enumerate() {
            for &j in &vars[a + 1..] {
                *counts.entry((i, j)).or_insert(0) += 1;
            }
        }
    }
    // BTreeMap iterates pairs in lexicographic order; keep the first maximum.
    let mut best: Option<((usize, usize), usize)> = None;
    for (p, c) in counts {
        if best.map_or(true, |(_, bc)| c > bc) {
            best = Some((p, c));
        }
    }
    best.map(|(p, _)| p)
}

/// Reduces the degree to at most two by repeatedly substituting a fresh
/// auxiliary `y = x_i x_j` into every term of degree three or more and adding
/// `lambda (x_i x_j - 2 x_i y - 2 x_j y + 3 y)`. Auxiliaries are numbered from
/// `first_aux` upward.
pub fn quadratize(
    poly: &MultilinearPolynomial,
    lambda_policy: LambdaPolicy,
    first_aux: usize,
) -> (MultilinearPolynomial, Vec<ReductionStep>) {
    let mut current = poly.clone();
    let mut steps = Vec::new();
    let mut next = first_aux.max(poly.index_bound());
    while let Some((i, j)) = most_frequent_pair(&current) {
        let lambda = match lambda_policy {
            LambdaPolicy::Fixed(l) => l,
            LambdaPolicy::Auto => 1.0 + current.abs_coeff_sum(),
        };
        let y = next;
        next += 1;
        let mut out = MultilinearPolynomial::new();
        for (vars, c) in current.terms() {
            if vars.len() >= 3 && vars.contains(&i) && vars.contains(&j) {
                let mut nv: Vec<usize> = vars.iter().copied().filter(|&v| v != i && v != j).collect();
                nv.push(y);
                out.add_term(&nv, c);
            } else {
                out.add_term(vars, c);
            }
        }
        out.add_term(&[i, j], lambda);
        out.add_term(&[i, y], -2.0 * lambda);
        out.add_term(&[j, y], -2.0 * lambda);
        out.add_term(&[y], 3.0 * lambda);
        current = out;
        steps.push(ReductionStep::AuxDefinition { aux: y, i, j, lambda });
    }
    (current, steps)
}

/// Substitutes `x_k = (1 - z_k) / 2` for every variable index below the
/// polynomial's index bound.
pub fn to_ising(poly: &MultilinearPolynomial) -> Result<IsingModel, ReductionError> {
    if poly.degree() > 2 {
        return Err(ReductionError::DegreeTooHigh(poly.degree()));
    }
    let mut m = IsingModel::new(poly.index_bound());
    for (vars, c) in poly.terms() {
        match *vars {
            [] => m.offset += c,
            [i] => {
                m.offset += c / 2.0;
                m.add_linear(i, -c / 2.0);
            }
            [i, j] => {
                let q = c / 4.0;
                m.offset += q;
                m.add_linear(i, -q);
                m.add_linear(j, -q);
                m.add_quadratic(i, j, q);
            }
            _ => unreachable!("degree checked above"),
        }
    }
    Ok(m)
}

/// Renumbers the variables that occur in `poly` densely, in increasing order.
/// Returns the renumbered polynomial and the original index of each new one.
pub fn compact(poly: &MultilinearPolynomial) -> (MultilinearPolynomial, Vec<usize>) {
    let present: Vec<usize> = poly.variables().into_iter().collect();
    let new_of: BTreeMap<usize, usize> = present.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    let out = MultilinearPolynomial::from_terms(
        poly.terms()
            .map(|(vars, c)| (vars.iter().map(|v| new_of[v]).collect(), c)),
    );
    (out, present)
}

fn sign(v: f64) -> i8 {
    if v < 0.0 {
        -1
    } else {
        1
    }
}

/// Spin values fixed by a chain rule given the neighbor's value.
fn chain_value(rule_neighbor: Option<i8>, quad: f64, linear: f64) -> i8 {
    let field = rule_neighbor.map_or(0.0, |zi| quad * f64::from(zi)) + linear;
    -sign(field)
}

/// Outcome of [`eliminate_chains`].
#[derive(Debug, Clone, PartialEq)]
pub struct ChainElimination {
    /// Remaining spins renumbered densely; the offset absorbs the minimized
    /// contribution of every removed spin.
    pub model: IsingModel,
    /// `ChainRule` steps in elimination order.
    pub rules: Vec<ReductionStep>,
    /// Old index of each remaining spin.
    pub kept: Vec<usize>,
}

/// Peels spins with at most one coupling, lowest index first, until none is
/// left. A leaf `j` with coupling `w` to `i` and field `h` gets the rule
/// `z_j = -sign(w z_i + h)`; its minimized contribution `-|w z_i + h|` is affine
/// in `z_i` and is folded into `i`'s field and the offset.
pub fn eliminate_chains(model: &IsingModel) -> ChainElimination {
    let n = model.n();
    let mut work = model.clone();
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for ((i, j), _) in model.quadratic_terms() {
        adj[i].insert(j);
        adj[j].insert(i);
    }
    let mut alive = vec![true; n];
    let mut ready: BTreeSet<usize> = (0..n).filter(|&j| adj[j].len() <= 1).collect();
    let mut rules = Vec::new();
    while let Some(j) = ready.pop_first() {
        let h = work.remove_linear(j);
        alive[j] = false;
        match adj[j].iter().next().copied() {
            Some(i) => {
                let w = work.remove_quadratic(i, j);
                let g_up = -(w + h).abs();
                let g_down = -(h - w).abs();
                work.offset += (g_up + g_down) / 2.0;
                work.add_linear(i, (g_up - g_down) / 2.0);
                adj[i].remove(&j);
                adj[j].clear();
                if alive[i] && adj[i].len() <= 1 {
                    ready.insert(i);
                }
                rules.push(ReductionStep::ChainRule {
                    eliminated: j,
                    neighbor: Some(i),
                    quad: w,
                    linear: h,
                });
            }
            None => {
                work.offset -= h.abs();
                rules.push(ReductionStep::ChainRule {
                    eliminated: j,
                    neighbor: None,
                    quad: 0.0,
                    linear: h,
                });
            }
        }
    }
    let kept: Vec<usize> = (0..n).filter(|&k| alive[k]).collect();
    let mut reduced = work.restrict(&kept, true);
    reduced.labels = kept.iter().map(|&k| model.labels[k].clone()).collect();
    ChainElimination {
        model: reduced,
        rules,
        kept,
    }
}

/// Full pipeline: minimization form, slack conversion, penalty, uncoupled
/// fixing, quadratization, spin mapping and chain elimination.
pub fn reduce_full(
    problem: &ConstrainedProblem,
    config: &ReductionConfig,
) -> Result<(IsingModel, ReductionTrace), ReductionError> {
    config.validate()?;
    let min_form = to_minimization(problem);
    let slacked = slack_all(&min_form, config)?;
    let (poly, penalty_offset) = penalize(&slacked, config)?;
    let (fixed, mut steps) = eliminate_uncoupled(&poly);
    let (quad, aux_steps) = quadratize(&fixed, config.lambda_policy, slacked.num_vars());
    let mut names = slacked.variable_names.clone();
    for s in &aux_steps {
        if let ReductionStep::AuxDefinition { aux, .. } = s {
            names.resize(*aux, String::new());
            names.push(format!("y.{}", aux - slacked.num_vars()));
        }
    }
    steps.extend(aux_steps);
    let total = names.len();
    let (compacted, var_of_spin) = compact(&quad);
    let mut ising = to_ising(&compacted)?;
    ising.labels = var_of_spin.iter().map(|&v| names[v].clone()).collect();
    ising.offset += penalty_offset;
    steps.push(ReductionStep::IsingMapMarker { var_of_spin });
    let chains = eliminate_chains(&ising);
    steps.extend(chains.rules);
    steps.push(ReductionStep::Renaming {
        map: chains.kept.clone(),
    });
    let model = chains.model;
    let trace = ReductionTrace {
        steps,
        original_var_count: problem.num_vars(),
        total_var_count: total,
        final_var_count: model.n(),
        sense_flip: min_form.sense_flipped != problem.sense_flipped,
        offset: model.offset,
        var_names: names,
        problem: Some(problem.clone()),
    };
    Ok((model, trace))
}

impl ReductionTrace {
    /// Trace for a plain polynomial that was only mapped to spins.
    pub fn identity(n: usize) -> Self {
        Self {
            steps: vec![
                ReductionStep::IsingMapMarker {
                    var_of_spin: (0..n).collect(),
                },
                ReductionStep::Renaming { map: (0..n).collect() },
            ],
            original_var_count: n,
            total_var_count: n,
            final_var_count: n,
            sense_flip: false,
            offset: 0.0,
            var_names: (0..n).map(|i| format!("x{}", i + 1)).collect(),
            problem: None,
        }
    }

    /// Replays the steps backwards from a final spin assignment.
    pub fn reconstruct(&self, final_z: &[i8]) -> Result<Reconstruction, ReductionError> {
        if final_z.len() != self.final_var_count {
            return Err(ReductionError::DimensionMismatch {
                expected: self.final_var_count,
                got: final_z.len(),
            });
        }
        let mut spins: Vec<Option<i8>> = Vec::new();
        let mut x: Vec<Option<bool>> = vec![None; self.total_var_count];
        for step in self.steps.iter().rev() {
            match step {
                ReductionStep::Renaming { map } => {
                    let size = map.iter().max().map_or(0, |m| m + 1);
                    spins = vec![None; size.max(spins.len())];
                    for (k, &old) in map.iter().enumerate() {
                        spins[old] = Some(final_z[k]);
                    }
                }
                ReductionStep::ChainRule {
                    eliminated,
                    neighbor,
                    quad,
                    linear,
                } => {
                    if spins.len() <= *eliminated {
                        spins.resize(eliminated + 1, None);
                    }
                    let zi = neighbor.map(|i| spins.get(i).copied().flatten().expect("neighbor spin assigned before its leaf"));
                    spins[*eliminated] = Some(chain_value(zi, *quad, *linear));
                }
                ReductionStep::IsingMapMarker { var_of_spin } => {
                    for (k, &v) in var_of_spin.iter().enumerate() {
                        if let Some(Some(z)) = spins.get(k) {
                            x[v] = Some(*z < 0);
                        }
                    }
                }
                ReductionStep::AuxDefinition { aux, i, j, .. } => {
                    let prod = x[*i].unwrap_or(false) && x[*j].unwrap_or(false);
                    match x[*aux] {
                        Some(y) if y != prod => {
                            return Err(ReductionError::AuxInconsistency {
                                aux: *aux,
                                i: *i,
                                j: *j,
                            })
                        }
                        _ => x[*aux] = Some(prod),
                    }
                }
                ReductionStep::FixedBoolean { index, value, .. } => x[*index] = Some(*value),
            }
        }
        let full: Vec<bool> = x.into_iter().map(|v| v.unwrap_or(false)).collect();
        let assignment = full[..self.original_var_count].to_vec();
        let (objective, feasible) = match &self.problem {
            Some(p) => (Some(p.objective.evaluate_unchecked(&assignment)), p.is_feasible(&assignment)),
            None => (None, true),
        };
        Ok(Reconstruction {
            assignment,
            full_assignment: full,
            objective,
            feasible,
        })
    }

    /// Original-sense objective corresponding to a final-model energy.
    pub fn energy_to_objective(&self, energy: f64) -> f64 {
        if self.sense_flip {
            -energy
        } else {
            energy
        }
    }

    pub fn sense(&self) -> Option<Sense> {
        self.problem.as_ref().map(|p| p.sense)
    }
}
