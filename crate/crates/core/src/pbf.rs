//! Constrained pseudo-Boolean problems.
//!
//! A problem is an objective polynomial over Boolean variables, an optimization
//! sense, and a list of polynomial constraints of the form `g(x) == 0` or
//! `g(x) <= 0`. The helpers here normalize such a problem into a single
//! unconstrained minimization polynomial: flip the sense, convert inequalities
//! with binary slack variables, and fold the constraints in as a quadratic
//! penalty.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Coefficients with magnitude at or below this are dropped on canonicalization.
pub const COEFF_EPS: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PbfError {
    #[error("assignment has {got} entries but variable index {index} is referenced")]
    MissingAssignment { index: usize, got: usize },
    #[error("constraint coefficients must be integers (found {0})")]
    NonIntegerCoefficient(f64),
    #[error("constraint is infeasible on every Boolean assignment (max of -g is {0})")]
    InfeasibleConstraint(f64),
    #[error("penalty weight must be positive (got {0})")]
    NonPositivePenalty(f64),
    #[error("penalize expects a minimization problem")]
    NotMinimization,
    #[error("penalize expects equality constraints only; run add_slack first")]
    InequalityRemaining,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// One monomial `coeff * prod(vars)`. `vars` is sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub vars: Vec<usize>,
    pub coeff: f64,
}

/// Sparse multilinear polynomial in canonical form: one entry per distinct
/// variable set, no zero coefficients. The empty set holds the constant term.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MultilinearPolynomial {
    terms: BTreeMap<Vec<usize>, f64>,
}

fn canonical_vars(vars: &[usize]) -> Vec<usize> {
    let mut v = vars.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

impl MultilinearPolynomial {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        let mut p = Self::new();
        p.add_term(&[], c);
        p
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut p = Self::new();
        for (vars, c) in terms {
            p.add_term(&vars, c);
        }
        p
    }

    /// Adds `coeff * prod(vars)`; repeated variables collapse since `x^2 = x`.
    pub fn add_term(&mut self, vars: &[usize], coeff: f64) {
        let key = canonical_vars(vars);
        let entry = self.terms.entry(key.clone()).or_insert(0.0);
        *entry += coeff;
        if entry.abs() <= COEFF_EPS {
            self.terms.remove(&key);
        }
    }

    pub fn coeff(&self, vars: &[usize]) -> f64 {
        self.terms
            .get(&canonical_vars(vars))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn constant_term(&self) -> f64 {
        self.coeff(&[])
    }

    /// Removes and returns the constant term.
    pub fn take_constant(&mut self) -> f64 {
        self.terms.remove(&Vec::new()).unwrap_or(0.0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        self.terms.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn to_terms(&self) -> Vec<Term> {
        self.terms
            .iter()
            .map(|(vars, &coeff)| Term {
                vars: vars.clone(),
                coeff,
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> usize {
        self.terms.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn variables(&self) -> BTreeSet<usize> {
        self.terms.keys().flatten().copied().collect()
    }

    /// Number of distinct variables referenced.
    pub fn num_vars(&self) -> usize {
        self.variables().len()
    }

    /// Largest referenced index plus one (0 for constant polynomials).
    pub fn index_bound(&self) -> usize {
        self.terms
            .keys()
            .filter_map(|k| k.last())
            .max()
            .map_or(0, |&m| m + 1)
    }

    /// Rebuilds canonical form (merging and dropping zero terms).
    pub fn canonicalize(&self) -> Self {
        Self::from_terms(self.terms.iter().map(|(k, &c)| (k.clone(), c)))
    }

    pub fn evaluate(&self, assignment: &[bool]) -> Result<f64, PbfError> {
        let bound = self.index_bound();
        if assignment.len() < bound {
            return Err(PbfError::MissingAssignment {
                index: bound - 1,
                got: assignment.len(),
            });
        }
        Ok(self.evaluate_unchecked(assignment))
    }

    pub(crate) fn evaluate_unchecked(&self, assignment: &[bool]) -> f64 {
        self.terms
            .iter()
            .filter(|(vars, _)| vars.iter().all(|&v| assignment[v]))
            .map(|(_, &c)| c)
            .sum()
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self::from_terms(self.terms.iter().map(|(k, &c)| (k.clone(), c * factor)))
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, &c) in &other.terms {
            out.add_term(k, c);
        }
        out
    }

    /// Multilinear product: variable sets are unioned.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::new();
        for (a, &ca) in &self.terms {
            for (b, &cb) in &other.terms {
                let mut vars: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
                vars.sort_unstable();
                vars.dedup();
                out.add_term(&vars, ca * cb);
            }
        }
        out
    }

    /// Sum of absolute values of all non-constant coefficients.
    pub fn abs_coeff_sum(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(k, _)| !k.is_empty())
            .map(|(_, c)| c.abs())
            .sum()
    }

    /// Term-wise upper bound over the Boolean cube: constant plus every
    /// positive non-constant coefficient. Exact for linear polynomials.
    pub fn upper_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(k, &c)| if k.is_empty() { c } else { c.max(0.0) })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[serde(alias = "minimize")]
    Min,
    #[serde(alias = "maximize")]
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstraintKind {
    /// `poly == 0`
    Eq,
    /// `poly <= 0`
    Leq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub poly: MultilinearPolynomial,
    pub kind: ConstraintKind,
}

impl Constraint {
    pub fn is_satisfied(&self, assignment: &[bool]) -> bool {
        let g = self.poly.evaluate_unchecked(assignment);
        match self.kind {
            ConstraintKind::Eq => g.abs() <= 1e-9,
            ConstraintKind::Leq => g <= 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedProblem {
    pub objective: MultilinearPolynomial,
    pub sense: Sense,
    pub constraints: Vec<Constraint>,
    /// Label of each variable index.
    pub variable_names: Vec<String>,
    /// Set when `to_minimization` negated a maximization objective.
    pub sense_flipped: bool,
}

impl ConstrainedProblem {
    pub fn new(objective: MultilinearPolynomial, sense: Sense, variable_names: Vec<String>) -> Self {
        Self {
            objective,
            sense,
            constraints: Vec::new(),
            variable_names,
            sense_flipped: false,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.variable_names.len()
    }

    pub fn is_feasible(&self, assignment: &[bool]) -> bool {
        self.constraints.iter().all(|c| c.is_satisfied(assignment))
    }

    /// Objective in the problem's own sense.
    pub fn objective_value(&self, assignment: &[bool]) -> Result<f64, PbfError> {
        self.objective.evaluate(assignment)
    }

    /// Index of a variable by name.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.variable_names.iter().position(|n| n == name)
    }

    /// Builds an index-ordered assignment from `(name, value)` pairs; unnamed
    /// variables default to `false`.
    pub fn assignment_from_names(&self, values: &[(&str, bool)]) -> Vec<bool> {
        let mut out = vec![false; self.num_vars()];
        for (name, v) in values {
            if let Some(i) = self.index_of(name) {
                out[i] = *v;
            }
        }
        out
    }

    /// Variable indices sorted by natural name order (`x2` before `x10`).
    pub fn natural_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.num_vars()).collect();
        idx.sort_by(|&a, &b| natural_cmp(&self.variable_names[a], &self.variable_names[b]));
        idx
    }

    /// Exhaustive optimum in the problem's own sense, with the optimizer.
    /// Returns `None` when no assignment is feasible.
    pub fn brute_force_optimum(&self) -> Option<(f64, Vec<bool>)> {
        let n = self.num_vars();
        assert!(n <= 26, "exhaustive search capped at 26 variables");
        let mut best: Option<(f64, Vec<bool>)> = None;
        let mut x = vec![false; n];
        for mask in 0u64..(1u64 << n) {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi = (mask >> i) & 1 == 1;
            }
            if !self.is_feasible(&x) {
                continue;
            }
            let v = self.objective.evaluate_unchecked(&x);
            let better = match &best {
                None => true,
                Some((b, _)) => match self.sense {
                    Sense::Min => v < *b - 1e-9,
                    Sense::Max => v > *b + 1e-9,
                },
            };
            if better {
                best = Some((v, x.clone()));
            }
        }
        best
    }
}

/// Orders names by their non-digit prefix, then by numeric suffix.
pub fn natural_cmp(a: &str, b: &str) -> std::cmp::Ordering {
    fn split(s: &str) -> (&str, Option<u64>) {
        let cut = s.trim_end_matches(|c: char| c.is_ascii_digit()).len();
        (&s[..cut], s[cut..].parse().ok())
    }
    let (pa, na) = split(a);
    let (pb, nb) = split(b);
    pa.cmp(pb).then(na.cmp(&nb)).then(a.cmp(b))
}

/// How the quadratization penalty weight is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LambdaPolicy {
    /// `1 + sum |coeff|` of the polynomial at substitution time.
    Auto,
    Fixed(f64),
}

/// Penalty weight for folding constraints into the objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PenaltyWeight {
    /// `1 + sum |objective coeff|`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionConfig {
    pub mu: PenaltyWeight,
    pub lambda_policy: LambdaPolicy,
    /// Slack bit count per constraint index; `None` entries use the default.
    pub slack_bits_override: Vec<Option<usize>>,
    pub q_cap: usize,
}

impl Default for ReductionConfig {
    fn default() -> Self {
        Self {
            mu: PenaltyWeight::Auto,
            lambda_policy: LambdaPolicy::Auto,
            slack_bits_override: Vec::new(),
            q_cap: 10,
        }
    }
}

impl ReductionConfig {
    pub fn validate(&self) -> Result<(), PbfError> {
        if let PenaltyWeight::Fixed(mu) = self.mu {
            if !(mu > 0.0) {
                return Err(PbfError::NonPositivePenalty(mu));
            }
        }
        if let LambdaPolicy::Fixed(l) = self.lambda_policy {
            if !(l > 0.0) {
                return Err(PbfError::InvalidConfig(format!("lambda must be positive (got {l})")));
            }
        }
        if self.q_cap < 2 {
            return Err(PbfError::InvalidConfig(format!("q_cap must be at least 2 (got {})", self.q_cap)));
        }
        Ok(())
    }

    pub fn slack_bits_for(&self, constraint: usize) -> Option<usize> {
        self.slack_bits_override.get(constraint).copied().flatten()
    }
}

/// Negates a maximization objective; minimization problems pass through.
pub fn to_minimization(problem: &ConstrainedProblem) -> ConstrainedProblem {
    let mut out = problem.clone();
    if problem.sense == Sense::Max {
        out.objective = problem.objective.scale(-1.0);
        out.sense = Sense::Min;
        out.sense_flipped = !problem.sense_flipped;
    }
    out
}

fn is_integral(c: f64) -> bool {
    (c - c.round()).abs() <= 1e-9
}

/// Result of converting one `g <= 0` constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackConversion {
    pub constraint: Constraint,
    pub slack_vars: Vec<usize>,
    /// Upper end of the slack range that the default encoding must cover.
    pub range: u64,
}

/// Converts `g <= 0` into `g + sum_b 2^b s_b == 0` with fresh slack variables
/// starting at index `first_slack`. Equality constraints are returned as-is.
pub fn add_slack(
    constraint: &Constraint,
    first_slack: usize,
    bits_override: Option<usize>,
) -> Result<SlackConversion, PbfError> {
    if constraint.kind == ConstraintKind::Eq {
        return Ok(SlackConversion {
            constraint: constraint.clone(),
            slack_vars: Vec::new(),
            range: 0,
        });
    }
    if let Some((_, c)) = constraint.poly.terms().find(|(_, c)| !is_integral(*c)) {
        return Err(PbfError::NonIntegerCoefficient(c));
    }
    let neg = constraint.poly.scale(-1.0);
    let raw = neg.upper_bound().round();
    if raw < 0.0 {
        return Err(PbfError::InfeasibleConstraint(raw));
    }
    let range = raw as u64;
    let bits = bits_override.unwrap_or_else(|| bits_for_range(range));
    let mut poly = constraint.poly.clone();
    let mut slack_vars = Vec::with_capacity(bits);
    for b in 0..bits {
        let idx = first_slack + b;
        poly.add_term(&[idx], (1u64 << b) as f64);
        slack_vars.push(idx);
    }
    Ok(SlackConversion {
        constraint: Constraint {
            poly,
            kind: ConstraintKind::Eq,
        },
        slack_vars,
        range,
    })
}

/// `ceil(log2(range + 1))`.
pub fn bits_for_range(range: u64) -> usize {
    (u64::BITS - range.leading_zeros()) as usize
}

/// Converts every inequality of `problem` with slack variables, registering the
/// slack names `s<c>.<b>`.
pub fn slack_all(problem: &ConstrainedProblem, config: &ReductionConfig) -> Result<ConstrainedProblem, PbfError> {
    let mut out = problem.clone();
    out.constraints.clear();
    for (ci, c) in problem.constraints.iter().enumerate() {
        let conv = add_slack(c, out.variable_names.len(), config.slack_bits_for(ci))?;
        for (b, _) in conv.slack_vars.iter().enumerate() {
            out.variable_names.push(format!("s{ci}.{b}"));
        }
        out.constraints.push(conv.constraint);
    }
    Ok(out)
}

/// Resolves the penalty weight for `problem`.
pub fn penalty_weight(problem: &ConstrainedProblem, mu: PenaltyWeight) -> f64 {
    match mu {
        PenaltyWeight::Fixed(v) => v,
        PenaltyWeight::Auto => 1.0 + problem.objective.abs_coeff_sum(),
    }
}

/// `f0 + mu * sum g_w^2`, with the constant split out as an offset.
pub fn penalize(
    problem: &ConstrainedProblem,
    config: &ReductionConfig,
) -> Result<(MultilinearPolynomial, f64), PbfError> {
    if problem.sense != Sense::Min {
        return Err(PbfError::NotMinimization);
    }
    if problem.constraints.iter().any(|c| c.kind != ConstraintKind::Eq) {
        return Err(PbfError::InequalityRemaining);
    }
    let mu = penalty_weight(problem, config.mu);
    if !(mu > 0.0) {
        return Err(PbfError::NonPositivePenalty(mu));
    }
    let mut f = problem.objective.clone();
    for c in &problem.constraints {
        f = f.add(&c.poly.mul(&c.poly).scale(mu));
    }
    let offset = f.take_constant();
    Ok((f, offset))
}

impl fmt::Display for MultilinearPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (vars, c)) in self.terms.iter().enumerate() {
            let sign = if *c < 0.0 { "-" } else { "+" };
            if i == 0 {
                if *c < 0.0 {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            write!(f, "{}", c.abs())?;
            for v in vars {
                write!(f, " x{v}")?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Text format

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    Colon,
    Leq,
    Geq,
    EqEq,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Caret => "'^'".into(),
            Tok::Colon => "':'".into(),
            Tok::Leq => "'<='".into(),
            Tok::Geq => "'>='".into(),
            Tok::EqEq => "'=='".into(),
        }
    }
}

fn tokenize(line: &str, lineno: usize) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = line.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |col: usize, msg: String| ParseError {
        line: lineno,
        column: col + 1,
        message: msg,
    };
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                continue;
            }
            '#' => break,
            '+' => out.push((Tok::Plus, start)),
            '-' => out.push((Tok::Minus, start)),
            '*' => out.push((Tok::Star, start)),
            '^' => out.push((Tok::Caret, start)),
            ':' => out.push((Tok::Colon, start)),
            '<' | '>' | '=' => {
                let next = bytes.get(i + 1).map(|&b| b as char);
                let tok = match (c, next) {
                    ('<', Some('=')) => Tok::Leq,
                    ('>', Some('=')) => Tok::Geq,
                    ('=', Some('=')) => Tok::EqEq,
                    ('=', _) => {
                        out.push((Tok::EqEq, start));
                        i += 1;
                        continue;
                    }
                    _ => return Err(err(start, format!("unsupported operator '{c}'; expected '<=', '>=' or '=='"))),
                };
                out.push((tok, start));
                i += 2;
                continue;
            }
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && {
                    let d = bytes[i] as char;
                    d.is_ascii_digit()
                        || d == '.'
                        || ((d == 'e' || d == 'E') && i + 1 < bytes.len() && {
                            let n = bytes[i + 1] as char;
                            n.is_ascii_digit() || n == '-' || n == '+'
                        })
                        || ((d == '-' || d == '+') && i > start && matches!(bytes[i - 1] as char, 'e' | 'E'))
                } {
                    i += 1;
                }
                let text = &line[start..i];
                let v: f64 = text
                    .parse()
                    .map_err(|_| err(start, format!("malformed number '{text}'")))?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((Tok::Ident(line[start..i].to_string()), start));
                continue;
            }
            other => return Err(err(start, format!("unexpected character '{other}'"))),
        }
        i += 1;
    }
    Ok(out)
}

struct LineParser<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    eol_col: usize,
}

impl<'a> LineParser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.eol_col, |(_, c)| *c) + 1
    }

    fn error(&self, expected: &str) -> ParseError {
        let found = self
            .peek()
            .map_or_else(|| "end of line".to_string(), Tok::describe);
        ParseError {
            line: self.line,
            column: self.col(),
            message: format!("expected {expected}, found {found}"),
        }
    }

    /// Parses `[sign] term (sign term)*` into `(var-names, coeff)` pairs.
    fn expr(&mut self) -> Result<Vec<(Vec<String>, f64)>, ParseError> {
        let mut terms = Vec::new();
        let mut first = true;
        loop {
            let mut sign = 1.0;
            match self.peek() {
                Some(Tok::Plus) => self.pos += 1,
                Some(Tok::Minus) => {
                    sign = -1.0;
                    self.pos += 1;
                }
                _ if first => {}
                _ => break,
            }
            first = false;
            terms.push(self.term(sign)?);
        }
        Ok(terms)
    }

    fn term(&mut self, sign: f64) -> Result<(Vec<String>, f64), ParseError> {
        let mut coeff = sign;
        let mut vars = Vec::new();
        let mut have_num = false;
        if let Some(Tok::Num(v)) = self.peek() {
            coeff *= v;
            have_num = true;
            self.pos += 1;
            if let Some(Tok::Star) = self.peek() {
                self.pos += 1;
                if !matches!(self.peek(), Some(Tok::Ident(_))) {
                    return Err(self.error("variable after '*'"));
                }
            }
        }
        while let Some(Tok::Ident(name)) = self.peek() {
            vars.push(name.clone());
            self.pos += 1;
            if let Some(Tok::Caret) = self.peek() {
                return Err(ParseError {
                    line: self.line,
                    column: self.col(),
                    message: "exponents are not allowed: multilinear only (x^k = x for Boolean x)".into(),
                });
            }
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    if !matches!(self.peek(), Some(Tok::Ident(_))) {
                        return Err(self.error("variable after '*'"));
                    }
                }
                _ => break,
            }
        }
        if !have_num && vars.is_empty() {
            return Err(self.error("coefficient or variable"));
        }
        Ok((vars, coeff))
    }

    fn number(&mut self) -> Result<f64, ParseError> {
        let mut sign = 1.0;
        match self.peek() {
            Some(Tok::Minus) => {
                sign = -1.0;
                self.pos += 1;
            }
            Some(Tok::Plus) => self.pos += 1,
            _ => {}
        }
        match self.peek() {
            Some(Tok::Num(v)) => {
                let v = *v;
                self.pos += 1;
                Ok(sign * v)
            }
            _ => Err(self.error("number")),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

struct Registry {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl Registry {
    fn id(&mut self, name: &str) -> usize {
        if let Some(&i) = self.index.get(name) {
            return i;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        i
    }

    fn poly(&mut self, terms: &[(Vec<String>, f64)]) -> MultilinearPolynomial {
        let mut p = MultilinearPolynomial::new();
        for (vars, c) in terms {
            let ids: Vec<usize> = vars.iter().map(|v| self.id(v)).collect();
            p.add_term(&ids, *c);
        }
        p
    }
}

/// Parses the line-oriented problem format.
///
/// ```text
/// # comment
/// max: 2 x1 + 5 x2 + 7 x1*x3*x4
/// 8 x1 + 6 x2 + 5 x3 + 3 x4 <= 16
/// x1 + x2 == 1
/// ```
///
/// A line starting with `+` or `-` continues the previous statement.
/// Variables are indexed in order of first appearance.
pub fn parse_problem(source: &str) -> Result<ConstrainedProblem, ParseError> {
    // Join continuation lines while remembering where each statement started.
    let mut statements: Vec<(usize, String)> = Vec::new();
    for (i, raw) in source.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let continues = (trimmed.starts_with('+') || trimmed.starts_with('-')) && !statements.is_empty();
        if continues {
            let last = statements.last_mut().expect("checked non-empty");
            last.1.push(' ');
            last.1.push_str(trimmed);
        } else {
            statements.push((i + 1, line.to_string()));
        }
    }

    let mut reg = Registry {
        names: Vec::new(),
        index: HashMap::new(),
    };
    let mut objective: Option<(Sense, MultilinearPolynomial)> = None;
    let mut constraints = Vec::new();
    for (lineno, text) in statements {
        let toks = tokenize(&text, lineno)?;
        let mut p = LineParser {
            toks: &toks,
            pos: 0,
            line: lineno,
            eol_col: text.len(),
        };
        let header = match (toks.first(), toks.get(1)) {
            (Some((Tok::Ident(h), _)), Some((Tok::Colon, _))) => Some(h.to_ascii_lowercase()),
            _ => None,
        };
        if let Some(h) = header {
            let sense = match h.as_str() {
                "min" | "minimize" => Sense::Min,
                "max" | "maximize" => Sense::Max,
                _ => return Err(p.error("'min:' or 'max:'")),
            };
            if objective.is_some() {
                return Err(ParseError {
                    line: lineno,
                    column: toks[0].1 + 1,
                    message: "duplicate objective".into(),
                });
            }
            p.pos = 2;
            let terms = p.expr()?;
            if !p.at_end() {
                return Err(p.error("'+', '-' or end of line"));
            }
            objective = Some((sense, reg.poly(&terms)));
            continue;
        }
        let lhs = p.expr()?;
        let op = match p.peek() {
            Some(Tok::Leq) => Tok::Leq,
            Some(Tok::Geq) => Tok::Geq,
            Some(Tok::EqEq) => Tok::EqEq,
            _ => return Err(p.error("'<=', '>=' or '=='")),
        };
        p.pos += 1;
        let rhs = p.number()?;
        if !p.at_end() {
            return Err(p.error("end of line"));
        }
        let mut poly = reg.poly(&lhs);
        poly.add_term(&[], -rhs);
        let (poly, kind) = match op {
            Tok::Leq => (poly, ConstraintKind::Leq),
            Tok::Geq => (poly.scale(-1.0), ConstraintKind::Leq),
            _ => (poly, ConstraintKind::Eq),
        };
        constraints.push(Constraint { poly, kind });
    }
    let (sense, objective) = objective.ok_or(ParseError {
        line: 1,
        column: 1,
        message: "missing objective: expected a 'min:' or 'max:' line".into(),
    })?;
    Ok(ConstrainedProblem {
        objective,
        sense,
        constraints,
        variable_names: reg.names,
        sense_flipped: false,
    })
}

/// Renders a problem in the text format accepted by [`parse_problem`].
pub fn format_problem(problem: &ConstrainedProblem) -> String {
    let names = &problem.variable_names;
    let render = |poly: &MultilinearPolynomial, skip_const: bool| -> String {
        let mut s = String::new();
        for (vars, c) in poly.terms() {
            if skip_const && vars.is_empty() {
                continue;
            }
            let sign = if c < 0.0 { '-' } else { '+' };
            if s.is_empty() {
                if c < 0.0 {
                    s.push('-');
                }
            } else {
                s.push(' ');
                s.push(sign);
            }
            if !s.is_empty() && !s.ends_with('-') {
                s.push(' ');
            }
            s.push_str(&format!("{}", c.abs()));
            if !vars.is_empty() {
                s.push(' ');
                let prod: Vec<&str> = vars.iter().map(|&v| names[v].as_str()).collect();
                s.push_str(&prod.join("*"));
            }
        }
        if s.is_empty() {
            s.push('0');
        }
        s
    };
    let mut out = String::new();
    let head = match problem.sense {
        Sense::Min => "min",
        Sense::Max => "max",
    };
    out.push_str(&format!("{head}: {}\n", render(&problem.objective, false)));
    for c in &problem.constraints {
        let op = match c.kind {
            ConstraintKind::Eq => "==",
            ConstraintKind::Leq => "<=",
        };
        out.push_str(&format!("{} {op} {}\n", render(&c.poly, true), -c.poly.constant_term()));
    }
    out
}

// ---------------------------------------------------------------------------
// JSON mirror

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTerm {
    pub vars: Vec<String>,
    pub coeff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintJson {
    pub terms: Vec<NamedTerm>,
    pub kind: ConstraintKind,
    pub rhs: f64,
}

/// Structured mirror of the text format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemJson {
    pub sense: Sense,
    /// Variable names in index order; names first seen in terms are appended.
    #[serde(default)]
    pub variables: Vec<String>,
    pub terms: Vec<NamedTerm>,
    #[serde(default)]
    pub constraints: Vec<ConstraintJson>,
}

impl ProblemJson {
    pub fn from_problem(problem: &ConstrainedProblem) -> Self {
        let named = |poly: &MultilinearPolynomial, skip_const: bool| -> Vec<NamedTerm> {
            poly.terms()
                .filter(|(v, _)| !(skip_const && v.is_empty()))
                .map(|(vars, coeff)| NamedTerm {
                    vars: vars.iter().map(|&v| problem.variable_names[v].clone()).collect(),
                    coeff,
                })
                .collect()
        };
        Self {
            sense: problem.sense,
            variables: problem.variable_names.clone(),
            terms: named(&problem.objective, false),
            constraints: problem
                .constraints
                .iter()
                .map(|c| ConstraintJson {
                    terms: named(&c.poly, true),
                    kind: c.kind,
                    rhs: -c.poly.constant_term(),
                })
                .collect(),
        }
    }

    pub fn into_problem(self) -> ConstrainedProblem {
        let mut reg = Registry {
            names: Vec::new(),
            index: HashMap::new(),
        };
        for v in &self.variables {
            reg.id(v);
        }
        let to_pairs = |ts: &[NamedTerm]| -> Vec<(Vec<String>, f64)> {
            ts.iter().map(|t| (t.vars.clone(), t.coeff)).collect()
        };
        let objective = reg.poly(&to_pairs(&self.terms));
        let constraints = self
            .constraints
            .iter()
            .map(|c| {
                let mut poly = reg.poly(&to_pairs(&c.terms));
                poly.add_term(&[], -c.rhs);
                Constraint { poly, kind: c.kind }
            })
            .collect();
        ConstrainedProblem {
            objective,
            sense: self.sense,
            constraints,
            variable_names: reg.names,
            sense_flipped: false,
        }
    }
}
