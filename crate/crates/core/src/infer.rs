//! Conditional probability queries over discrete targets.
//!
//! Evidence may fix states of discrete nodes, fix values of continuous nodes,
//! or restrict continuous nodes to intervals. All-discrete networks can be
//! answered exactly by enumerating the joint table; hybrid networks use
//! rejection sampling (interval evidence) or likelihood weighting (point
//! evidence on continuous nodes).
//!
//! Sampling runs in fixed-size seeded streams whose tallies are merged in
//! stream order, so estimates are bit-identical across thread counts.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::ops::Bound;

use thiserror::Error;

use crate::graph::NodeId;
use crate::model::{config_count, config_states, run_streams, Assignment, CompiledNetwork, ModelError, Network, Value, VariableKind};

/// Largest joint state space enumerated when the method is `Auto`.
pub const AUTO_EXACT_LIMIT: f64 = 1e6;
/// Hard limit for explicit exact enumeration.
pub const EXACT_LIMIT: f64 = 1e8;
pub const DEFAULT_SAMPLES: usize = 200_000;
pub const DEFAULT_SEED: u64 = 20240101;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("exact enumeration needs an all-discrete network; `{0}` is continuous")]
    ContinuousNodePresent(String),
    #[error("exact enumeration accepts point evidence only; `{0}` has an interval")]
    IntervalEvidence(String),
    #[error("joint state space of {0:e} states is too large to enumerate")]
    StateSpaceTooLarge(f64),
    #[error("evidence has probability zero")]
    ZeroProbabilityEvidence,
    #[error("no samples satisfied the evidence ({n_drawn} drawn); increase the sample count")]
    NoSamplesKept { n_drawn: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("invalid evidence: {0}")]
    InvalidEvidence(String),
    #[error("rejection sampling cannot condition on the value of continuous node `{0}`; use likelihood weighting")]
    PointEvidenceNeedsWeighting(String),
    #[error("cannot parse `{0}`: {1}")]
    Parse(String, String),
}

/// One evidence constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Observation {
    State(String),
    Real(f64),
    /// Bounds on a continuous node; `Unbounded` stands for ±∞.
    Interval { lo: Bound<f64>, hi: Bound<f64> },
}

impl Observation {
    fn contains(lo: &Bound<f64>, hi: &Bound<f64>, x: f64) -> bool {
        let above = match *lo {
            Bound::Included(a) => x >= a,
            Bound::Excluded(a) => x > a,
            Bound::Unbounded => true,
        };
        let below = match *hi {
            Bound::Included(b) => x <= b,
            Bound::Excluded(b) => x < b,
            Bound::Unbounded => true,
        };
        above && below
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Evidence(pub BTreeMap<NodeId, Observation>);

impl Evidence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn state(mut self, node: &str, state: &str) -> Self {
        self.0.insert(node.into(), Observation::State(state.to_string()));
        self
    }

    pub fn real(mut self, node: &str, x: f64) -> Self {
        self.0.insert(node.into(), Observation::Real(x));
        self
    }

    /// `node > x`.
    pub fn above(self, node: &str, x: f64) -> Self {
        self.interval(node, Bound::Excluded(x), Bound::Unbounded)
    }

    /// `node < x`.
    pub fn below(self, node: &str, x: f64) -> Self {
        self.interval(node, Bound::Unbounded, Bound::Excluded(x))
    }

    pub fn interval(mut self, node: &str, lo: Bound<f64>, hi: Bound<f64>) -> Self {
        self.0.insert(node.into(), Observation::Interval { lo, hi });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

fn fmt_bound_value(x: f64) -> String {
    format!("{x}")
}

impl fmt::Display for Evidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .0
            .iter()
            .map(|(n, o)| match o {
                Observation::State(s) => format!("{n}={s}"),
                Observation::Real(x) => format!("{n}={x}"),
                Observation::Interval { lo: Bound::Excluded(a), hi: Bound::Unbounded } => format!("{n}>{a}"),
                Observation::Interval { lo: Bound::Unbounded, hi: Bound::Excluded(b) } => format!("{n}<{b}"),
                Observation::Interval { lo: Bound::Included(a), hi: Bound::Unbounded } => format!("{n}>={a}"),
                Observation::Interval { lo: Bound::Unbounded, hi: Bound::Included(b) } => format!("{n}<={b}"),
                Observation::Interval { lo, hi } => {
                    let (l, a) = match lo {
                        Bound::Included(a) => ('[', fmt_bound_value(*a)),
                        Bound::Excluded(a) => ('(', fmt_bound_value(*a)),
                        Bound::Unbounded => ('(', "-inf".into()),
                    };
                    let (r, b) = match hi {
                        Bound::Included(b) => (']', fmt_bound_value(*b)),
                        Bound::Excluded(b) => (')', fmt_bound_value(*b)),
                        Bound::Unbounded => (')', "inf".into()),
                    };
                    format!("{n} in {l}{a},{b}{r}")
                }
            })
            .collect();
        f.write_str(&parts.join(", "))
    }
}

/// Splits on commas outside brackets.
fn split_top_level(text: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, ch) in text.char_indices() {
        match ch {
            '[' | '(' => depth += 1,
            ']' | ')' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&text[start..]);
    parts.into_iter().map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn parse_real(item: &str, s: &str) -> Result<f64, InferError> {
    let t = s.trim();
    match t {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => t
            .parse::<f64>()
            .map_err(|_| InferError::Parse(item.to_string(), format!("`{t}` is not a number"))),
    }
}

/// Parses comma-separated constraints: `name=value`, `name>value`,
/// `name>=value`, `name<value`, `name<=value` and `name in [lo,hi]` (round
/// brackets give open ends). Values for discrete nodes are state labels.
pub fn parse_evidence(text: &str, net: &Network) -> Result<Evidence, InferError> {
    let mut ev = Evidence::new();
    for item in split_top_level(text) {
        let (name, obs) = if let Some(pos) = item.find(" in ") {
            let name = item[..pos].trim();
            let rest = item[pos + 4..].trim();
            let (open, close) = (rest.chars().next(), rest.chars().last());
            let inner = rest.get(1..rest.len().saturating_sub(1)).unwrap_or("");
            let (a, b) = inner
                .split_once(',')
                .ok_or_else(|| InferError::Parse(item.into(), "expected `[lo,hi]`".into()))?;
            let (a, b) = (parse_real(item, a)?, parse_real(item, b)?);
            let bound = |x: f64, closed: bool| {
                if x.is_infinite() {
                    Bound::Unbounded
                } else if closed {
                    Bound::Included(x)
                } else {
                    Bound::Excluded(x)
                }
            };
            let lo = match open {
                Some('[') => bound(a, true),
                Some('(') => bound(a, false),
                _ => return Err(InferError::Parse(item.into(), "interval must start with `[` or `(`".into())),
            };
            let hi = match close {
                Some(']') => bound(b, true),
                Some(')') => bound(b, false),
                _ => return Err(InferError::Parse(item.into(), "interval must end with `]` or `)`".into())),
            };
            (name, Observation::Interval { lo, hi })
        } else if let Some(pos) = item.find(['<', '>', '=']) {
            let name = item[..pos].trim();
            let rest = &item[pos..];
            let (op, value) = ["<=", ">=", "<", ">", "="]
                .iter()
                .find_map(|op| rest.strip_prefix(op).map(|v| (*op, v.trim())))
                .expect("position points at an operator");
            let spec = net.spec(name)?;
            let obs = match (op, &spec.kind) {
                ("=", VariableKind::Discrete { .. }) => Observation::State(value.to_string()),
                ("=", VariableKind::Continuous) => Observation::Real(parse_real(item, value)?),
                (_, VariableKind::Discrete { .. }) => {
                    return Err(InferError::InvalidEvidence(format!("`{name}` is discrete; use `{name}=state`")))
                }
                (op, VariableKind::Continuous) => {
                    let x = parse_real(item, value)?;
                    match op {
                        ">" => Observation::Interval { lo: Bound::Excluded(x), hi: Bound::Unbounded },
                        ">=" => Observation::Interval { lo: Bound::Included(x), hi: Bound::Unbounded },
                        "<" => Observation::Interval { lo: Bound::Unbounded, hi: Bound::Excluded(x) },
                        _ => Observation::Interval { lo: Bound::Unbounded, hi: Bound::Included(x) },
                    }
                }
            };
            (name, obs)
        } else {
            return Err(InferError::Parse(item.into(), "expected `name=value`, `name>value`, `name<value` or `name in [lo,hi]`".into()));
        };
        if name.is_empty() {
            return Err(InferError::Parse(item.into(), "missing node name".into()));
        }
        if ev.0.insert(name.into(), obs).is_some() {
            return Err(InferError::InvalidEvidence(format!("`{name}` is constrained twice")));
        }
    }
    Ok(ev)
}

/// Parses `A=1,B=0` into a target assignment.
pub fn parse_target(text: &str) -> Result<Assignment, InferError> {
    let mut a = Assignment::new();
    for item in split_top_level(text) {
        let (n, s) = item
            .split_once('=')
            .ok_or_else(|| InferError::Parse(item.into(), "expected `name=state`".into()))?;
        let (n, s) = (n.trim(), s.trim());
        if a.get(n).is_some() {
            return Err(InferError::InvalidTarget(format!("`{n}` appears twice")));
        }
        a = a.with_state(n, s);
    }
    if a.is_empty() {
        return Err(InferError::InvalidTarget("no target given".into()));
    }
    Ok(a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    #[default]
    Auto,
    Exact,
    Rejection,
    LikelihoodWeighting,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Auto => "auto",
            Method::Exact => "exact",
            Method::Rejection => "rejection",
            Method::LikelihoodWeighting => "likelihood-weighting",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryOptions {
    pub method: Method,
    pub n_samples: usize,
    pub seed: u64,
}

impl Default for QueryOptions {
    fn default() -> Self {
        QueryOptions { method: Method::Auto, n_samples: DEFAULT_SAMPLES, seed: DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryResult {
    pub estimate: f64,
    /// Zero for exact answers. For likelihood weighting the binomial formula
    /// uses the effective sample size in place of `n_kept`.
    pub std_error: f64,
    /// Samples consistent with the evidence (nonzero weight).
    pub n_kept: usize,
    pub n_drawn: usize,
    /// The method actually used; never `Auto`.
    pub method: Method,
}

impl QueryResult {
    pub fn render(&self, target: &str, evidence: &Evidence) -> String {
        let given = if evidence.is_empty() { String::new() } else { format!(" | {evidence}") };
        format!("P({target}{given}) = {:.3}  {}", self.estimate, self.detail())
    }

    fn detail(&self) -> String {
        match self.method {
            Method::Exact => "(exact)".to_string(),
            m => format!("(se {:.3}, kept {} of {}, {m})", self.std_error, self.n_kept, self.n_drawn),
        }
    }
}

/// Resolved evidence on dense rows.
#[derive(Debug, Clone, Copy)]
enum Cond {
    State(usize),
    Real(f64),
    Interval(Bound<f64>, Bound<f64>),
}

fn compile_evidence(net: &Network, ev: &Evidence) -> Result<Vec<Option<Cond>>, InferError> {
    let mut conds = vec![None; net.node_count()];
    for (name, obs) in &ev.0 {
        let v = net.index_of(name.as_str())?;
        let kind = &net.specs()[v].kind;
        let c = match (obs, kind) {
            (Observation::State(s), VariableKind::Discrete { .. }) => Cond::State(net.state_index(name.as_str(), s)?),
            (Observation::Real(x), VariableKind::Continuous) if x.is_finite() => Cond::Real(*x),
            (Observation::Interval { lo, hi }, VariableKind::Continuous) => {
                let val = |b: &Bound<f64>| match b {
                    Bound::Included(x) | Bound::Excluded(x) => Some(*x),
                    Bound::Unbounded => None,
                };
                if val(lo).is_some_and(f64::is_nan) || val(hi).is_some_and(f64::is_nan) {
                    return Err(InferError::InvalidEvidence(format!("`{name}` has a NaN bound")));
                }
                if let (Some(a), Some(b)) = (val(lo), val(hi)) {
                    if a >= b {
                        return Err(InferError::InvalidEvidence(format!("`{name}`: lower bound must be below the upper bound")));
                    }
                }
                Cond::Interval(*lo, *hi)
            }
            (Observation::Real(_), VariableKind::Continuous) => {
                return Err(InferError::InvalidEvidence(format!("`{name}` needs a finite value")))
            }
            (Observation::Interval { .. }, VariableKind::Discrete { .. }) => {
                return Err(InferError::InvalidEvidence(format!("interval on discrete node `{name}`")))
            }
            _ => return Err(InferError::InvalidEvidence(format!("value for `{name}` does not match its kind"))),
        };
        conds[v] = Some(c);
    }
    Ok(conds)
}

/// Target nodes with their cardinalities, checked against the evidence.
fn resolve_targets(net: &Network, names: &[&str], conds: &[Option<Cond>]) -> Result<(Vec<usize>, Vec<usize>), InferError> {
    if names.is_empty() {
        return Err(InferError::InvalidTarget("no target given".into()));
    }
    let mut idx = Vec::with_capacity(names.len());
    let mut cards = Vec::with_capacity(names.len());
    for &n in names {
        let v = net.index_of(n).map_err(|_| InferError::InvalidTarget(format!("unknown node `{n}`")))?;
        let card = net.specs()[v]
            .kind
            .cardinality()
            .ok_or_else(|| InferError::InvalidTarget(format!("`{n}` is continuous")))?;
        if conds[v].is_some() {
            return Err(InferError::InvalidTarget(format!("`{n}` is also in the evidence")));
        }
        if idx.contains(&v) {
            return Err(InferError::InvalidTarget(format!("`{n}` appears twice")));
        }
        idx.push(v);
        cards.push(card);
    }
    Ok((idx, cards))
}

fn state_space(net: &Network) -> f64 {
    net.specs().iter().map(|s| s.kind.cardinality().unwrap_or(0) as f64).product()
}

fn resolve_method(net: &Network, conds: &[Option<Cond>], requested: Method) -> Method {
    match requested {
        Method::Auto if net.is_all_discrete() && state_space(net) <= AUTO_EXACT_LIMIT => Method::Exact,
        Method::Auto if conds.iter().any(|c| matches!(c, Some(Cond::Real(_)))) => Method::LikelihoodWeighting,
        Method::Auto => Method::Rejection,
        m => m,
    }
}

/// Weighted tally of target configurations.
#[derive(Debug, Clone, PartialEq)]
struct Tally {
    drawn: usize,
    kept: usize,
    /// Kept samples per target configuration.
    counts: Vec<u64>,
    /// Summed weights per target configuration.
    weights: Vec<f64>,
    weight_sq: f64,
}

impl Tally {
    fn new(configs: usize) -> Self {
        Tally { drawn: 0, kept: 0, counts: vec![0; configs], weights: vec![0.0; configs], weight_sq: 0.0 }
    }

    fn merge(&mut self, other: &Tally) {
        self.drawn += other.drawn;
        self.kept += other.kept;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            *a += b;
        }
        self.weight_sq += other.weight_sq;
    }
}

fn config_of(row: &[f64], targets: &[usize], cards: &[usize]) -> usize {
    let mut idx = 0;
    let mut stride = 1;
    for (&t, &c) in targets.iter().zip(cards) {
        idx += row[t] as usize * stride;
        stride *= c;
    }
    idx
}

fn sample_tally(
    net: &Network,
    conds: &[Option<Cond>],
    targets: &[usize],
    cards: &[usize],
    method: Method,
    opts: &QueryOptions,
) -> Result<Tally, InferError> {
    let weighting = method == Method::LikelihoodWeighting;
    if !weighting {
        if let Some(v) = conds.iter().position(|c| matches!(c, Some(Cond::Real(_)))) {
            return Err(InferError::PointEvidenceNeedsWeighting(net.specs()[v].id.to_string()));
        }
    }
    let compiled = CompiledNetwork::new(net);
    let configs = config_count(cards);
    let k = net.node_count();
    let chunks = run_streams(opts.n_samples, opts.seed, |rng, range| {
        let mut t = Tally::new(configs);
        let mut row = vec![0.0; k];
        for _ in range {
            t.drawn += 1;
            let mut log_w = 0.0;
            let mut ok = true;
            for &v in &compiled.order {
                match conds[v] {
                    Some(Cond::State(s)) if weighting => {
                        row[v] = s as f64;
                        log_w += net.log_factor(v, &row);
                    }
                    Some(Cond::Real(x)) => {
                        row[v] = x;
                        log_w += net.log_factor(v, &row);
                    }
                    Some(Cond::State(s)) => {
                        row[v] = compiled.draw(v, rng, &row);
                        ok &= row[v] as usize == s;
                    }
                    Some(Cond::Interval(lo, hi)) => {
                        row[v] = compiled.draw(v, rng, &row);
                        ok &= Observation::contains(&lo, &hi, row[v]);
                    }
                    None => row[v] = compiled.draw(v, rng, &row),
                }
            }
            let w = log_w.exp();
            if ok && w > 0.0 {
                let c = config_of(&row, targets, cards);
                t.kept += 1;
                t.counts[c] += 1;
                t.weights[c] += w;
                t.weight_sq += w * w;
            }
        }
        t
    });
    let mut total = Tally::new(configs);
    for c in &chunks {
        total.merge(c);
    }
    if total.kept == 0 {
        return Err(InferError::NoSamplesKept { n_drawn: total.drawn });
    }
    Ok(total)
}

/// P(target configuration) for every configuration of `targets` given the
/// evidence, by summing the joint over all completions.
fn exact_table(net: &Network, conds: &[Option<Cond>], targets: &[usize], cards: &[usize]) -> Result<Vec<f64>, InferError> {
    let specs = net.specs();
    if let Some(s) = specs.iter().find(|s| !s.kind.is_discrete()) {
        return Err(InferError::ContinuousNodePresent(s.id.to_string()));
    }
    if let Some(v) = conds.iter().position(|c| matches!(c, Some(Cond::Interval(..)))) {
        return Err(InferError::IntervalEvidence(specs[v].id.to_string()));
    }
    let space = state_space(net);
    if space > EXACT_LIMIT {
        return Err(InferError::StateSpaceTooLarge(space));
    }
    // Evidence nodes are pinned, the rest enumerated.
    let free: Vec<usize> = (0..specs.len()).filter(|&v| conds[v].is_none()).collect();
    let free_cards: Vec<usize> = free.iter().map(|&v| specs[v].kind.cardinality().unwrap_or(1)).collect();
    let mut row = vec![0.0; specs.len()];
    for (v, c) in conds.iter().enumerate() {
        if let Some(Cond::State(s)) = c {
            row[v] = *s as f64;
        }
    }
    let mut mass = vec![0.0; config_count(cards)];
    for c in 0..config_count(&free_cards) {
        for (&v, s) in free.iter().zip(config_states(c, &free_cards)) {
            row[v] = s as f64;
        }
        let p = net.log_density_dense(&row).exp();
        mass[config_of(&row, targets, cards)] += p;
    }
    let z: f64 = mass.iter().sum();
    if z <= 0.0 {
        return Err(InferError::ZeroProbabilityEvidence);
    }
    Ok(mass.into_iter().map(|m| m / z).collect())
}

fn target_config(net: &Network, target: &Assignment) -> Result<(Vec<NodeId>, Vec<usize>), InferError> {
    let mut names = Vec::new();
    let mut states = Vec::new();
    for (n, val) in &target.0 {
        let Value::State(s) = val else {
            return Err(InferError::InvalidTarget(format!("`{n}` must be given a state")));
        };
        let spec = net.spec(n.as_str()).map_err(|_| InferError::InvalidTarget(format!("unknown node `{n}`")))?;
        if !spec.kind.is_discrete() {
            return Err(InferError::InvalidTarget(format!("`{n}` is continuous")));
        }
        states.push(
            net.state_index(n.as_str(), s)
                .map_err(|_| InferError::InvalidTarget(format!("`{n}` has no state `{s}`")))?,
        );
        names.push(n.clone());
    }
    Ok((names, states))
}

/// P(target | evidence) by enumeration over an all-discrete network with
/// point evidence.
pub fn exact_enumeration(net: &Network, target: &Assignment, evidence: &Evidence) -> Result<f64, InferError> {
    let conds = compile_evidence(net, evidence)?;
    let (names, states) = target_config(net, target)?;
    let refs: Vec<&str> = names.iter().map(NodeId::as_str).collect();
    let (idx, cards) = resolve_targets(net, &refs, &conds)?;
    let table = exact_table(net, &conds, &idx, &cards)?;
    Ok(table[crate::model::config_index(&states, &cards).expect("states checked")])
}

/// P(target | evidence) with the configured method.
pub fn query_prob(net: &Network, target: &Assignment, evidence: &Evidence, opts: &QueryOptions) -> Result<QueryResult, InferError> {
    let (names, states) = target_config(net, target)?;
    let refs: Vec<&str> = names.iter().map(NodeId::as_str).collect();
    let table = joint_state_distribution(net, &refs, evidence, opts)?;
    let c = crate::model::config_index(&states, &table.cards).expect("states checked");
    Ok(QueryResult {
        estimate: table.rows[c].probability,
        std_error: table.rows[c].std_error,
        n_kept: table.n_kept,
        n_drawn: table.n_drawn,
        method: table.method,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointRow {
    pub states: Vec<String>,
    pub probability: f64,
    pub std_error: f64,
}

/// Joint distribution of several discrete targets given the evidence, all
/// rows estimated from one sample pool.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pub targets: Vec<NodeId>,
    /// One row per configuration, first target varying fastest.
    pub rows: Vec<JointRow>,
    pub n_kept: usize,
    pub n_drawn: usize,
    pub method: Method,
    cards: Vec<usize>,
    /// Unnormalized mass per row; counts for rejection, weights otherwise.
    mass: Vec<f64>,
    total: f64,
}

impl JointTable {
    /// P(node = state | evidence), summed over the pool before dividing, so it
    /// matches [`query_prob`] on the same pool bit for bit.
    pub fn marginal(&self, node: &str, state: &str) -> Result<f64, InferError> {
        let t = self
            .targets
            .iter()
            .position(|n| n.as_str() == node)
            .ok_or_else(|| InferError::InvalidTarget(format!("`{node}` is not in the table")))?;
        let s = self.rows.iter().position(|r| r.states[t] == state);
        let Some(s) = s.map(|i| config_states(i, &self.cards)[t]) else {
            return Err(InferError::InvalidTarget(format!("`{node}` has no state `{state}`")));
        };
        let keep: f64 = (0..self.rows.len())
            .filter(|&c| config_states(c, &self.cards)[t] == s)
            .map(|c| self.mass[c])
            .sum();
        Ok(keep / self.total)
    }

    pub fn probability_sum(&self) -> f64 {
        self.rows.iter().map(|r| r.probability).sum()
    }

    pub fn render(&self, evidence: &Evidence) -> String {
        let mut out = String::new();
        let given = if evidence.is_empty() { String::new() } else { format!(" | {evidence}") };
        let _ = writeln!(out, "P({}{given})", self.targets.iter().map(NodeId::as_str).collect::<Vec<_>>().join(", "));
        let header: Vec<String> = self.targets.iter().map(|t| t.to_string()).collect();
        let widths: Vec<usize> = header.iter().map(|h| h.chars().count().max(1)).collect();
        let cols = header.iter().zip(&widths).map(|(h, w)| format!("{h:<w$}")).collect::<Vec<_>>().join("  ");
        let exact = self.method == Method::Exact;
        let _ = writeln!(out, "  {cols}  | probability{}", if exact { "" } else { " | std error" });
        for r in &self.rows {
            let cells = r.states.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect::<Vec<_>>().join("  ");
            if exact {
                let _ = writeln!(out, "  {cells}  | {:.3}", r.probability);
            } else {
                let _ = writeln!(out, "  {cells}  | {:<11.3} | {:.3}", r.probability, r.std_error);
            }
        }
        let _ = write!(out, "  sum = {:.3}", self.probability_sum());
        if exact {
            out.push_str("  (exact)\n");
        } else {
            let _ = writeln!(out, "  (kept {} of {}, {})", self.n_kept, self.n_drawn, self.method);
        }
        out
    }
}

/// One row per state combination of `targets`.
pub fn joint_state_distribution(
    net: &Network,
    targets: &[&str],
    evidence: &Evidence,
    opts: &QueryOptions,
) -> Result<JointTable, InferError> {
    let conds = compile_evidence(net, evidence)?;
    let (idx, cards) = resolve_targets(net, targets, &conds)?;
    let method = resolve_method(net, &conds, opts.method);
    let labels = |c: usize| -> Vec<String> {
        config_states(c, &cards)
            .iter()
            .zip(&idx)
            .map(|(&s, &v)| net.specs()[v].kind.states()[s].clone())
            .collect()
    };
    let target_ids: Vec<NodeId> = idx.iter().map(|&v| net.specs()[v].id.clone()).collect();
    if method == Method::Exact {
        let probs = exact_table(net, &conds, &idx, &cards)?;
        return Ok(JointTable {
            targets: target_ids,
            rows: probs
                .iter()
                .enumerate()
                .map(|(c, &p)| JointRow { states: labels(c), probability: p, std_error: 0.0 })
                .collect(),
            n_kept: 0,
            n_drawn: 0,
            method,
            cards,
            total: 1.0,
            mass: probs,
        });
    }
    let tally = sample_tally(net, &conds, &idx, &cards, method, opts)?;
    let (mass, total, n_eff) = if method == Method::Rejection {
        let mass: Vec<f64> = tally.counts.iter().map(|&c| c as f64).collect();
        (mass, tally.kept as f64, tally.kept as f64)
    } else {
        let total: f64 = tally.weights.iter().sum();
        if total <= 0.0 {
            return Err(InferError::NoSamplesKept { n_drawn: tally.drawn });
        }
        (tally.weights.clone(), total, total * total / tally.weight_sq)
    };
    let rows = mass
        .iter()
        .enumerate()
        .map(|(c, &m)| {
            let p = m / total;
            JointRow { states: labels(c), probability: p, std_error: (p * (1.0 - p) / n_eff).sqrt() }
        })
        .collect();
    Ok(JointTable {
        targets: target_ids,
        rows,
        n_kept: tally.kept,
        n_drawn: tally.drawn,
        method,
        cards,
        mass,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Dag;
    use crate::model::{CategoricalCpt, ClgCpd, ClgRow, Cpd, VariableSpec};

    fn copy_chain() -> Network {
        Network::new(
            Dag::from_edges(["A", "B"], [("A", "B")]).unwrap(),
            vec![VariableSpec::binary("A"), VariableSpec::binary("B")],
            vec![
                Cpd::Categorical(CategoricalCpt::marginal(vec![0.3, 0.7])),
                Cpd::Categorical(CategoricalCpt {
                    parents: vec!["A".into()],
                    parent_cards: vec![2],
                    probs: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
                }),
            ],
        )
        .unwrap()
    }

    fn hybrid() -> Network {
        Network::new(
            Dag::from_edges(["D", "X"], [("D", "X")]).unwrap(),
            vec![VariableSpec::binary("D"), VariableSpec::continuous("X")],
            vec![
                Cpd::Categorical(CategoricalCpt::marginal(vec![0.5, 0.5])),
                Cpd::Clg(ClgCpd {
                    discrete_parents: vec!["D".into()],
                    discrete_cards: vec![2],
                    continuous_parents: vec![],
                    rows: vec![ClgRow::new(0.0, vec![], 1.0), ClgRow::new(2.0, vec![], 1.0)],
                }),
            ],
        )
        .unwrap()
    }

    #[test]
    fn deterministic_copy() {
        let net = copy_chain();
        let p = exact_enumeration(&net, &Assignment::new().with_state("A", "1"), &Evidence::new().state("B", "1")).unwrap();
        assert_eq!(p, 1.0);
        let m = exact_enumeration(&net, &Assignment::new().with_state("A", "1"), &Evidence::new()).unwrap();
        assert!((m - 0.7).abs() < 1e-15);
        let t = joint_state_distribution(&net, &["A"], &Evidence::new(), &QueryOptions::default()).unwrap();
        assert_eq!(t.method, Method::Exact);
        assert!((t.rows[0].probability - 0.3).abs() < 1e-15);
    }

    #[test]
    fn exact_errors() {
        let net = copy_chain();
        let zero = Network::new(
            net.dag().clone(),
            net.specs().to_vec(),
            vec![Cpd::Categorical(CategoricalCpt::marginal(vec![1.0, 0.0])), net.cpds()[1].clone()],
        )
        .unwrap();
        let r = exact_enumeration(&zero, &Assignment::new().with_state("A", "1"), &Evidence::new().state("B", "1"));
        assert_eq!(r, Err(InferError::ZeroProbabilityEvidence));
        let r = exact_enumeration(&hybrid(), &Assignment::new().with_state("D", "1"), &Evidence::new());
        assert!(matches!(r, Err(InferError::ContinuousNodePresent(n)) if n == "X"));
        let r = exact_enumeration(&net, &Assignment::new().with_state("A", "1"), &Evidence::new().state("A", "1"));
        assert!(matches!(r, Err(InferError::InvalidTarget(_))));
    }

    #[test]
    fn rejection_and_weighting_on_hybrid() {
        let net = hybrid();
        let opts = QueryOptions { n_samples: 50_000, seed: 3, ..Default::default() };
        let target = Assignment::new().with_state("D", "1");
        // P(D=1 | X>1) = Φ(1) / (Φ(1) + 1 − Φ(1)) with Φ(1) = 0.841345
        let r = query_prob(&net, &target, &Evidence::new().above("X", 1.0), &opts).unwrap();
        assert_eq!(r.method, Method::Rejection);
        assert!((r.estimate - 0.841345 / (0.841345 + 0.158655)).abs() < 4.0 * r.std_error);
        // P(D=1 | X=1) = 1/2 by symmetry of the two densities around 1
        let w = query_prob(&net, &target, &Evidence::new().real("X", 1.0), &opts).unwrap();
        assert_eq!(w.method, Method::LikelihoodWeighting);
        assert!((w.estimate - 0.5).abs() < 4.0 * w.std_error);
        let bad = QueryOptions { method: Method::Rejection, ..opts };
        assert!(matches!(
            query_prob(&net, &target, &Evidence::new().real("X", 1.0), &bad),
            Err(InferError::PointEvidenceNeedsWeighting(_))
        ));
    }

    #[test]
    fn improbable_evidence_keeps_nothing() {
        let opts = QueryOptions { n_samples: 1000, seed: 1, ..Default::default() };
        let r = query_prob(&hybrid(), &Assignment::new().with_state("D", "1"), &Evidence::new().above("X", 50.0), &opts);
        assert_eq!(r, Err(InferError::NoSamplesKept { n_drawn: 1000 }));
    }

    #[test]
    fn evidence_grammar() {
        let net = hybrid();
        let ev = parse_evidence("X>1.5, D=0", &net).unwrap();
        assert_eq!(ev, Evidence::new().above("X", 1.5).state("D", "0"));
        let ev = parse_evidence("X in [0,2)", &net).unwrap();
        assert_eq!(ev, Evidence::new().interval("X", Bound::Included(0.0), Bound::Excluded(2.0)));
        assert_eq!(parse_evidence("X=0.25", &net).unwrap(), Evidence::new().real("X", 0.25));
        assert_eq!(parse_evidence("X<=3", &net).unwrap().to_string(), "X<=3");
        assert!(parse_evidence("D>1", &net).is_err());
        assert!(parse_evidence("X>abc", &net).is_err());
        assert!(parse_evidence("Q=1", &net).is_err());
        assert!(parse_evidence("X", &net).is_err());
        assert_eq!(parse_target("A=1, B=0").unwrap(), Assignment::new().with_state("A", "1").with_state("B", "0"));
        assert!(parse_target("A").is_err());
    }

    #[test]
    fn interval_order_is_checked() {
        let net = hybrid();
        let ev = Evidence::new().interval("X", Bound::Included(2.0), Bound::Included(1.0));
        let r = query_prob(&net, &Assignment::new().with_state("D", "0"), &ev, &QueryOptions::default());
        assert!(matches!(r, Err(InferError::InvalidEvidence(_))));
    }

    #[test]
    fn render_formats() {
        let net = hybrid();
        let opts = QueryOptions { n_samples: 10_000, seed: 9, ..Default::default() };
        let ev = Evidence::new().above("X", 1.0);
        let t = joint_state_distribution(&net, &["D"], &ev, &opts).unwrap();
        let text = t.render(&ev);
        assert!(text.starts_with("P(D | X>1)\n"), "{text}");
        assert!(text.contains("sum = 1.000"), "{text}");
        let r = query_prob(&net, &Assignment::new().with_state("D", "1"), &ev, &opts).unwrap();
        assert!(r.render("D=1", &ev).starts_with("P(D=1 | X>1) = 0."));
        assert_eq!(t.marginal("D", "1").unwrap(), r.estimate);
    }
}
