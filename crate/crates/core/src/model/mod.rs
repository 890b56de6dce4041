//! Conditional linear Gaussian networks.
//!
//! A [`Network`] pairs a [`Dag`] with one conditional distribution per node:
//! a [`CategoricalCpt`] for discrete nodes and a [`ClgCpd`] for continuous
//! ones. Discrete nodes may only have discrete parents. Continuous nodes are
//! normal with a mean that is linear in their continuous parents, and the
//! intercept, slopes and standard deviation are switched by the configuration
//! of their discrete parents.
//!
//! Parent configurations are enumerated with the first parent varying
//! fastest, so for parents `(ML, AF)` the rows are `00, 10, 01, 11`.

mod file;
mod sample;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::graph::{Dag, GraphError, NodeId};

pub use file::{dag_from_json, dag_to_json, load_dag, ModelFileError};
pub(crate) use sample::{run_streams, stream_rng, CompiledNetwork};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("specs do not line up with the graph nodes: {0}")]
    StructureMismatch(String),
    #[error("invalid network:\n{0}")]
    Invalid(ValidationReport),
    #[error("assignment is missing node `{0}`")]
    IncompleteAssignment(String),
    #[error("value for `{0}` does not match its variable kind")]
    TypeMismatch(String),
    #[error("`{node}` has no state `{state}`")]
    UnknownState { node: String, state: String },
    #[error("parent configuration {0:?} does not exist")]
    UnknownConfig(Vec<usize>),
    #[error("expected {expected} continuous parent values, got {got}")]
    ArityMismatch { expected: usize, got: usize },
    #[error("`{0}` is not a continuous node")]
    NotContinuous(String),
    #[error("`{0}` is not a continuous parent of `{1}`")]
    NotAContinuousParent(String, String),
    #[error("no fixed value given for continuous parent `{0}`")]
    MissingFixedValue(String),
    #[error("invalid variable `{0}`: {1}")]
    InvalidVariable(String, String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VariableKind {
    Discrete { states: Vec<String> },
    Continuous,
}

impl VariableKind {
    pub fn discrete<S: AsRef<str>>(states: &[S]) -> Self {
        VariableKind::Discrete { states: states.iter().map(|s| s.as_ref().to_string()).collect() }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, VariableKind::Discrete { .. })
    }

    pub fn cardinality(&self) -> Option<usize> {
        match self {
            VariableKind::Discrete { states } => Some(states.len()),
            VariableKind::Continuous => None,
        }
    }

    pub fn states(&self) -> &[String] {
        match self {
            VariableKind::Discrete { states } => states,
            VariableKind::Continuous => &[],
        }
    }

    pub(crate) fn check(&self) -> Result<(), String> {
        if let VariableKind::Discrete { states } = self {
            if states.len() < 2 {
                return Err("a discrete variable needs at least two states".into());
            }
            for (i, s) in states.iter().enumerate() {
                if states[..i].contains(s) {
                    return Err(format!("state `{s}` is listed twice"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub id: NodeId,
    pub kind: VariableKind,
}

impl VariableSpec {
    pub fn continuous(name: &str) -> Self {
        VariableSpec { id: name.into(), kind: VariableKind::Continuous }
    }

    pub fn discrete<S: AsRef<str>>(name: &str, states: &[S]) -> Self {
        VariableSpec { id: name.into(), kind: VariableKind::discrete(states) }
    }

    pub fn binary(name: &str) -> Self {
        Self::discrete(name, &["0", "1"])
    }
}

/// Index of a parent configuration; the first parent varies fastest.
pub fn config_index(states: &[usize], cards: &[usize]) -> Option<usize> {
    if states.len() != cards.len() {
        return None;
    }
    let mut idx = 0;
    let mut stride = 1;
    for (&s, &c) in states.iter().zip(cards) {
        if s >= c {
            return None;
        }
        idx += s * stride;
        stride *= c;
    }
    Some(idx)
}

/// Inverse of [`config_index`].
pub fn config_states(mut idx: usize, cards: &[usize]) -> Vec<usize> {
    cards
        .iter()
        .map(|&c| {
            let s = idx % c;
            idx /= c;
            s
        })
        .collect()
}

pub fn config_count(cards: &[usize]) -> usize {
    cards.iter().product()
}

/// Conditional probability table of a discrete node given discrete parents.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoricalCpt {
    pub parents: Vec<NodeId>,
    pub parent_cards: Vec<usize>,
    /// One probability vector per parent configuration.
    pub probs: Vec<Vec<f64>>,
}

impl CategoricalCpt {
    /// Parentless distribution.
    pub fn marginal(probs: Vec<f64>) -> Self {
        CategoricalCpt { parents: Vec::new(), parent_cards: Vec::new(), probs: vec![probs] }
    }

    pub fn prob(&self, state: usize, config: &[usize]) -> Result<f64, ModelError> {
        let row = config_index(config, &self.parent_cards)
            .ok_or_else(|| ModelError::UnknownConfig(config.to_vec()))?;
        self.probs[row]
            .get(state)
            .copied()
            .ok_or_else(|| ModelError::UnknownConfig(config.to_vec()))
    }
}

/// Linear-Gaussian parameters for one discrete-parent configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClgRow {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub sd: f64,
}

impl ClgRow {
    pub fn new(intercept: f64, coefficients: Vec<f64>, sd: f64) -> Self {
        ClgRow { intercept, coefficients, sd }
    }

    pub fn mean(&self, parent_values: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(parent_values)
                .map(|(b, x)| b * x)
                .sum::<f64>()
    }
}

/// Conditional linear Gaussian distribution of a continuous node.
#[derive(Debug, Clone, PartialEq)]
pub struct ClgCpd {
    pub discrete_parents: Vec<NodeId>,
    pub discrete_cards: Vec<usize>,
    pub continuous_parents: Vec<NodeId>,
    /// One row per discrete-parent configuration.
    pub rows: Vec<ClgRow>,
}

impl ClgCpd {
    /// Parameters for the given discrete configuration.
    pub fn row(&self, config: &[usize]) -> Result<&ClgRow, ModelError> {
        config_index(config, &self.discrete_cards)
            .and_then(|i| self.rows.get(i))
            .ok_or_else(|| ModelError::UnknownConfig(config.to_vec()))
    }

    /// μ = intercept + Σ coefficient · parent value, for the selected row.
    pub fn conditional_mean(&self, config: &[usize], parent_values: &[f64]) -> Result<f64, ModelError> {
        let row = self.row(config)?;
        if parent_values.len() != self.continuous_parents.len() {
            return Err(ModelError::ArityMismatch {
                expected: self.continuous_parents.len(),
                got: parent_values.len(),
            });
        }
        Ok(row.mean(parent_values))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cpd {
    Categorical(CategoricalCpt),
    Clg(ClgCpd),
}

impl Cpd {
    pub fn discrete_parents(&self) -> &[NodeId] {
        match self {
            Cpd::Categorical(c) => &c.parents,
            Cpd::Clg(c) => &c.discrete_parents,
        }
    }

    pub fn continuous_parents(&self) -> &[NodeId] {
        match self {
            Cpd::Categorical(_) => &[],
            Cpd::Clg(c) => &c.continuous_parents,
        }
    }

    pub fn as_clg(&self) -> Option<&ClgCpd> {
        match self {
            Cpd::Clg(c) => Some(c),
            Cpd::Categorical(_) => None,
        }
    }

    pub fn as_categorical(&self) -> Option<&CategoricalCpt> {
        match self {
            Cpd::Categorical(c) => Some(c),
            Cpd::Clg(_) => None,
        }
    }
}

/// A single violated invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    WrongCpdKind { node: String },
    ParentMismatch { node: String, expected: Vec<String>, found: Vec<String> },
    ContinuousParentOfDiscrete { node: String, parent: String },
    ParentKind { node: String, parent: String },
    CardinalityMismatch { node: String },
    RowCount { node: String, expected: usize, found: usize },
    RowLength { node: String, row: usize, expected: usize, found: usize },
    NegativeProbability { node: String, row: usize },
    RowSum { node: String, row: usize, sum: f64 },
    NonPositiveSd { node: String, row: usize, sd: f64 },
    NonFinite { node: String, row: usize },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::WrongCpdKind { node } => write!(f, "{node}: distribution kind does not match variable kind"),
            Issue::ParentMismatch { node, expected, found } => {
                write!(f, "{node}: distribution parents {found:?} differ from graph parents {expected:?}")
            }
            Issue::ContinuousParentOfDiscrete { node, parent } => {
                write!(f, "{node}: discrete node has continuous parent {parent}")
            }
            Issue::ParentKind { node, parent } => {
                write!(f, "{node}: parent {parent} is listed under the wrong kind")
            }
            Issue::CardinalityMismatch { node } => {
                write!(f, "{node}: parent cardinalities do not match the parent variables")
            }
            Issue::RowCount { node, expected, found } => {
                write!(f, "{node}: expected {expected} rows, found {found}")
            }
            Issue::RowLength { node, row, expected, found } => {
                write!(f, "{node}: row {row} has {found} entries, expected {expected}")
            }
            Issue::NegativeProbability { node, row } => write!(f, "{node}: row {row} has a negative probability"),
            Issue::RowSum { node, row, sum } => write!(f, "{node}: row {row} sums to {sum}"),
            Issue::NonPositiveSd { node, row, sd } => write!(f, "{node}: row {row} has sd {sd} <= 0"),
            Issue::NonFinite { node, row } => write!(f, "{node}: row {row} has a non-finite parameter"),
        }
    }
}

/// Every invariant a network violates; empty iff the network is valid.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in &self.issues {
            writeln!(f, "  - {i}")?;
        }
        Ok(())
    }
}

pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    State(String),
    Real(f64),
}

/// Values for some or all nodes, keyed by name.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Assignment(pub BTreeMap<NodeId, Value>);

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_state(mut self, node: &str, state: &str) -> Self {
        self.0.insert(node.into(), Value::State(state.to_string()));
        self
    }

    pub fn with_real(mut self, node: &str, x: f64) -> Self {
        self.0.insert(node.into(), Value::Real(x));
        self
    }

    pub fn get(&self, node: &str) -> Option<&Value> {
        self.0.get(node)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDensity {
    pub value: f64,
    /// Set when some discrete factor had probability zero (`value` is −∞).
    pub zero_probability: bool,
}

/// Resolved parent indices of one node, in distribution order.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ParentLayout {
    pub discrete: Vec<usize>,
    pub continuous: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    dag: Dag,
    specs: Vec<VariableSpec>,
    cpds: Vec<Cpd>,
    layout: Vec<ParentLayout>,
    /// Free-text metadata carried through the model file.
    pub notes: Vec<String>,
}

impl Network {
    /// Builds a network and rejects it unless [`Network::validate`] is clean.
    pub fn new(dag: Dag, specs: Vec<VariableSpec>, cpds: Vec<Cpd>) -> Result<Self, ModelError> {
        let net = Self::new_unchecked(dag, specs, cpds)?;
        let report = net.validate();
        if report.is_valid() {
            Ok(net)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    /// Builds a network checking only that specs and distributions line up
    /// with the graph nodes and name known parents. Use [`Network::validate`]
    /// before evaluating densities or sampling.
    pub fn new_unchecked(dag: Dag, specs: Vec<VariableSpec>, cpds: Vec<Cpd>) -> Result<Self, ModelError> {
        if specs.len() != dag.node_count() || cpds.len() != dag.node_count() {
            return Err(ModelError::StructureMismatch(format!(
                "{} nodes, {} specs, {} distributions",
                dag.node_count(),
                specs.len(),
                cpds.len()
            )));
        }
        for (node, spec) in dag.nodes().iter().zip(&specs) {
            if node != &spec.id {
                return Err(ModelError::StructureMismatch(format!(
                    "spec `{}` is in the position of node `{node}`",
                    spec.id
                )));
            }
            spec.kind
                .check()
                .map_err(|m| ModelError::InvalidVariable(spec.id.to_string(), m))?;
        }
        let layout = cpds
            .iter()
            .map(|cpd| -> Result<ParentLayout, ModelError> {
                let resolve = |names: &[NodeId]| -> Result<Vec<usize>, ModelError> {
                    names.iter().map(|n| Ok(dag.require(n.as_str())?)).collect()
                };
                Ok(ParentLayout {
                    discrete: resolve(cpd.discrete_parents())?,
                    continuous: resolve(cpd.continuous_parents())?,
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(Network { dag, specs, cpds, layout, notes: Vec::new() })
    }

    pub fn dag(&self) -> &Dag {
        &self.dag
    }

    pub fn specs(&self) -> &[VariableSpec] {
        &self.specs
    }

    pub fn cpds(&self) -> &[Cpd] {
        &self.cpds
    }

    pub fn node_count(&self) -> usize {
        self.specs.len()
    }

    pub fn spec(&self, node: &str) -> Result<&VariableSpec, ModelError> {
        Ok(&self.specs[self.dag.require(node)?])
    }

    pub fn cpd(&self, node: &str) -> Result<&Cpd, ModelError> {
        Ok(&self.cpds[self.dag.require(node)?])
    }

    pub fn index_of(&self, node: &str) -> Result<usize, ModelError> {
        Ok(self.dag.require(node)?)
    }

    pub(crate) fn layout(&self, v: usize) -> &ParentLayout {
        &self.layout[v]
    }

    pub fn is_all_discrete(&self) -> bool {
        self.specs.iter().all(|s| s.kind.is_discrete())
    }

    pub fn state_index(&self, node: &str, state: &str) -> Result<usize, ModelError> {
        let spec = self.spec(node)?;
        match &spec.kind {
            VariableKind::Discrete { states } => states.iter().position(|s| s == state).ok_or_else(|| {
                ModelError::UnknownState { node: node.to_string(), state: state.to_string() }
            }),
            VariableKind::Continuous => Err(ModelError::TypeMismatch(node.to_string())),
        }
    }

    /// Lists every violated invariant without stopping at the first.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        for (v, (spec, cpd)) in self.specs.iter().zip(&self.cpds).enumerate() {
            let node = spec.id.to_string();
            let layout = &self.layout[v];

            let mut expected: Vec<usize> = self.dag.parent_indices(v).to_vec();
            expected.sort_unstable();
            let mut found: Vec<usize> = layout.discrete.iter().chain(&layout.continuous).copied().collect();
            found.sort_unstable();
            if expected != found {
                let names = |ix: &[usize]| ix.iter().map(|&i| self.specs[i].id.to_string()).collect();
                issues.push(Issue::ParentMismatch { node: node.clone(), expected: names(&expected), found: names(&found) });
            }
            for &p in &layout.discrete {
                if !self.specs[p].kind.is_discrete() {
                    issues.push(Issue::ParentKind { node: node.clone(), parent: self.specs[p].id.to_string() });
                }
            }
            for &p in &layout.continuous {
                if self.specs[p].kind.is_discrete() {
                    issues.push(Issue::ParentKind { node: node.clone(), parent: self.specs[p].id.to_string() });
                }
            }
            if spec.kind.is_discrete() {
                for &p in self.dag.parent_indices(v) {
                    if !self.specs[p].kind.is_discrete() {
                        issues.push(Issue::ContinuousParentOfDiscrete {
                            node: node.clone(),
                            parent: self.specs[p].id.to_string(),
                        });
                    }
                }
            }
            let true_cards: Vec<Option<usize>> =
                layout.discrete.iter().map(|&p| self.specs[p].kind.cardinality()).collect();

            match (cpd, &spec.kind) {
                (Cpd::Categorical(cpt), VariableKind::Discrete { states }) => {
                    if true_cards.iter().copied().ne(cpt.parent_cards.iter().map(|&c| Some(c))) {
                        issues.push(Issue::CardinalityMismatch { node: node.clone() });
                    }
                    let rows = config_count(&cpt.parent_cards);
                    if cpt.probs.len() != rows {
                        issues.push(Issue::RowCount { node: node.clone(), expected: rows, found: cpt.probs.len() });
                    }
                    for (r, p) in cpt.probs.iter().enumerate() {
                        if p.len() != states.len() {
                            issues.push(Issue::RowLength { node: node.clone(), row: r, expected: states.len(), found: p.len() });
                        }
                        if p.iter().any(|x| !x.is_finite()) {
                            issues.push(Issue::NonFinite { node: node.clone(), row: r });
                            continue;
                        }
                        if p.iter().any(|&x| x < 0.0) {
                            issues.push(Issue::NegativeProbability { node: node.clone(), row: r });
                        }
                        let sum: f64 = p.iter().sum();
                        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                            issues.push(Issue::RowSum { node: node.clone(), row: r, sum });
                        }
                    }
                }
                (Cpd::Clg(clg), VariableKind::Continuous) => {
                    if true_cards.iter().copied().ne(clg.discrete_cards.iter().map(|&c| Some(c))) {
                        issues.push(Issue::CardinalityMismatch { node: node.clone() });
                    }
                    let rows = config_count(&clg.discrete_cards);
                    if clg.rows.len() != rows {
                        issues.push(Issue::RowCount { node: node.clone(), expected: rows, found: clg.rows.len() });
                    }
                    let arity = clg.continuous_parents.len();
                    for (r, row) in clg.rows.iter().enumerate() {
                        if row.coefficients.len() != arity {
                            issues.push(Issue::RowLength {
                                node: node.clone(),
                                row: r,
                                expected: arity,
                                found: row.coefficients.len(),
                            });
                        }
                        if !row.intercept.is_finite() || row.coefficients.iter().any(|b| !b.is_finite()) {
                            issues.push(Issue::NonFinite { node: node.clone(), row: r });
                        }
                        if row.sd.is_nan() || row.sd <= 0.0 || !row.sd.is_finite() {
                            issues.push(Issue::NonPositiveSd { node: node.clone(), row: r, sd: row.sd });
                        }
                    }
                }
                _ => issues.push(Issue::WrongCpdKind { node }),
            }
        }
        ValidationReport { issues }
    }

    /// Converts a complete assignment into the dense row layout used internally:
    /// discrete nodes carry their state index as `f64`.
    pub(crate) fn dense_row(&self, a: &Assignment) -> Result<Vec<f64>, ModelError> {
        for name in a.0.keys() {
            self.dag.require(name.as_str())?;
        }
        self.specs
            .iter()
            .map(|spec| {
                let name = spec.id.as_str();
                match (a.get(name), &spec.kind) {
                    (None, _) => Err(ModelError::IncompleteAssignment(name.to_string())),
                    (Some(Value::State(s)), VariableKind::Discrete { states }) => states
                        .iter()
                        .position(|x| x == s)
                        .map(|i| i as f64)
                        .ok_or_else(|| ModelError::UnknownState { node: name.to_string(), state: s.clone() }),
                    (Some(Value::Real(x)), VariableKind::Continuous) => Ok(*x),
                    _ => Err(ModelError::TypeMismatch(name.to_string())),
                }
            })
            .collect()
    }

    /// log f(a_v | a_pa(v)) for one node on a dense row.
    pub(crate) fn log_factor(&self, v: usize, row: &[f64]) -> f64 {
        let layout = &self.layout[v];
        let config: usize = {
            let mut idx = 0;
            let mut stride = 1;
            for &p in &layout.discrete {
                let card = self.specs[p].kind.cardinality().unwrap_or(1);
                idx += row[p] as usize * stride;
                stride *= card;
            }
            idx
        };
        match &self.cpds[v] {
            Cpd::Categorical(cpt) => cpt.probs[config][row[v] as usize].ln(),
            Cpd::Clg(clg) => {
                let r = &clg.rows[config];
                let mut mu = r.intercept;
                for (b, &p) in r.coefficients.iter().zip(&layout.continuous) {
                    mu += b * row[p];
                }
                normal_ln_pdf(row[v], mu, r.sd)
            }
        }
    }

    pub(crate) fn log_density_dense(&self, row: &[f64]) -> f64 {
        (0..self.specs.len()).map(|v| self.log_factor(v, row)).sum()
    }

    /// Σ_v log f(a_v | a_pa(v)) for a complete assignment.
    pub fn log_density(&self, a: &Assignment) -> Result<LogDensity, ModelError> {
        let row = self.dense_row(a)?;
        let value = self.log_density_dense(&row);
        Ok(LogDensity { value, zero_probability: value == f64::NEG_INFINITY })
    }

    /// The per-node terms of [`Network::log_density`], in node order.
    pub fn log_factors(&self, a: &Assignment) -> Result<Vec<(NodeId, f64)>, ModelError> {
        let row = self.dense_row(a)?;
        Ok(self
            .specs
            .iter()
            .enumerate()
            .map(|(v, s)| (s.id.clone(), self.log_factor(v, &row)))
            .collect())
    }

    /// Conditional means of `node` as `sweep_parent` moves over `grid`, one line
    /// per discrete-parent configuration. Other continuous parents are taken
    /// from `fixed`.
    pub fn conditional_mean_profile(
        &self,
        node: &str,
        sweep_parent: &str,
        grid: &[f64],
        fixed: &Assignment,
    ) -> Result<Vec<ProfileRow>, ModelError> {
        let v = self.dag.require(node)?;
        let clg = self.cpds[v].as_clg().ok_or_else(|| ModelError::NotContinuous(node.to_string()))?;
        let sweep = clg
            .continuous_parents
            .iter()
            .position(|p| p.as_str() == sweep_parent)
            .ok_or_else(|| ModelError::NotAContinuousParent(sweep_parent.to_string(), node.to_string()))?;
        let mut values = Vec::with_capacity(clg.continuous_parents.len());
        for (i, p) in clg.continuous_parents.iter().enumerate() {
            values.push(if i == sweep {
                0.0
            } else {
                match fixed.get(p.as_str()) {
                    Some(Value::Real(x)) => *x,
                    Some(_) => return Err(ModelError::TypeMismatch(p.to_string())),
                    None => return Err(ModelError::MissingFixedValue(p.to_string())),
                }
            });
        }
        let mut out = Vec::with_capacity(clg.rows.len() * grid.len());
        for c in 0..config_count(&clg.discrete_cards) {
            let states = config_states(c, &clg.discrete_cards);
            let labels: Vec<(NodeId, String)> = self.layout[v]
                .discrete
                .iter()
                .zip(&states)
                .map(|(&p, &s)| (self.specs[p].id.clone(), self.specs[p].kind.states()[s].clone()))
                .collect();
            for &x in grid {
                values[sweep] = x;
                out.push(ProfileRow {
                    config: labels.clone(),
                    x,
                    mean: clg.conditional_mean(&states, &values)?,
                });
            }
        }
        Ok(out)
    }

    /// Draws `n` complete rows ancestrally. Rows are generated in fixed-size
    /// streams, each with its own ChaCha8 stream id derived from `seed`, so the
    /// output does not depend on the number of worker threads.
    pub fn forward_sample(&self, n: usize, seed: u64) -> crate::data::Dataset {
        CompiledNetwork::new(self).sample_dataset(self, n, seed)
    }
}

/// One point on a conditional-mean line.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRow {
    pub config: Vec<(NodeId, String)>,
    pub x: f64,
    pub mean: f64,
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_7;

pub(crate) fn normal_ln_pdf(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    -0.5 * z * z - sd.ln() - LN_SQRT_2PI
}
