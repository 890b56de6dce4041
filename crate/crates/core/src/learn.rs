//! Score-based structure learning.
//!
//! Greedy hill climbing over DAGs with the BIC score. Each step evaluates every
//! valid single-edge addition, deletion and reversal, re-scoring only the
//! families a move touches, and applies the best strictly improving move.
//! Optional random restarts perturb the best graph found so far and climb
//! again.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::data::Dataset;
use crate::fit::{score_family_idx, FitError};
use crate::graph::{Dag, GraphError, NodeId};
use crate::model::VariableSpec;

/// Score gains at or below this are treated as no improvement.
pub const MIN_IMPROVEMENT: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("invalid whitelist: {0}")]
    InvalidWhitelist(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("graphs have different node sets")]
    NodeSetMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MoveKind {
    Add,
    Delete,
    Reverse,
}

impl fmt::Display for MoveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MoveKind::Add => "add",
            MoveKind::Delete => "delete",
            MoveKind::Reverse => "reverse",
        })
    }
}

/// A single-edge change; `from -> to` names the edge before the move.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Move {
    pub op: MoveKind,
    pub from: NodeId,
    pub to: NodeId,
}

impl fmt::Display for Move {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} -> {}", self.op, self.from, self.to)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
struct IdxMove {
    op: MoveKind,
    from: usize,
    to: usize,
}

/// Score delta, move, and the per-node scores it would install.
type Candidate = (f64, IdxMove, Vec<(usize, f64)>);

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    /// Upper bound on applied moves per climb.
    pub max_iterations: usize,
    pub restarts: usize,
    /// Random valid moves applied before each restart's climb.
    pub perturbation_size: usize,
    pub seed: u64,
    /// Edges forced present.
    pub whitelist: Vec<(NodeId, NodeId)>,
    /// Edges that may never be added.
    pub blacklist: Vec<(NodeId, NodeId)>,
}

impl Default for LearnConfig {
    fn default() -> Self {
        LearnConfig {
            max_iterations: 10_000,
            restarts: 0,
            perturbation_size: 3,
            seed: 0,
            whitelist: Vec::new(),
            blacklist: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub iteration: usize,
    pub mv: Move,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnResult {
    pub dag: Dag,
    pub score: f64,
    /// Score of the graph the winning climb started from.
    pub start_score: f64,
    /// Steps of the winning climb; scores strictly increase.
    pub trace: Vec<TraceStep>,
    /// 0 for the initial climb, `r` for the r-th restart.
    pub restart: usize,
}

impl LearnResult {
    /// Tab-separated trace with full-precision scores.
    pub fn trace_text(&self) -> String {
        let mut out = String::from("iteration\tmove\tfrom\tto\tscore\n");
        let _ = writeln!(out, "0\tstart\t\t\t{:?}", self.start_score);
        for s in &self.trace {
            let _ = writeln!(out, "{}\t{}\t{}\t{}\t{:?}", s.iteration, s.mv.op, s.mv.from, s.mv.to, s.score);
        }
        let _ = writeln!(out, "# restart {} final score {:?}", self.restart, self.score);
        out
    }
}

struct Constraints {
    discrete: Vec<bool>,
    white: HashSet<(usize, usize)>,
    black: HashSet<(usize, usize)>,
}

impl Constraints {
    fn new(dag: &Dag, specs: &[VariableSpec], config: &LearnConfig) -> Result<Self, LearnError> {
        if specs.len() != dag.node_count() || specs.iter().zip(dag.nodes()).any(|(s, n)| &s.id != n) {
            return Err(LearnError::InvalidConfig("variable specs do not match the graph nodes".into()));
        }
        let resolve = |edges: &[(NodeId, NodeId)]| -> Result<HashSet<(usize, usize)>, LearnError> {
            edges
                .iter()
                .map(|(a, b)| Ok((dag.require(a.as_str())?, dag.require(b.as_str())?)))
                .collect()
        };
        let white = resolve(&config.whitelist)?;
        let black = resolve(&config.blacklist)?;
        if let Some((a, b)) = white.intersection(&black).next() {
            return Err(LearnError::InvalidConfig(format!(
                "{} -> {} is both whitelisted and blacklisted",
                dag.node(*a),
                dag.node(*b)
            )));
        }
        Ok(Constraints { discrete: specs.iter().map(|s| s.kind.is_discrete()).collect(), white, black })
    }

    fn clg_ok(&self, from: usize, to: usize) -> bool {
        !(self.discrete[to] && !self.discrete[from])
    }
}

fn enumerate_idx(dag: &Dag, c: &Constraints) -> Vec<IdxMove> {
    let n = dag.node_count();
    let mut moves = Vec::new();
    let mut scratch = dag.clone();
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            if dag.has_edge_idx(u, v) {
                if c.white.contains(&(u, v)) {
                    continue;
                }
                moves.push(IdxMove { op: MoveKind::Delete, from: u, to: v });
                if !c.black.contains(&(v, u)) && c.clg_ok(v, u) {
                    scratch.delete_edge(u, v).expect("edge present");
                    if !scratch.has_path(u, v) {
                        moves.push(IdxMove { op: MoveKind::Reverse, from: u, to: v });
                    }
                    scratch.insert_edge(u, v).expect("restoring a removed edge");
                }
            } else if !dag.has_edge_idx(v, u)
                && !c.black.contains(&(u, v))
                && c.clg_ok(u, v)
                && !dag.has_path(v, u)
            {
                moves.push(IdxMove { op: MoveKind::Add, from: u, to: v });
            }
        }
    }
    moves.sort();
    moves
}

/// Every valid single-edge move from `dag`, ordered by (kind, from, to) with
/// nodes compared by insertion order.
///
/// A move is valid when the result is acyclic, no discrete node gains a
/// continuous parent, no whitelisted edge is deleted or reversed and no
/// blacklisted edge is created.
pub fn enumerate_moves(dag: &Dag, specs: &[VariableSpec], config: &LearnConfig) -> Result<Vec<Move>, LearnError> {
    let c = Constraints::new(dag, specs, config)?;
    Ok(enumerate_idx(dag, &c)
        .into_iter()
        .map(|m| Move { op: m.op, from: dag.node(m.from).clone(), to: dag.node(m.to).clone() })
        .collect())
}

pub fn apply_move(dag: &Dag, mv: &Move) -> Result<Dag, LearnError> {
    let (f, t) = (mv.from.as_str(), mv.to.as_str());
    Ok(match mv.op {
        MoveKind::Add => dag.add_edge(f, t)?,
        MoveKind::Delete => dag.remove_edge(f, t)?,
        MoveKind::Reverse => dag.reverse_edge(f, t)?,
    })
}

fn apply_idx(dag: &mut Dag, m: IdxMove) {
    match m.op {
        MoveKind::Add => dag.insert_edge(m.from, m.to),
        MoveKind::Delete => dag.delete_edge(m.from, m.to),
        MoveKind::Reverse => dag.delete_edge(m.from, m.to).and_then(|_| dag.insert_edge(m.to, m.from)),
    }
    .expect("enumerated moves are valid");
}

/// Memoized family BIC terms. Unfittable families score −∞.
struct ScoreCache<'a> {
    data: &'a Dataset,
    scores: HashMap<(usize, Vec<usize>), f64>,
}

impl<'a> ScoreCache<'a> {
    fn key(v: usize, parents: &[usize]) -> (usize, Vec<usize>) {
        let mut p = parents.to_vec();
        p.sort_unstable();
        (v, p)
    }

    fn compute(data: &Dataset, key: &(usize, Vec<usize>)) -> Result<f64, FitError> {
        match score_family_idx(data, key.0, &key.1) {
            Ok(s) => Ok(s.bic),
            Err(FitError::InsufficientRows { .. } | FitError::SingularDesign { .. } | FitError::EmptyDataset(_)) => {
                Ok(f64::NEG_INFINITY)
            }
            Err(e) => Err(e),
        }
    }

    /// Scores all keys not yet cached, in parallel.
    fn fill(&mut self, keys: Vec<(usize, Vec<usize>)>) -> Result<(), FitError> {
        let missing: Vec<_> = keys
            .into_iter()
            .filter(|k| !self.scores.contains_key(k))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let data = self.data;
        let scored: Vec<f64> = missing.par_iter().map(|k| Self::compute(data, k)).collect::<Result<_, _>>()?;
        self.scores.extend(missing.into_iter().zip(scored));
        Ok(())
    }

    fn get(&mut self, v: usize, parents: &[usize]) -> Result<f64, FitError> {
        let key = Self::key(v, parents);
        if let Some(&s) = self.scores.get(&key) {
            return Ok(s);
        }
        let s = Self::compute(self.data, &key)?;
        self.scores.insert(key, s);
        Ok(s)
    }
}

/// Family keys that change under `m`, with their new parent sets.
fn touched(dag: &Dag, m: IdxMove) -> Vec<(usize, Vec<usize>)> {
    let with = |v: usize, extra: usize| {
        let mut p = dag.parent_indices(v).to_vec();
        p.push(extra);
        ScoreCache::key(v, &p)
    };
    let without = |v: usize, gone: usize| {
        let p: Vec<usize> = dag.parent_indices(v).iter().copied().filter(|&x| x != gone).collect();
        ScoreCache::key(v, &p)
    };
    match m.op {
        MoveKind::Add => vec![with(m.to, m.from)],
        MoveKind::Delete => vec![without(m.to, m.from)],
        MoveKind::Reverse => vec![without(m.to, m.from), with(m.from, m.to)],
    }
}

fn total_score(dag: &Dag, node_scores: &[f64]) -> f64 {
    dag.topological_indices().into_iter().map(|v| node_scores[v]).sum()
}

struct Climb {
    dag: Dag,
    score: f64,
    start_score: f64,
    trace: Vec<TraceStep>,
}

fn climb(mut dag: Dag, c: &Constraints, cache: &mut ScoreCache, max_iterations: usize) -> Result<Climb, LearnError> {
    let n = dag.node_count();
    let mut node_scores: Vec<f64> =
        (0..n).map(|v| cache.get(v, dag.parent_indices(v))).collect::<Result<_, _>>()?;
    let start_score = total_score(&dag, &node_scores);
    let mut score = start_score;
    let mut trace = Vec::new();

    for iteration in 1..=max_iterations {
        let moves = enumerate_idx(&dag, c);
        cache.fill(moves.iter().flat_map(|&m| touched(&dag, m)).collect())?;
        let mut best: Option<Candidate> = None;
        for &m in &moves {
            let mut delta = 0.0;
            let mut updates = Vec::with_capacity(2);
            for (v, parents) in touched(&dag, m) {
                let s = cache.get(v, &parents)?;
                delta += s - node_scores[v];
                updates.push((v, s));
            }
            if delta > MIN_IMPROVEMENT && best.as_ref().is_none_or(|(d, _, _)| delta > *d) {
                best = Some((delta, m, updates));
            }
        }
        let Some((_, m, updates)) = best else { break };
        apply_idx(&mut dag, m);
        for (v, s) in updates {
            node_scores[v] = s;
        }
        let new_score = total_score(&dag, &node_scores);
        if new_score <= score {
            // rounding in the total can hide a tiny gain
            break;
        }
        score = new_score;
        trace.push(TraceStep {
            iteration,
            mv: Move { op: m.op, from: dag.node(m.from).clone(), to: dag.node(m.to).clone() },
            score,
        });
    }
    Ok(Climb { dag, score, start_score, trace })
}

/// Learns a DAG over the columns of `data` by BIC hill climbing.
///
/// Starts from the whitelist-only graph. Deterministic for a given
/// `(data, config)`; restarts draw their perturbations from ChaCha8 stream
/// `r` seeded with `config.seed`.
pub fn hill_climb(data: &Dataset, config: &LearnConfig) -> Result<LearnResult, LearnError> {
    let specs = data.specs();
    let mut start = Dag::with_nodes(specs.iter().map(|s| s.id.clone()))?;
    let c = Constraints::new(&start, &specs, config)?;
    let mut white: Vec<_> = c.white.iter().copied().collect();
    white.sort_unstable();
    for (u, v) in white {
        if !c.clg_ok(u, v) {
            return Err(LearnError::InvalidWhitelist(format!(
                "{} -> {} gives a discrete node a continuous parent",
                start.node(u),
                start.node(v)
            )));
        }
        start.insert_edge(u, v).map_err(|e| LearnError::InvalidWhitelist(e.to_string()))?;
    }

    let mut cache = ScoreCache { data, scores: HashMap::new() };
    let first = climb(start, &c, &mut cache, config.max_iterations)?;
    if !first.score.is_finite() {
        return Err(LearnError::InvalidConfig("the starting graph cannot be fitted to the data".into()));
    }
    let mut best = LearnResult {
        dag: first.dag,
        score: first.score,
        start_score: first.start_score,
        trace: first.trace,
        restart: 0,
    };

    for r in 1..=config.restarts {
        let mut rng = crate::model::stream_rng(config.seed, r as u64);
        let mut dag = best.dag.clone();
        for _ in 0..config.perturbation_size {
            let moves = enumerate_idx(&dag, &c);
            if moves.is_empty() {
                break;
            }
            let m = moves[rng.random_range(0..moves.len())];
            let fittable = touched(&dag, m)
                .into_iter()
                .map(|(v, p)| cache.get(v, &p))
                .collect::<Result<Vec<_>, _>>()?
                .iter()
                .all(|s| s.is_finite());
            if fittable {
                apply_idx(&mut dag, m);
            }
        }
        let run = climb(dag, &c, &mut cache, config.max_iterations)?;
        if run.score > best.score + MIN_IMPROVEMENT {
            best = LearnResult {
                dag: run.dag,
                score: run.score,
                start_score: run.start_score,
                trace: run.trace,
                restart: r,
            };
        }
    }
    Ok(best)
}

/// Skeleton and v-structure agreement between two graphs on the same nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct StructureReport {
    pub true_positives: usize,
    pub learned_edges: usize,
    pub reference_edges: usize,
    /// Share of learned adjacencies present in the reference (1 when none were learned).
    pub precision: f64,
    /// Share of reference adjacencies recovered (1 when the reference has none).
    pub recall: f64,
    /// Reference edges whose direction the learned graph matches.
    pub same_direction: usize,
    pub v_structures_matched: Vec<(NodeId, NodeId, NodeId)>,
    pub v_structures_missing: Vec<(NodeId, NodeId, NodeId)>,
    pub v_structures_extra: Vec<(NodeId, NodeId, NodeId)>,
}

impl StructureReport {
    pub fn render(&self) -> String {
        let fmt_v = |v: &[(NodeId, NodeId, NodeId)]| {
            v.iter().map(|(a, c, b)| format!("{a} -> {c} <- {b}")).collect::<Vec<_>>().join("; ")
        };
        format!(
            "skeleton: {} of {} reference adjacencies recovered, {} learned (precision {:.3}, recall {:.3})\n\
             directions matched: {}\n\
             v-structures matched: [{}]\nv-structures missing: [{}]\nv-structures extra: [{}]\n",
            self.true_positives,
            self.reference_edges,
            self.learned_edges,
            self.precision,
            self.recall,
            self.same_direction,
            fmt_v(&self.v_structures_matched),
            fmt_v(&self.v_structures_missing),
            fmt_v(&self.v_structures_extra),
        )
    }
}

pub fn compare_structures(learned: &Dag, reference: &Dag) -> Result<StructureReport, LearnError> {
    let a: BTreeSet<&NodeId> = learned.nodes().iter().collect();
    let b: BTreeSet<&NodeId> = reference.nodes().iter().collect();
    if a != b {
        return Err(LearnError::NodeSetMismatch);
    }
    let ls = learned.skeleton();
    let rs = reference.skeleton();
    let tp = ls.intersection(&rs).count();
    let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    let same_direction = reference.edges().iter().filter(|(u, v)| learned.has_edge(u.as_str(), v.as_str())).count();
    let lv = learned.v_structures();
    let rv = reference.v_structures();
    Ok(StructureReport {
        true_positives: tp,
        learned_edges: ls.len(),
        reference_edges: rs.len(),
        precision: ratio(tp, ls.len()),
        recall: ratio(tp, rs.len()),
        same_direction,
        v_structures_matched: lv.intersection(&rv).cloned().collect(),
        v_structures_missing: rv.difference(&lv).cloned().collect(),
        v_structures_extra: lv.difference(&rv).cloned().collect(),
    })
}
