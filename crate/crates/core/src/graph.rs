//! Directed acyclic graphs over named random variables.
//!
//! A [`Dag`] is a value: every mutating operation returns a new graph and
//! leaves the receiver untouched. Acyclicity is checked when an edge is
//! inserted, so any `Dag` that exists is valid.
//!
//! Node order is insertion order and is used to break every tie (topological
//! order, parent lists, move enumeration), which keeps downstream sampling and
//! learning reproducible.

use std::borrow::Borrow;
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::fmt;

use thiserror::Error;

/// Name of a random variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Self {
        NodeId(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` already exists")]
    DuplicateNode(String),
    #[error("node names must be non-empty")]
    EmptyName,
    #[error("edge {0} -> {1} already exists")]
    DuplicateEdge(String, String),
    #[error("edge {0} -> {1} does not exist")]
    MissingEdge(String, String),
    #[error("self-edge on `{0}`")]
    SelfEdge(String),
    #[error("edge {from} -> {to} would create a directed cycle")]
    Cycle { from: String, to: String },
    #[error("node `{0}` appears in more than one of the X, Y, Z sets")]
    OverlappingSets(String),
}

/// Directed acyclic graph with insertion-ordered nodes.
#[derive(Debug, Clone, Default)]
pub struct Dag {
    nodes: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    // Adjacency lists kept sorted by node index.
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.parents == other.parents
    }
}

impl Eq for Dag {}

impl Dag {
    pub fn new() -> Self {
        Self::default()
    }

    /// Edgeless graph over `names`, in the given order.
    pub fn with_nodes<I, S>(names: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: Into<NodeId>,
    {
        let mut dag = Dag::new();
        for name in names {
            dag.insert_node(name.into())?;
        }
        Ok(dag)
    }

    /// Builds a graph from a node list and an edge list, checking every invariant.
    pub fn from_edges<I, S, E, A, B>(names: I, edges: E) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = S>,
        S: Into<NodeId>,
        E: IntoIterator<Item = (A, B)>,
        A: AsRef<str>,
        B: AsRef<str>,
    {
        let mut dag = Dag::with_nodes(names)?;
        for (from, to) in edges {
            let (u, v) = (dag.require(from.as_ref())?, dag.require(to.as_ref())?);
            dag.insert_edge(u, v)?;
        }
        Ok(dag)
    }

    pub fn add_node(&self, name: impl Into<NodeId>) -> Result<Dag, GraphError> {
        let mut next = self.clone();
        next.insert_node(name.into())?;
        Ok(next)
    }

    /// Returns a copy of the graph with `from -> to` added.
    pub fn add_edge(&self, from: &str, to: &str) -> Result<Dag, GraphError> {
        let (u, v) = (self.require(from)?, self.require(to)?);
        let mut next = self.clone();
        next.insert_edge(u, v)?;
        Ok(next)
    }

    pub fn remove_edge(&self, from: &str, to: &str) -> Result<Dag, GraphError> {
        let (u, v) = (self.require(from)?, self.require(to)?);
        let mut next = self.clone();
        next.delete_edge(u, v)?;
        Ok(next)
    }

    /// Returns a copy with `from -> to` replaced by `to -> from`.
    pub fn reverse_edge(&self, from: &str, to: &str) -> Result<Dag, GraphError> {
        let (u, v) = (self.require(from)?, self.require(to)?);
        let mut next = self.clone();
        next.delete_edge(u, v)?;
        next.insert_edge(v, u)?;
        Ok(next)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn node(&self, idx: usize) -> &NodeId {
        &self.nodes[idx]
    }

    /// Edges ordered by (parent index, child index).
    pub fn edges(&self) -> Vec<(NodeId, NodeId)> {
        self.edge_indices()
            .into_iter()
            .map(|(u, v)| (self.nodes[u].clone(), self.nodes[v].clone()))
            .collect()
    }

    pub fn has_edge(&self, from: &str, to: &str) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(u), Some(v)) => self.has_edge_idx(u, v),
            _ => false,
        }
    }

    pub fn parents(&self, node: &str) -> Result<Vec<NodeId>, GraphError> {
        let v = self.require(node)?;
        Ok(self.parents[v].iter().map(|&u| self.nodes[u].clone()).collect())
    }

    pub fn children(&self, node: &str) -> Result<Vec<NodeId>, GraphError> {
        let v = self.require(node)?;
        Ok(self.children[v].iter().map(|&w| self.nodes[w].clone()).collect())
    }

    /// The node together with its parents, in index order.
    pub fn family(&self, node: &str) -> Result<Vec<NodeId>, GraphError> {
        let v = self.require(node)?;
        let mut fam = self.parents[v].clone();
        fam.push(v);
        fam.sort_unstable();
        Ok(fam.into_iter().map(|u| self.nodes[u].clone()).collect())
    }

    /// Parents first; ties go to the earliest inserted node.
    pub fn topological_order(&self) -> Vec<NodeId> {
        self.topological_indices()
            .into_iter()
            .map(|i| self.nodes[i].clone())
            .collect()
    }

    /// True iff every trail between `x` and `y` is blocked by `z`.
    ///
    /// Uses the reachable-set (ball passing) traversal over (node, direction)
    /// states, with the ancestors of `z` deciding which colliders are open.
    pub fn d_separated(&self, x: &[&str], y: &[&str], z: &[&str]) -> Result<bool, GraphError> {
        let resolve = |set: &[&str]| -> Result<Vec<usize>, GraphError> {
            set.iter().map(|n| self.require(n)).collect()
        };
        let (xs, ys, zs) = (resolve(x)?, resolve(y)?, resolve(z)?);
        let mut seen = vec![0u8; self.nodes.len()];
        for (tag, set) in [(1u8, &xs), (2, &ys), (4, &zs)] {
            for &i in set {
                if seen[i] & !tag != 0 {
                    return Err(GraphError::OverlappingSets(self.nodes[i].to_string()));
                }
                seen[i] |= tag;
            }
        }
        let reach = self.reachable_given(&xs, &zs);
        Ok(ys.iter().all(|&v| !reach[v]))
    }

    /// Unordered adjacent pairs, each stored with the lexicographically smaller name first.
    pub fn skeleton(&self) -> BTreeSet<(NodeId, NodeId)> {
        self.edges()
            .into_iter()
            .map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
            .collect()
    }

    /// Colliders `a -> c <- b` with `a`, `b` non-adjacent, as `(a, c, b)` with `a < b` by name.
    pub fn v_structures(&self) -> BTreeSet<(NodeId, NodeId, NodeId)> {
        let mut out = BTreeSet::new();
        for (c, pa) in self.parents.iter().enumerate() {
            for (i, &a) in pa.iter().enumerate() {
                for &b in &pa[i + 1..] {
                    if self.has_edge_idx(a, b) || self.has_edge_idx(b, a) {
                        continue;
                    }
                    let (na, nb) = (&self.nodes[a], &self.nodes[b]);
                    let (lo, hi) = if na <= nb { (na, nb) } else { (nb, na) };
                    out.insert((lo.clone(), self.nodes[c].clone(), hi.clone()));
                }
            }
        }
        out
    }

    /// Graphviz rendering, one `"from" -> "to";` line per edge.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph {\n");
        for node in &self.nodes {
            out.push_str(&format!("  \"{}\";\n", escape_dot(node.as_str())));
        }
        for (u, v) in self.edges() {
            out.push_str(&format!(
                "  \"{}\" -> \"{}\";\n",
                escape_dot(u.as_str()),
                escape_dot(v.as_str())
            ));
        }
        out.push_str("}\n");
        out
    }

    // ---- index-level API used by model, fit and learn ----

    pub(crate) fn require(&self, name: &str) -> Result<usize, GraphError> {
        self.index_of(name)
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    pub(crate) fn parent_indices(&self, v: usize) -> &[usize] {
        &self.parents[v]
    }

    pub(crate) fn edge_indices(&self) -> Vec<(usize, usize)> {
        self.parents
            .iter()
            .enumerate()
            .flat_map(|(v, ps)| ps.iter().map(move |&u| (u, v)))
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub(crate) fn has_edge_idx(&self, u: usize, v: usize) -> bool {
        self.parents[v].binary_search(&u).is_ok()
    }

    /// Is there a directed path `from ~> to` (length ≥ 0)?
    pub(crate) fn has_path(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = vec![false; self.nodes.len()];
        let mut stack = vec![from];
        seen[from] = true;
        while let Some(u) = stack.pop() {
            for &w in &self.children[u] {
                if w == to {
                    return true;
                }
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        false
    }

    pub(crate) fn topological_indices(&self) -> Vec<usize> {
        use std::cmp::Reverse;
        use std::collections::BinaryHeap;

        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut ready: BinaryHeap<Reverse<usize>> = indegree
            .iter()
            .enumerate()
            .filter(|(_, &d)| d == 0)
            .map(|(i, _)| Reverse(i))
            .collect();
        let mut order = Vec::with_capacity(self.nodes.len());
        while let Some(Reverse(u)) = ready.pop() {
            order.push(u);
            for &w in &self.children[u] {
                indegree[w] -= 1;
                if indegree[w] == 0 {
                    ready.push(Reverse(w));
                }
            }
        }
        debug_assert_eq!(order.len(), self.nodes.len(), "acyclicity invariant broken");
        order
    }

    pub(crate) fn insert_node(&mut self, name: NodeId) -> Result<usize, GraphError> {
        if name.as_str().is_empty() {
            return Err(GraphError::EmptyName);
        }
        if self.index.contains_key(&name) {
            return Err(GraphError::DuplicateNode(name.0));
        }
        let idx = self.nodes.len();
        self.index.insert(name.clone(), idx);
        self.nodes.push(name);
        self.parents.push(Vec::new());
        self.children.push(Vec::new());
        Ok(idx)
    }

    pub(crate) fn insert_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        if u == v {
            return Err(GraphError::SelfEdge(self.nodes[u].to_string()));
        }
        if self.has_edge_idx(u, v) {
            return Err(GraphError::DuplicateEdge(
                self.nodes[u].to_string(),
                self.nodes[v].to_string(),
            ));
        }
        if self.has_path(v, u) {
            return Err(GraphError::Cycle {
                from: self.nodes[u].to_string(),
                to: self.nodes[v].to_string(),
            });
        }
        insert_sorted(&mut self.parents[v], u);
        insert_sorted(&mut self.children[u], v);
        Ok(())
    }

    pub(crate) fn delete_edge(&mut self, u: usize, v: usize) -> Result<(), GraphError> {
        match self.parents[v].binary_search(&u) {
            Ok(pos) => {
                self.parents[v].remove(pos);
                let c = self.children[u].binary_search(&v).expect("adjacency out of sync");
                self.children[u].remove(c);
                Ok(())
            }
            Err(_) => Err(GraphError::MissingEdge(
                self.nodes[u].to_string(),
                self.nodes[v].to_string(),
            )),
        }
    }

    fn reachable_given(&self, sources: &[usize], observed: &[usize]) -> Vec<bool> {
        let n = self.nodes.len();
        let mut in_z = vec![false; n];
        for &z in observed {
            in_z[z] = true;
        }
        // Ancestors of Z (Z included): a collider is open iff it lies here.
        let mut anc = in_z.clone();
        let mut stack: Vec<usize> = observed.to_vec();
        while let Some(u) = stack.pop() {
            for &p in &self.parents[u] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }

        const UP: usize = 0; // arrived from a child
        const DOWN: usize = 1; // arrived from a parent
        let mut visited = vec![[false; 2]; n];
        let mut reach = vec![false; n];
        let mut queue: VecDeque<(usize, usize)> = sources.iter().map(|&x| (x, UP)).collect();
        while let Some((y, dir)) = queue.pop_front() {
            if visited[y][dir] {
                continue;
            }
            visited[y][dir] = true;
            if !in_z[y] {
                reach[y] = true;
            }
            if dir == UP && !in_z[y] {
                queue.extend(self.parents[y].iter().map(|&p| (p, UP)));
                queue.extend(self.children[y].iter().map(|&c| (c, DOWN)));
            } else if dir == DOWN {
                if !in_z[y] {
                    queue.extend(self.children[y].iter().map(|&c| (c, DOWN)));
                }
                if anc[y] {
                    queue.extend(self.parents[y].iter().map(|&p| (p, UP)));
                }
            }
        }
        reach
    }
}

fn insert_sorted(list: &mut Vec<usize>, x: usize) {
    if let Err(pos) = list.binary_search(&x) {
        list.insert(pos, x);
    }
}

fn escape_dot(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure1() -> Dag {
        Dag::from_edges(["Y1", "Y2", "Y3", "Y4"], [("Y1", "Y3"), ("Y2", "Y3"), ("Y3", "Y4")]).unwrap()
    }

    fn names(v: &[NodeId]) -> Vec<&str> {
        v.iter().map(NodeId::as_str).collect()
    }

    #[test]
    fn figure1_builds() {
        let g = figure1();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 3);
    }

    #[test]
    fn closing_the_chain_is_a_cycle() {
        let err = figure1().add_edge("Y4", "Y1").unwrap_err();
        assert!(matches!(err, GraphError::Cycle { .. }));
    }

    #[test]
    fn add_edge_keeps_receiver() {
        let g = Dag::with_nodes(["A", "B"]).unwrap();
        let h = g.add_edge("A", "B").unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(h.edge_count(), 1);
        assert_eq!(h.remove_edge("A", "B").unwrap(), g);
    }

    #[test]
    fn edge_errors() {
        let g = figure1();
        assert_eq!(
            g.add_edge("Y1", "Y3").unwrap_err(),
            GraphError::DuplicateEdge("Y1".into(), "Y3".into())
        );
        assert_eq!(g.add_edge("Y1", "Q").unwrap_err(), GraphError::UnknownNode("Q".into()));
        assert!(matches!(g.add_edge("Y1", "Y1"), Err(GraphError::SelfEdge(_))));
        assert!(matches!(g.remove_edge("Y1", "Y4"), Err(GraphError::MissingEdge(..))));
        assert!(matches!(Dag::with_nodes(["A", "A"]), Err(GraphError::DuplicateNode(_))));
        assert!(matches!(Dag::with_nodes([""]), Err(GraphError::EmptyName)));
    }

    #[test]
    fn topological_orders() {
        assert_eq!(names(&figure1().topological_order()), ["Y1", "Y2", "Y3", "Y4"]);
        let g = Dag::with_nodes(["C", "A", "B"]).unwrap();
        assert_eq!(names(&g.topological_order()), ["C", "A", "B"]);
        let chain = Dag::from_edges(["C", "B", "A"], [("A", "B"), ("B", "C")]).unwrap();
        assert_eq!(names(&chain.topological_order()), ["A", "B", "C"]);
    }

    #[test]
    fn relations() {
        let g = figure1();
        assert_eq!(names(&g.parents("Y3").unwrap()), ["Y1", "Y2"]);
        assert!(g.parents("Y1").unwrap().is_empty());
        assert_eq!(names(&g.family("Y4").unwrap()), ["Y3", "Y4"]);
        assert_eq!(names(&g.children("Y3").unwrap()), ["Y4"]);
        assert!(matches!(g.parents("nope"), Err(GraphError::UnknownNode(_))));
    }

    #[test]
    fn dsep_on_figure1() {
        let g = figure1();
        assert!(g.d_separated(&["Y4"], &["Y1", "Y2"], &["Y3"]).unwrap());
        assert!(g.d_separated(&["Y1"], &["Y2"], &[]).unwrap());
        assert!(!g.d_separated(&["Y1"], &["Y2"], &["Y3"]).unwrap());
        // a descendant of the collider opens it too
        assert!(!g.d_separated(&["Y1"], &["Y2"], &["Y4"]).unwrap());
        assert!(!g.d_separated(&["Y1"], &["Y4"], &[]).unwrap());
        assert_eq!(
            g.d_separated(&["Y1"], &["Y1"], &[]).unwrap_err(),
            GraphError::OverlappingSets("Y1".into())
        );
    }

    #[test]
    fn v_structures_and_dot() {
        let g = figure1();
        let vs = g.v_structures();
        assert_eq!(vs.len(), 1);
        assert!(vs.contains(&("Y1".into(), "Y3".into(), "Y2".into())));
        let dot = g.to_dot();
        assert!(dot.contains("\"Y1\" -> \"Y3\";"));
        assert_eq!(dot.matches("->").count(), 3);
    }

    #[test]
    fn reverse_edge_checks_cycles() {
        let g = Dag::from_edges(["A", "B", "C"], [("A", "B"), ("B", "C"), ("A", "C")]).unwrap();
        assert!(matches!(g.reverse_edge("A", "C"), Err(GraphError::Cycle { .. })));
        let h = g.reverse_edge("B", "C").unwrap();
        assert!(h.has_edge("C", "B"));
    }
}
