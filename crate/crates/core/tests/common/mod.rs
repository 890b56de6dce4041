//! Independent oracles shared by the integration tests: brute-force joint
//! tables for binary networks and exhaustive DAG enumeration.
#![allow(dead_code)]

use clgnet::model::{CategoricalCpt, Cpd};
use clgnet::{Dag, Network, VariableSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A binary network described by plain arrays: `p1[v][c]` is P(node v = 1)
/// for parent configuration `c`, where the first listed parent is the lowest bit.
#[derive(Debug, Clone)]
pub struct BinaryOracle {
    pub n: usize,
    pub parents: Vec<Vec<usize>>,
    pub p1: Vec<Vec<f64>>,
}

pub fn name(v: usize) -> String {
    format!("N{v}")
}

impl BinaryOracle {
    pub fn random(n: usize, edges: &[(usize, usize)], rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Self {
        let mut parents = vec![Vec::new(); n];
        for &(u, v) in edges {
            parents[v].push(u);
        }
        let p1 = parents.iter().map(|ps| (0..1usize << ps.len()).map(|_| rng.random_range(lo..hi)).collect()).collect();
        BinaryOracle { n, parents, p1 }
    }

    pub fn network(&self) -> Network {
        let names: Vec<String> = (0..self.n).map(name).collect();
        let edges: Vec<(String, String)> = self
            .parents
            .iter()
            .enumerate()
            .flat_map(|(v, ps)| ps.iter().map(move |&u| (name(u), name(v))))
            .collect();
        let dag = Dag::from_edges(names.clone(), edges).expect("oracle graphs are acyclic");
        let specs = names.iter().map(|n| VariableSpec::binary(n)).collect();
        let cpds = self
            .parents
            .iter()
            .zip(&self.p1)
            .map(|(ps, p1)| {
                Cpd::Categorical(CategoricalCpt {
                    parents: ps.iter().map(|&u| name(u).into()).collect(),
                    parent_cards: vec![2; ps.len()],
                    probs: p1.iter().map(|&p| vec![1.0 - p, p]).collect(),
                })
            })
            .collect();
        Network::new(dag, specs, cpds).expect("oracle network is valid")
    }

    /// P(x) for every joint state; bit v of the index is node v.
    pub fn joint(&self) -> Vec<f64> {
        (0..1usize << self.n)
            .map(|x| {
                (0..self.n)
                    .map(|v| {
                        let c = self.parents[v].iter().enumerate().map(|(i, &u)| ((x >> u) & 1) << i).sum::<usize>();
                        let p = self.p1[v][c];
                        if (x >> v) & 1 == 1 { p } else { 1.0 - p }
                    })
                    .product()
            })
            .collect()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// P(target bits | evidence bits) from a joint table; `(node, value)` pairs.
pub fn conditional(joint: &[f64], target: &[(usize, usize)], evidence: &[(usize, usize)]) -> f64 {
    let matches = |x: usize, pairs: &[(usize, usize)]| pairs.iter().all(|&(v, s)| (x >> v) & 1 == s);
    let (mut num, mut den) = (0.0, 0.0);
    for (x, &p) in joint.iter().enumerate() {
        if matches(x, evidence) {
            den += p;
            if matches(x, target) {
                num += p;
            }
        }
    }
    num / den
}

/// Marginal over the nodes whose bits are set in `mask`, keyed by the masked state.
pub fn marginal(joint: &[f64], mask: usize) -> Vec<f64> {
    let mut m = vec![0.0; joint.len()];
    for (x, &p) in joint.iter().enumerate() {
        m[x & mask] += p;
    }
    m
}

/// Largest violation of P(x,y,z) P(z) = P(x,z) P(y,z) over all states.
pub fn ci_violation(joint: &[f64], x: usize, y: usize, z: usize) -> f64 {
    let pxyz = marginal(joint, x | y | z);
    let pxz = marginal(joint, x | z);
    let pyz = marginal(joint, y | z);
    let pz = marginal(joint, z);
    (0..joint.len())
        .filter(|&s| s & !(x | y | z) == 0)
        .map(|s| (pxyz[s] * pz[s & z] - pxz[s & (x | z)] * pyz[s & (y | z)]).abs())
        .fold(0.0, f64::max)
}

fn acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut indeg = vec![0; n];
    for &(_, v) in edges {
        indeg[v] += 1;
    }
    let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(u) = stack.pop() {
        seen += 1;
        for &(a, b) in edges {
            if a == u {
                indeg[b] -= 1;
                if indeg[b] == 0 {
                    stack.push(b);
                }
            }
        }
    }
    seen == n
}

/// Every labelled DAG on `n` nodes, as edge lists.
pub fn all_dags(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut out = Vec::new();
    // each unordered pair is absent, forward or backward
    let total = 3usize.pow(pairs.len() as u32);
    for mut code in 0..total {
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match code % 3 {
                1 => edges.push((a, b)),
                2 => edges.push((b, a)),
                _ => {}
            }
            code /= 3;
        }
        if acyclic(n, &edges) {
            out.push(edges);
        }
    }
    out
}

/// Random DAG: a random node order with each forward pair joined with probability `p`.
pub fn random_dag(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        order.swap(i, rng.random_range(0..=i));
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((order[i], order[j]));
            }
        }
    }
    edges
}
