use std::ops::Range;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::{Cpd, Network, VariableKind};
use crate::data::{Column, ColumnSchema, Dataset, Role};

/// Samples per random stream. Fixed so that results do not depend on how
/// streams are scheduled across threads.
pub(crate) const STREAM_LEN: usize = 4096;

/// Stream `stream` of the generator seeded with `seed`.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Splits `0..n` into consecutive `STREAM_LEN` chunks, runs `f` on each with
/// its own generator, and returns the results in chunk order.
pub(crate) fn run_streams<T, F>(n: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, Range<usize>) -> T + Sync,
{
    let streams = n.div_ceil(STREAM_LEN);
    (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = stream_rng(seed, s as u64);
            let start = s * STREAM_LEN;
            f(&mut rng, start..(start + STREAM_LEN).min(n))
        })
        .collect()
}

enum Sampler {
    /// Cumulative probabilities per parent configuration.
    Discrete { cumulative: Vec<Vec<f64>> },
    Gaussian,
}

/// A network prepared for repeated ancestral sampling.
pub(crate) struct CompiledNetwork<'a> {
    net: &'a Network,
    pub(crate) order: Vec<usize>,
    samplers: Vec<Sampler>,
    cards: Vec<usize>,
}

impl<'a> CompiledNetwork<'a> {
    pub(crate) fn new(net: &'a Network) -> Self {
        let samplers = net
            .cpds
            .iter()
            .map(|cpd| match cpd {
                Cpd::Categorical(cpt) => Sampler::Discrete {
                    cumulative: cpt
                        .probs
                        .iter()
                        .map(|row| {
                            let mut acc = 0.0;
                            row.iter()
                                .map(|p| {
                                    acc += p;
                                    acc
                                })
                                .collect()
                        })
                        .collect(),
                },
                Cpd::Clg(_) => Sampler::Gaussian,
            })
            .collect();
        let cards = net.specs.iter().map(|s| s.kind.cardinality().unwrap_or(0)).collect();
        CompiledNetwork { net, order: net.dag.topological_indices(), samplers, cards }
    }

    fn config(&self, v: usize, row: &[f64]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for &p in &self.net.layout[v].discrete {
            idx += row[p] as usize * stride;
            stride *= self.cards[p];
        }
        idx
    }

    /// Draws node `v` given its already-sampled parents in `row`.
    #[inline]
    pub(crate) fn draw<R: Rng>(&self, v: usize, rng: &mut R, row: &[f64]) -> f64 {
        let config = self.config(v, row);
        match &self.samplers[v] {
            Sampler::Discrete { cumulative } => {
                let cum = &cumulative[config];
                let u: f64 = rng.random();
                match cum.iter().position(|&c| u < c) {
                    Some(s) => s as f64,
                    // u landed above a total slightly below 1: take the last
                    // state with positive mass.
                    None => cum
                        .iter()
                        .enumerate()
                        .rev()
                        .find(|(i, &c)| *i == 0 || c > cum[i - 1])
                        .map_or(0.0, |(i, _)| i as f64),
                }
            }
            Sampler::Gaussian => {
                let Cpd::Clg(clg) = &self.net.cpds[v] else { unreachable!() };
                let r = &clg.rows[config];
                let mut mu = r.intercept;
                for (b, &p) in r.coefficients.iter().zip(&self.net.layout[v].continuous) {
                    mu += b * row[p];
                }
                let z: f64 = rng.sample(StandardNormal);
                mu + r.sd * z
            }
        }
    }

    pub(crate) fn sample_row<R: Rng>(&self, rng: &mut R, row: &mut [f64]) {
        for &v in &self.order {
            row[v] = self.draw(v, rng, row);
        }
    }

    pub(crate) fn sample_dataset(&self, net: &Network, n: usize, seed: u64) -> Dataset {
        let k = net.node_count();
        let chunks = run_streams(n, seed, |rng, range| {
            let mut buf = Vec::with_capacity(range.len() * k);
            let mut row = vec![0.0; k];
            for _ in range {
                self.sample_row(rng, &mut row);
                buf.extend_from_slice(&row);
            }
            buf
        });
        let mut columns: Vec<Column> = net
            .specs
            .iter()
            .map(|s| match s.kind {
                VariableKind::Discrete { .. } => Column::Discrete(Vec::with_capacity(n)),
                VariableKind::Continuous => Column::Continuous(Vec::with_capacity(n)),
            })
            .collect();
        for chunk in &chunks {
            for row in chunk.chunks_exact(k) {
                for (col, &x) in columns.iter_mut().zip(row) {
                    match col {
                        Column::Discrete(v) => v.push(Some(x as usize)),
                        Column::Continuous(v) => v.push(Some(x)),
                    }
                }
            }
        }
        let schema = net
            .specs
            .iter()
            .map(|s| ColumnSchema { name: s.id.clone(), kind: s.kind.clone(), role: Role::Other })
            .collect();
        let mut data = Dataset::from_columns(schema, columns).expect("sampled columns match the network specs");
        data.provenance.push(format!("forward-sampled: n={n}, seed={seed}, ChaCha8 streams of {STREAM_LEN}"));
        data
    }
}
