//! JSON model and graph files.
//!
//! ```json
//! {
//!   "variables": [{"name": "ML", "kind": "discrete", "states": ["0", "1"]},
//!                 {"name": "SDSD", "kind": "continuous"}],
//!   "edges": [["ML", "SDSD"]],
//!   "cpds": [
//!     {"type": "categorical", "node": "ML", "parents": [],
//!      "rows": [{"config": [], "probs": [0.55, 0.45]}]},
//!     {"type": "clg", "node": "SDSD", "discrete_parents": ["ML"], "continuous_parents": [],
//!      "rows": [{"config": ["0"], "intercept": 60.0, "coefficients": [], "sd": 40.0}, ...]}
//!   ]
//! }
//! ```
//!
//! Reals are written in shortest round-trip form, so save then load gives
//! back bit-identical parameters.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{
    config_count, config_index, config_states, CategoricalCpt, ClgCpd, ClgRow, Cpd, ModelError, Network,
    VariableKind, VariableSpec,
};
use crate::graph::{Dag, GraphError};

#[derive(Debug, Error)]
pub enum ModelFileError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{0}")]
    Format(String),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    notes: Vec<String>,
    variables: Vec<VariableEntry>,
    edges: Vec<(String, String)>,
    cpds: Vec<CpdEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableEntry {
    name: String,
    kind: KindTag,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    states: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Discrete,
    Continuous,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum CpdEntry {
    Categorical {
        node: String,
        parents: Vec<String>,
        rows: Vec<CategoricalRowEntry>,
    },
    Clg {
        node: String,
        discrete_parents: Vec<String>,
        continuous_parents: Vec<String>,
        rows: Vec<ClgRowEntry>,
    },
}

impl CpdEntry {
    fn node(&self) -> &str {
        match self {
            CpdEntry::Categorical { node, .. } | CpdEntry::Clg { node, .. } => node,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CategoricalRowEntry {
    config: Vec<String>,
    probs: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClgRowEntry {
    config: Vec<String>,
    intercept: f64,
    coefficients: Vec<f64>,
    sd: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DagFile {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

/// Parses `{"nodes": [...], "edges": [["from", "to"], ...]}`.
pub fn dag_from_json(text: &str) -> Result<Dag, ModelFileError> {
    let f: DagFile = serde_json::from_str(text)?;
    Ok(Dag::from_edges(f.nodes, f.edges)?)
}

pub fn dag_to_json(dag: &Dag) -> String {
    let f = DagFile {
        nodes: dag.nodes().iter().map(|n| n.to_string()).collect(),
        edges: dag.edges().into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect(),
    };
    serde_json::to_string_pretty(&f).expect("dag serializes") + "\n"
}

pub fn load_dag(path: impl AsRef<Path>) -> Result<Dag, ModelFileError> {
    dag_from_json(&std::fs::read_to_string(path)?)
}

impl Network {
    pub fn from_json(text: &str) -> Result<Network, ModelFileError> {
        let file: ModelFile = serde_json::from_str(text)?;
        let dag = Dag::from_edges(file.variables.iter().map(|v| v.name.as_str()), file.edges.iter().cloned())?;
        let specs: Vec<VariableSpec> = file
            .variables
            .iter()
            .map(|v| {
                let kind = match v.kind {
                    KindTag::Continuous if v.states.is_empty() => VariableKind::Continuous,
                    KindTag::Continuous => {
                        return Err(ModelFileError::Format(format!("continuous variable `{}` lists states", v.name)))
                    }
                    KindTag::Discrete => VariableKind::Discrete { states: v.states.clone() },
                };
                kind.check()
                    .map_err(|m| ModelError::InvalidVariable(v.name.clone(), m))?;
                Ok(VariableSpec { id: v.name.as_str().into(), kind })
            })
            .collect::<Result<_, _>>()?;

        let mut slots: Vec<Option<Cpd>> = vec![None; specs.len()];
        for entry in &file.cpds {
            let v = dag.require(entry.node())?;
            if slots[v].is_some() {
                return Err(ModelFileError::Format(format!("two distributions for `{}`", entry.node())));
            }
            slots[v] = Some(build_cpd(&dag, &specs, entry)?);
        }
        let cpds = slots
            .into_iter()
            .zip(&specs)
            .map(|(c, s)| c.ok_or_else(|| ModelFileError::Format(format!("no distribution for `{}`", s.id))))
            .collect::<Result<_, _>>()?;
        let mut net = Network::new(dag, specs, cpds)?;
        net.notes = file.notes;
        Ok(net)
    }

    pub fn to_json(&self) -> String {
        let variables = self
            .specs
            .iter()
            .map(|s| match &s.kind {
                VariableKind::Discrete { states } => {
                    VariableEntry { name: s.id.to_string(), kind: KindTag::Discrete, states: states.clone() }
                }
                VariableKind::Continuous => {
                    VariableEntry { name: s.id.to_string(), kind: KindTag::Continuous, states: Vec::new() }
                }
            })
            .collect();
        let edges = self.dag.edges().into_iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
        let cpds = self
            .cpds
            .iter()
            .enumerate()
            .map(|(v, cpd)| {
                let node = self.specs[v].id.to_string();
                let labels = |c: usize, parents: &[usize], cards: &[usize]| -> Vec<String> {
                    config_states(c, cards)
                        .into_iter()
                        .zip(parents)
                        .map(|(s, &p)| self.specs[p].kind.states()[s].clone())
                        .collect()
                };
                let dparents = &self.layout[v].discrete;
                match cpd {
                    Cpd::Categorical(cpt) => CpdEntry::Categorical {
                        node,
                        parents: cpt.parents.iter().map(|p| p.to_string()).collect(),
                        rows: cpt
                            .probs
                            .iter()
                            .enumerate()
                            .map(|(c, probs)| CategoricalRowEntry {
                                config: labels(c, dparents, &cpt.parent_cards),
                                probs: probs.clone(),
                            })
                            .collect(),
                    },
                    Cpd::Clg(clg) => CpdEntry::Clg {
                        node,
                        discrete_parents: clg.discrete_parents.iter().map(|p| p.to_string()).collect(),
                        continuous_parents: clg.continuous_parents.iter().map(|p| p.to_string()).collect(),
                        rows: clg
                            .rows
                            .iter()
                            .enumerate()
                            .map(|(c, r)| ClgRowEntry {
                                config: labels(c, dparents, &clg.discrete_cards),
                                intercept: r.intercept,
                                coefficients: r.coefficients.clone(),
                                sd: r.sd,
                            })
                            .collect(),
                    },
                }
            })
            .collect();
        let file = ModelFile { notes: self.notes.clone(), variables, edges, cpds };
        serde_json::to_string_pretty(&file).expect("model serializes") + "\n"
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network, ModelFileError> {
        Network::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), ModelFileError> {
        Ok(std::fs::write(path, self.to_json())?)
    }
}

fn build_cpd(dag: &Dag, specs: &[VariableSpec], entry: &CpdEntry) -> Result<Cpd, ModelFileError> {
    let discrete_info = |names: &[String]| -> Result<(Vec<usize>, Vec<usize>), ModelFileError> {
        let idx: Vec<usize> = names.iter().map(|n| dag.require(n)).collect::<Result<_, _>>()?;
        let cards = idx
            .iter()
            .map(|&p| {
                specs[p].kind.cardinality().ok_or_else(|| {
                    ModelFileError::Format(format!("`{}` is listed as a discrete parent but is continuous", specs[p].id))
                })
            })
            .collect::<Result<_, _>>()?;
        Ok((idx, cards))
    };
    let row_slot = |config: &[String], parents: &[usize], cards: &[usize]| -> Result<usize, ModelFileError> {
        let states: Vec<usize> = config
            .iter()
            .zip(parents)
            .map(|(label, &p)| {
                specs[p].kind.states().iter().position(|s| s == label).ok_or_else(|| {
                    ModelFileError::Format(format!("`{}` has no state `{label}`", specs[p].id))
                })
            })
            .collect::<Result<_, _>>()?;
        if config.len() != parents.len() {
            return Err(ModelFileError::Format(format!("row config {config:?} has the wrong length")));
        }
        Ok(config_index(&states, cards).expect("states resolved against cards"))
    };
    let node = entry.node();
    match entry {
        CpdEntry::Categorical { parents, rows, .. } => {
            let (pidx, cards) = discrete_info(parents)?;
            let n = config_count(&cards);
            let mut probs: Vec<Option<Vec<f64>>> = vec![None; n];
            for r in rows {
                let slot = row_slot(&r.config, &pidx, &cards)?;
                if probs[slot].replace(r.probs.clone()).is_some() {
                    return Err(ModelFileError::Format(format!("`{node}`: duplicate row {:?}", r.config)));
                }
            }
            let probs = probs
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| ModelFileError::Format(format!("`{node}`: missing parent configurations")))?;
            Ok(Cpd::Categorical(CategoricalCpt {
                parents: parents.iter().map(|p| p.as_str().into()).collect(),
                parent_cards: cards,
                probs,
            }))
        }
        CpdEntry::Clg { discrete_parents, continuous_parents, rows, .. } => {
            let (pidx, cards) = discrete_info(discrete_parents)?;
            for p in continuous_parents {
                dag.require(p)?;
            }
            let n = config_count(&cards);
            let mut out: Vec<Option<ClgRow>> = vec![None; n];
            for r in rows {
                let slot = row_slot(&r.config, &pidx, &cards)?;
                let row = ClgRow::new(r.intercept, r.coefficients.clone(), r.sd);
                if out[slot].replace(row).is_some() {
                    return Err(ModelFileError::Format(format!("`{node}`: duplicate row {:?}", r.config)));
                }
            }
            let rows = out
                .into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| ModelFileError::Format(format!("`{node}`: missing parent configurations")))?;
            Ok(Cpd::Clg(ClgCpd {
                discrete_parents: discrete_parents.iter().map(|p| p.as_str().into()).collect(),
                discrete_cards: cards,
                continuous_parents: continuous_parents.iter().map(|p| p.as_str().into()).collect(),
                rows,
            }))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{
      "variables": [{"name": "A", "kind": "discrete", "states": ["no", "yes"]},
                    {"name": "X", "kind": "continuous"}],
      "edges": [["A", "X"]],
      "cpds": [
        {"type": "categorical", "node": "A", "parents": [], "rows": [{"config": [], "probs": [0.1, 0.9]}]},
        {"type": "clg", "node": "X", "discrete_parents": ["A"], "continuous_parents": [],
         "rows": [{"config": ["yes"], "intercept": 2.5, "coefficients": [], "sd": 0.3},
                  {"config": ["no"], "intercept": -1.0, "coefficients": [], "sd": 1.0}]}
      ]
    }"#;

    #[test]
    fn loads_rows_by_label() {
        let net = Network::from_json(SMALL).unwrap();
        let clg = net.cpd("X").unwrap().as_clg().unwrap();
        assert_eq!(clg.rows[0].intercept, -1.0);
        assert_eq!(clg.rows[1].intercept, 2.5);
        assert_eq!(Network::from_json(&net.to_json()).unwrap(), net);
    }

    #[test]
    fn rejects_incomplete_rows() {
        let text = SMALL.replace(
            r#"{"config": ["no"], "intercept": -1.0, "coefficients": [], "sd": 1.0}"#,
            r#"{"config": ["yes"], "intercept": -1.0, "coefficients": [], "sd": 1.0}"#,
        );
        assert!(matches!(Network::from_json(&text), Err(ModelFileError::Format(_))));
        let text = SMALL.replace("0.9]", "0.8]");
        assert!(matches!(Network::from_json(&text), Err(ModelFileError::Model(ModelError::Invalid(_)))));
    }

    #[test]
    fn dag_file_round_trip() {
        let dag = Dag::from_edges(["A", "B", "C"], [("A", "C"), ("B", "C")]).unwrap();
        assert_eq!(dag_from_json(&dag_to_json(&dag)).unwrap(), dag);
        assert!(matches!(
            dag_from_json(r#"{"nodes": ["A", "B"], "edges": [["A", "B"], ["B", "A"]]}"#),
            Err(ModelFileError::Graph(GraphError::Cycle { .. }))
        ));
    }
}
