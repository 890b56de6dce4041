//! Compares exact enumeration with rejection sampling on a small discrete
//! network (rain, sprinkler, wet grass).

use clgnet::infer::{exact_enumeration, query_prob, Evidence, Method, QueryOptions};
use clgnet::model::{CategoricalCpt, Cpd};
use clgnet::{Assignment, Dag, Network, VariableSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dag = Dag::from_edges(["Rain", "Sprinkler", "Wet"], [("Rain", "Sprinkler"), ("Rain", "Wet"), ("Sprinkler", "Wet")])?;
    let table = |parents: &[&str], probs: Vec<Vec<f64>>| {
        Cpd::Categorical(CategoricalCpt {
            parents: parents.iter().map(|&p| p.into()).collect(),
            parent_cards: vec![2; parents.len()],
            probs,
        })
    };
    let net = Network::new(
        dag,
        vec![VariableSpec::binary("Rain"), VariableSpec::binary("Sprinkler"), VariableSpec::binary("Wet")],
        vec![
            table(&[], vec![vec![0.8, 0.2]]),
            table(&["Rain"], vec![vec![0.6, 0.4], vec![0.99, 0.01]]),
            // (Rain, Sprinkler) rows: 00, 10, 01, 11
            table(&["Rain", "Sprinkler"], vec![vec![1.0, 0.0], vec![0.2, 0.8], vec![0.1, 0.9], vec![0.01, 0.99]]),
        ],
    )?;
    let target = Assignment::new().with_state("Rain", "1");
    let evidence = Evidence::new().state("Wet", "1");
    println!("exact:     {:.4}", exact_enumeration(&net, &target, &evidence)?);
    for n in [1_000, 10_000, 100_000] {
        let opts = QueryOptions { method: Method::Rejection, n_samples: n, seed: 1 };
        let r = query_prob(&net, &target, &evidence, &opts)?;
        println!("n={n:<7}  {}", r.render("Rain=1", &evidence));
    }
    Ok(())
}
