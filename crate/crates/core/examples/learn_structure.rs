//! Learns a graph from data sampled off the driver network and compares it
//! with the generating graph.

use clgnet::fit::bic_score;
use clgnet::fixtures::{driver_dag, driver_network};
use clgnet::learn::{compare_structures, hill_climb, LearnConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(20_000);
    let data = driver_network().forward_sample(n, 5);
    let config = LearnConfig { restarts: 2, seed: 5, ..Default::default() };
    let result = hill_climb(&data, &config)?;
    print!("{}", result.trace_text());
    println!("reference BIC: {:.3}", bic_score(&data, &driver_dag())?);
    println!("learned BIC:   {:.3}", result.score);
    print!("{}", compare_structures(&result.dag, &driver_dag())?.render());
    print!("{}", result.dag.to_dot());
    Ok(())
}
