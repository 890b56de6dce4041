//! Forward-samples a default-sized dataset from the driver
//! network and prints summary statistics and the correlation table.

use clgnet::data::{correlation_matrix, summarize};
use clgnet::fixtures::{driver_network, DRIVER_ROWS};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let net = driver_network();
    let data = net.forward_sample(DRIVER_ROWS, seed);
    print!("{}", summarize(&data).render());
    let physio = ["SDNN", "SDSD", "Mean_HR", "LF_HF_ratio", "Resp_rate"];
    println!();
    print!("{}", correlation_matrix(&data, &physio)?.render());
    for p in &data.provenance {
        println!("# {p}");
    }
    Ok(())
}
