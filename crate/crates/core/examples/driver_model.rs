//! Loads the bundled driver network, prints each distribution, and tabulates
//! the conditional mean of Mean_HR against SDSD for the four mental states.

use clgnet::fit::render_cpd;
use clgnet::fixtures::driver_network;
use clgnet::Assignment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = driver_network();
    println!("valid: {}", net.validate().is_valid());
    for note in &net.notes {
        println!("# {note}");
    }
    for spec in net.specs() {
        println!("\n{}", spec.id);
        print!("{}", render_cpd(&net, spec.id.as_str()));
    }

    let grid: Vec<f64> = (0..=6).map(|i| i as f64 * 25.0).collect();
    let rows = net.conditional_mean_profile("Mean_HR", "SDSD", &grid, &Assignment::new())?;
    println!("\ncase        SDSD   E[Mean_HR]");
    for r in rows {
        let case: Vec<String> = r.config.iter().map(|(n, s)| format!("{n}={s}")).collect();
        println!("{:<10} {:>6.1}  {:>8.3}", case.join(","), r.x, r.mean);
    }
    Ok(())
}
