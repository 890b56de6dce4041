//! Samples the driver network, refits it with the known graph and compares
//! the recovered Mean_HR rows with the generating values.

use clgnet::fit::{fit_network, log_likelihood, FitOptions};
use clgnet::fixtures::{driver_dag, driver_network, MEAN_HR_ROWS};
use clgnet::model::Cpd;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(50_000);
    let truth = driver_network();
    let data = truth.forward_sample(n, 11);
    let report = fit_network(&data, &driver_dag(), &FitOptions::default())?;
    print!("{}", report.render());

    let Cpd::Clg(fitted) = report.network.cpd("Mean_HR")? else { unreachable!("Mean_HR is continuous") };
    println!("ML AF  intercept (true)       slope (true)         sd (true)");
    for (row, &(ml, af, a, b, s)) in fitted.rows.iter().zip(&MEAN_HR_ROWS) {
        println!(
            "{ml}  {af}   {:>8.3} ({a:>7.3})   {:>7.3} ({b:>6.3})   {:>7.3} ({s:>6.3})",
            row.intercept, row.coefficients[0], row.sd
        );
    }
    println!(
        "log-likelihood: fitted {:.2}, generating {:.2}",
        log_likelihood(&report.network, &data)?,
        log_likelihood(&truth, &data)?
    );
    Ok(())
}
