//! Mental-state queries on the driver network: the joint table of (ML, AF)
//! given high heart rate and fast breathing, and the matching marginals.

use clgnet::fixtures::driver_network;
use clgnet::infer::{joint_state_distribution, query_prob, Evidence, QueryOptions};
use clgnet::Assignment;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let net = driver_network();
    let opts = QueryOptions { seed: 42, ..Default::default() };

    let hr = Evidence::new().above("Mean_HR", 100.0);
    let r = query_prob(&net, &Assignment::new().with_state("ML", "1"), &hr, &opts)?;
    println!("{}", r.render("ML=1", &hr));

    let both = Evidence::new().above("Mean_HR", 100.0).above("Resp_rate", 20.0);
    let r = query_prob(&net, &Assignment::new().with_state("AF", "1"), &both, &opts)?;
    println!("{}", r.render("AF=1", &both));

    let table = joint_state_distribution(&net, &["ML", "AF"], &both, &opts)?;
    print!("{}", table.render(&both));
    println!("P(ML=1) from the same pool: {:.3}", table.marginal("ML", "1")?);

    let point = Evidence::new().real("Mean_HR", 110.0);
    let r = query_prob(&net, &Assignment::new().with_state("ML", "1"), &point, &opts)?;
    println!("{}", r.render("ML=1", &point));
    Ok(())
}
