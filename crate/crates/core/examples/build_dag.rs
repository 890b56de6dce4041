//! Builds the four-node collider-plus-chain graph, then prints its ordering,
//! a few d-separation queries, its v-structures and DOT.

use clgnet::Dag;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dag = Dag::from_edges(["Y1", "Y2", "Y3", "Y4"], [("Y1", "Y3"), ("Y2", "Y3"), ("Y3", "Y4")])?;
    let order: Vec<String> = dag.topological_order().iter().map(ToString::to_string).collect();
    println!("nodes: {}, edges: {}", dag.node_count(), dag.edge_count());
    println!("topological order: {}", order.join(" "));
    println!("parents(Y3): {:?}", dag.parents("Y3")?);
    println!("family(Y4): {:?}", dag.family("Y4")?);

    for (x, y, z) in [("Y1", "Y2", vec![]), ("Y1", "Y2", vec!["Y3"]), ("Y1", "Y2", vec!["Y4"]), ("Y1", "Y4", vec!["Y3"])] {
        let sep = dag.d_separated(&[x], &[y], &z)?;
        println!("{x} _||_ {y} | {{{}}}: {sep}", z.join(","));
    }

    match dag.add_edge("Y4", "Y1") {
        Ok(_) => println!("Y4 -> Y1 accepted"),
        Err(e) => println!("Y4 -> Y1 rejected: {e}"),
    }

    for (a, c, b) in dag.v_structures() {
        println!("v-structure: {a} -> {c} <- {b}");
    }
    print!("{}", dag.to_dot());
    Ok(())
}
