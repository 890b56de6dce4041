//! Bundled networks and files.
//!
//! The driver mental-state network has two binary mental states, mental load
//! (`ML`) and active fatigue (`AF`), as roots, and five physiological
//! features below them:
//!
//! ```text
//! ML, AF -> SDSD
//! ML, AF, SDSD -> Mean_HR
//! ML, AF, SDSD, Mean_HR -> LF_HF_ratio
//! SDSD, Mean_HR, LF_HF_ratio -> SDNN
//! SDNN -> Resp_rate
//! ```
//!
//! `Mean_HR | SDSD, ML, AF` carries fixed reference estimates ([`MEAN_HR_ROWS`]).
//! The remaining distributions are synthetic fixture values, chosen so the
//! network produces plausible-looking data; they are not estimates.
//! In particular `SDSD | ML, AF` is normal with means 65, 55, 45, 35 and
//! standard deviations 45, 45, 40, 40 for the cases `00, 10, 01, 11`.

use crate::data::{parse_schema, ColumnSchema};
use crate::graph::Dag;
use crate::model::{dag_from_json, Network};

pub const DRIVER_MODEL_JSON: &str = include_str!("../fixtures/driver_mental_state.json");
pub const DRIVER_SCHEMA_JSON: &str = include_str!("../fixtures/driver_mental_state.schema.json");
pub const DRIVER_DAG_JSON: &str = include_str!("../fixtures/driver_mental_state.dag.json");

/// Default row count for synthetic samples.
pub const DRIVER_ROWS: usize = 1892;

/// `(ML, AF, intercept, SDSD slope, sd)` for `Mean_HR`, in `00, 10, 01, 11` order.
pub const MEAN_HR_ROWS: [(u8, u8, f64, f64, f64); 4] = [
    (0, 0, 79.930, -0.130, 13.654),
    (1, 0, 77.967, -0.159, 14.879),
    (0, 1, 77.670, -0.342, 4.432),
    (1, 1, 108.161, -0.516, 26.755),
];

pub fn driver_network() -> Network {
    Network::from_json(DRIVER_MODEL_JSON).expect("bundled model is valid")
}

pub fn driver_schema() -> Vec<ColumnSchema> {
    parse_schema(DRIVER_SCHEMA_JSON).expect("bundled schema is valid")
}

pub fn driver_dag() -> Dag {
    dag_from_json(DRIVER_DAG_JSON).expect("bundled graph is valid")
}

/// The four-node example `Y1 -> Y3 <- Y2`, `Y3 -> Y4`.
pub fn collider_chain_dag() -> Dag {
    Dag::from_edges(["Y1", "Y2", "Y3", "Y4"], [("Y1", "Y3"), ("Y2", "Y3"), ("Y3", "Y4")])
        .expect("static graph is acyclic")
}
