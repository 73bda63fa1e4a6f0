//! Test oracles shared by the integration suites of this workspace.

#![allow(dead_code)]

pub mod interleave;
pub mod pairs_oracle;
pub mod path_oracle;
pub mod random_topology;
pub mod select_oracle;
