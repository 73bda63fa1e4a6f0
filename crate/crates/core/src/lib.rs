//! Intent compilation and resource model for a multilayer secure-service
//! orchestrator. Pure logic, no I/O beyond snapshot and config files; the
//! network-facing parts live in the `mlso` crate.

pub mod compiler;
pub mod config;
pub mod error;
pub mod faults;
pub mod lifecycle;
pub mod model;
pub mod oam;
pub mod sbi;
pub mod stats;
pub mod testbed;
pub mod timing;
pub mod topology;
