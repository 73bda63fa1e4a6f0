pub mod bootstrap;
pub mod client;
pub mod drivers;
pub mod engine;
pub mod harness;
pub mod nbi;
pub mod server;
pub mod simnet;
