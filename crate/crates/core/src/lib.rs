//! Configuration balancing with stochastic requests.

pub mod error;
pub mod graph;
pub mod harness;
pub mod instance;
pub mod lp;
pub mod offline;
pub mod online;
pub mod oracle;
pub mod stoch;

pub use error::{Error, Result};
