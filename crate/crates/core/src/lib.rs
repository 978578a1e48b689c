pub mod arith;
pub mod encoding;
pub mod error;
pub mod functions;
pub mod lse;
pub mod mixture;
pub mod model;
pub mod problem;
pub mod sim;
pub mod training;

pub use error::{Error, Result};
