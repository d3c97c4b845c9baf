pub mod bunce_deddens;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod periodic_matfun;

pub use error::{Error, Result};
pub mod ou_core;
pub mod threads;
pub mod tunnels;
