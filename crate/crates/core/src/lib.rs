pub mod analysis;
pub mod cli;
pub mod config;
pub mod conjugacy;
pub mod error;
pub mod geom;
pub mod induction;
pub mod maps;
pub mod report;

pub use error::{Error, Result};
