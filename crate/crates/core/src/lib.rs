pub mod apps;
pub mod chaos;
pub mod charlier;
pub mod cli;
pub mod error;
pub mod measure;
pub mod partitions;
pub mod sim;

pub use error::{Error, Result};
