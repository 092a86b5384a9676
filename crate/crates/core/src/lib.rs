pub mod decomposition;
pub mod entropy;
pub mod error;
pub mod harness;
pub mod maxent;
pub mod regularity;
pub mod safety;
pub mod tournament;

pub use error::{Error, Result};
