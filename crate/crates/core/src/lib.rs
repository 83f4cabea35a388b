pub mod error;
pub mod geometry;
pub mod grid;
pub mod kernel;
pub mod metrology;
pub mod models;
pub mod oracle;
pub mod qubit;
pub mod random;
pub mod selftest;
pub mod sld;
pub mod state;

pub use error::{Error, Result};
