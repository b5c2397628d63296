pub mod error;
pub mod group;
pub mod hecke;
pub mod hejhal;
pub mod io;
pub mod quad;
pub mod special;
pub mod stats;
pub mod spectrum;
pub mod turing;
pub mod weyl;

pub use error::{Error, Result};
