pub mod atom;
#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod cooling;
pub mod engine;
pub mod error;
pub mod format;
pub mod operator;
pub mod spectroscopy;
pub mod trap;

pub use error::{Error, Result};
