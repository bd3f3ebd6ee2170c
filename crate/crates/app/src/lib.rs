//! Command-line tools and the streaming service for live hologram
//! reconstruction.

pub mod bench;
pub mod config;
pub mod error;
pub mod protocol;
pub mod server;

pub use error::{AppError, Result};
