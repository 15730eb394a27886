//! Command-line harness for the `gmplab` experiments: argument parsing,
//! CSV/JSON emission with fixed formatting, run manifests and the acceptance suite.

pub mod acceptance;
pub mod cli;
pub mod emit;
pub mod error;
pub mod manifest;

pub use cli::dispatch;
