//! JSON formats and the `tfun` command line over `tfun-core`.

pub mod app;
pub mod error;
pub mod format;
