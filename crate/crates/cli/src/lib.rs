//! Study pipeline behind the `qeeg` binary: one module per subcommand, a
//! JSON study config, and plain-text / SVG rendering.

pub mod commands;
pub mod config;
pub mod error;
pub mod render;

pub use config::StudyConfig;
pub use error::CliError;

/// What a subcommand produced. `failures` counts items that were skipped
/// (per-recording errors, untestable grid cells); the process exits 1 when
/// it is nonzero.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Outcome {
    pub outputs: Vec<std::path::PathBuf>,
    pub failures: usize,
}
