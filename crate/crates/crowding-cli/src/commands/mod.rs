//! One module per subcommand.

use std::path::PathBuf;

use crate::error::CliResult;
use crate::output::{Format, Output};

pub mod allocate;
pub mod bounds;
pub mod junction;
pub mod qpu;
pub mod tls;
pub mod validate;

/// Global options shared by every subcommand.
#[derive(Debug, Clone)]
pub struct Ctx {
    pub seed: Option<u64>,
    pub out_dir: PathBuf,
    pub format: Format,
}

impl Ctx {
    pub fn output(&self, command: &str) -> CliResult<Output> {
        Output::new(&self.out_dir, self.format, command)
    }

    /// The global seed if given, otherwise `fallback`.
    pub fn seed_or(&self, fallback: u64) -> u64 {
        self.seed.unwrap_or(fallback)
    }
}
