//! File formats, commands and the random-instance generator behind the
//! `flowround` binary.

pub mod commands;
pub mod format;
pub mod gen;

pub use commands::{CliError, EXIT_INVARIANT, EXIT_OK, EXIT_USAGE, EXIT_VERIFY_FAILED};
pub use format::{emit_instance, emit_result, parse_instance, parse_result, FormatError, Instance};
pub use gen::{generate, generate_flow, GenError, GenParams};
