//! File formats and command implementations for the `itfe` tool.

pub mod commands;
pub mod io;
pub mod problem;
pub mod report;
