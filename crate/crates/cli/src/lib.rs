//! Command-line front end for `stacksim`.

pub mod args;
pub mod columns;
pub mod commands;
pub mod format;
pub mod plot;
pub mod verify;

pub use args::Cli;
pub use commands::{execute, run, Report};
pub use plot::{emit_plot_data, load_plot_data, PlotData, PlotError};
