//! Named scenarios: data model, text format, execution and report output.

mod builtin;
pub mod emit;
pub mod format;
mod model;
mod report;
mod run;

pub use builtin::{builtin, names_and_descriptions};
pub use emit::{svg, write_report, Format};
pub use format::{load, load_str, save, save_str};
pub use model::*;
pub use report::{Artifact, ArtifactKind, CheckRecord, Report, Status};
pub use run::{run, RunOptions, CHECK_KINDS, GRID_CAP};
