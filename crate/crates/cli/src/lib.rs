//! Command-line front end for the `geoconvex` library: problem files,
//! flat JSON reports and exit codes.

pub mod commands;
pub mod corpus;
pub mod error;
pub mod problem;
pub mod report;

pub use commands::{run, Command, Invocation, Outcome};
pub use error::CliError;
pub use problem::ProblemFile;
pub use report::Report;
