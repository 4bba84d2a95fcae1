//! Report tooling over the subshift statistics library: a JSON system
//! description format, eight analysis commands, and byte-exact report
//! bundles suitable for scripting and regression pinning.

pub mod bundle;
pub mod error;
pub mod reports;
pub mod system;

pub use bundle::{real, Artifact, ReportBundle};
pub use error::{CliError, Result};
pub use reports::{
    cmd_analyze, cmd_clt, cmd_correlations, cmd_demo, cmd_exactdist, cmd_ldp, cmd_livsic,
    cmd_variance, golden_description, golden_errata, ErratumEntry, DEMO_TABLE_TOL,
};
pub use system::{
    build, parse_description, solve, AnalysisOptions, BuiltSystem, FnDescription, Solved,
    SystemDescription, SCHEMA_VERSION,
};
