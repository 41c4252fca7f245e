//! Scenario runner and verification suites for `finsler-core`.
//!
//! * [`scenario`]: the TOML scenario schema and the central tolerance table.
//! * [`runner`]: task execution and the result, report and manifest files.
//! * [`suites`]: the verification suites behind `finsler verify`.

pub mod runner;
pub mod scenario;
pub mod suites;
