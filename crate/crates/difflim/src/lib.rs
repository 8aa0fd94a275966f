//! Experiment harness for `difflim-core`: configuration parsing, the named
//! experiments with their pass/fail verdicts, and deterministic CSV/JSON
//! emission. The `difflim` binary is a thin CLI over [`experiments`].

pub mod config;
pub mod experiments;
pub mod output;
pub mod report;
