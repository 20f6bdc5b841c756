//! Fixture registry, spec loading, suite orchestration and JSON reports.

pub mod fixtures;
pub mod specfile;
pub mod report;
pub mod suite;
