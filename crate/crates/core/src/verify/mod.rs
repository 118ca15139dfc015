//! Seeded, reproducible checks with machine-readable reports.

pub mod checks;
pub mod report;
pub mod sampling;

pub use checks::{applicable, find_vanishing_m, run_all, run_check, CheckName, CheckParams, VanishingRecord};
pub use report::{emit_report, CheckReport, ReportFormat, Verdict};
