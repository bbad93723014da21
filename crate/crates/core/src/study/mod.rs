//! Parameter studies, the acceptance suite and their reports.

pub mod accept;
pub mod cache;
pub mod config;
pub mod jobs;
pub mod report;
pub mod run;

pub use accept::{run_accept, AcceptConfig, AcceptReport, CriterionResult};
pub use cache::{cached_cell, CorrectorCache, CACHE_ENV};
pub use config::{StudyConfig, StudyKind};
pub use jobs::{run_cell, run_green, run_problem, CellJob, ProblemJob};
pub use report::{emit_report, ReportFormat};
pub use run::{run_study, Record, RunContext, StudyResult};
