//! Verification harness: manufactured solutions, refinement studies and a
//! fine-grid reference comparison.

pub mod compare;
pub mod mms;
pub mod studies;
pub mod suites;

pub use compare::{compare_reports, reference_compare, restrict, CompareReport};
pub use mms::{mms_convergence, mms_sources, observed_order, ManufacturedCase, OrderEstimate, OrderReport, Study};
pub use studies::{identity_refinement, lyapunov_study, smooth_bump, RefinementReport};
pub use suites::{run_suite, Check, Suite, SuiteOutcome};
