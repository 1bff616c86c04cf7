//! Monte-Carlo validation of the analytic results.
//!
//! [`batch`] runs replicas in parallel with per-replica random streams;
//! [`checks`] turns batches into [`TestReport`]s; [`suites`] bundles the
//! documented parameter sets.

pub mod batch;
pub mod checks;
pub mod gof;
pub mod report;
pub mod suites;
pub mod summary;

/// Significance level of every test, before Bonferroni correction.
pub const LEVEL: f64 = 0.01;

pub use batch::{run_batch, run_old_family_batch, Engine, OldFamilyBatch, ReplicaBatch, RunSettings};
pub use checks::{
    mc_expected_spectrum, probe_conjecture, test_age_point_process, test_expected_spectrum,
    test_exponential_limit, test_exponential_limit_perturbed, test_geometric_marginal,
    test_geometric_marginal_perturbed, test_large_families_ii, test_old_families, test_old_families_perturbed,
    test_spectrum_limits, LargeFamilyReports,
};
pub use report::{write_reports_csv, Cell, Outcome, TestReport};
pub use suites::{run_suite, Suite, SuiteOptions};
