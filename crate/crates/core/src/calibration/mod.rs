//! Replicated simulation studies: validity of contours at the truth,
//! calibration of hypothesis assessments, and naive-versus-variational
//! timing.

mod scenario;
mod study;

pub use scenario::{
    standardized_covariates, Approximation, ContourMethod, CovariateDesign, Fitted, Prepared, Replication, Scenario,
};
pub use study::{
    empirical_cdf, hypothesis_calibration, timing_accuracy_study, validity_margin, validity_study, CalibrationReport,
    HypothesisCurve, HypothesisReport, TimingRecord, TimingReport, MAX_FAILURE_RATE,
};
