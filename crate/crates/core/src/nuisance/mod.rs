//! Contours with nuisance parameters: profile likelihood, bootstrap of an
//! empirical risk, and a censoring plug-in.

mod censored;
mod profile;
mod risk;

pub use censored::{
    censored_contour, censored_plugin_contour, kaplan_meier_swapped, CensoredContour, CensoredStatistic,
    CensoringDistribution,
};
pub use profile::{
    relative_profile_likelihood, FiberChart, FiberMaximizer, Interest, ProbeReport, ProfileContour, ProfileSpec,
};
pub use risk::{
    check_loss, empirical_risk_contour, kde, kde_bandwidth, quantile_family, sample_quantile, EmpiricalRiskContour,
    LossFn, Minimizer, RiskSpec,
};
