//! Upper and lower probabilities, marginal contours and Choquet upper
//! expectations built on a [`PossibilityContour`](crate::contour::PossibilityContour).

mod choquet;
mod hypothesis;
mod marginal;
mod search;
mod upper;

pub use choquet::{choquet_upper_expectation, ChoquetResult, ChoquetSpec, Loss, OVERFLOW_GUARD};
pub use hypothesis::{Hypothesis, HypothesisSpec};
pub use marginal::{marginal_contour, FeatureMap};
pub use search::SearchBudget;
pub use upper::{lower_probability, upper_probability, SupResult};
