pub mod approx;
pub mod calibration;
pub mod cli;
pub mod contour;
pub mod error;
pub mod family;
pub mod inference;
pub mod model;
pub mod nuisance;
pub mod optimize;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
