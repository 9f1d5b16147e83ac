//! Next-week case-count forecasting for a cohort of cities.
//!
//! Each city gets a lag-feature regression model (random forest or gradient
//! boosting). Optionally the features also include lags of the `k` most
//! similar cities by geography, GDP trajectory or case trajectory. Models are
//! scored with MASE against a seasonal naive forecast.

pub mod error;
pub mod eval;
pub mod experiment;
pub mod features;
pub mod ingest;
pub mod learn;
pub mod output;
pub mod preprocess;
pub mod similarity;
pub mod week;

pub use error::{Error, Result};
