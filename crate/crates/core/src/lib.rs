//! Batter impact analytics for one-day international cricket.
//!
//! The crate turns ball-by-ball commentary into shot-control statistics,
//! derives match-level features and the Effective Runs (`impact`) label, and
//! fits five regression models to predict it.

pub mod corpus;
pub mod evaluation;
pub mod features;
pub mod pipeline;
pub mod preprocess;
pub mod regressors;
