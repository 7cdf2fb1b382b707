//! Weighted likelihood bootstrap for complex survey samples.

pub mod bootstrap;
pub mod error;
pub mod estimators;
pub mod models;
pub mod normal;
pub mod resample;
pub mod rng;
pub mod sim;
pub mod survey_data;

pub use bootstrap::{percentile_interval, run_bootstrap, summarize, BootstrapConfig, BootstrapResult, FailureTally};
pub use error::{Error, Result};
pub use estimators::{fit_pmle, fit_unweighted, wald_interval, IntervalEstimate, IntervalMethod, PmleFit};
pub use models::{GaussianMeanModel, LikelihoodModel, ProbitRegressionModel};
pub use resample::{draw_weights, ResampleScheme};
pub use survey_data::{load_csv, scale_weights, ColumnSchema, ScaledWeights, SurveyDataset};
