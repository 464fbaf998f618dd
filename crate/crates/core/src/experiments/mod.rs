//! Experiment drivers: configuration, rate studies, the loss comparison and
//! plotting.

pub mod config;
pub mod plot;
pub mod rates;

pub use config::{load as load_config, parse as parse_config, ExperimentConfig};
pub use rates::{
    block_count, fit_loglog_slope, loss_pair, run_huber_vs_squared, run_rates, theoretical_exponent, Comparison,
    RateResult, RateRow, RateSummary,
};
