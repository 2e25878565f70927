//! CNN and RNN regressors for tweet retweet counts, built on a small f64 tensor core.

pub mod data;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod optim;
pub mod pipeline;
