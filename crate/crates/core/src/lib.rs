//! Portfolio management with an EIIE convolutional policy trained by a
//! deterministic policy gradient on historical daily bars.

pub mod autodiff;
pub mod env;
pub mod experiment;
pub mod market;
pub mod metrics;
pub mod normalization;
pub mod policy;
pub mod synthetic;
pub mod trainer;
