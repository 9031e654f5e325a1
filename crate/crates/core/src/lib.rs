//! Medical temporal constraint extraction, regular health behavior prediction
//! and constraint violation checking.

pub mod mtc;
pub mod rhb;
pub mod nn;
pub mod predict;
pub mod synth;
pub mod experiment;
pub mod extract;
pub mod violation;
pub mod metrics;
pub mod model;
pub mod config;
pub mod pipeline;
