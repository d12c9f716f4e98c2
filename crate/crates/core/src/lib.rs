//! Offline serendipity evaluation for recommender systems.
//!
//! The pipeline: load a ratings dataset into a normalized catalog and
//! interaction log ([`corpus`]), convert to implicit feedback and cut
//! temporal three-fold splits ([`split`]), produce ranked recommendation
//! lists with built-in baselines or import them ([`recsys`]), score every
//! recommended item with an LLM judge under one of four prompt strategies
//! ([`judge`]), and report calibration ([`calibrate`]) and ranking
//! ([`metrics`], [`evaluate`]) results.

pub mod calibrate;
pub mod corpus;
pub mod evaluate;
pub mod judge;
pub mod metrics;
pub mod recsys;
pub mod split;
