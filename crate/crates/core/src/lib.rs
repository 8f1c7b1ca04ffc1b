//! Personalized, context-aware venue suggestion.
//!
//! Per-user preference models are built from rated venue histories
//! ([`frequency`] profiles over categories and taste tags, [`review`]
//! classifiers over review text), candidates are scored for contextual fit
//! ([`context`]), and the seven component scores are fused by a LambdaMART
//! ranker ([`ltr`]). [`eval`] holds the ranking metrics and [`harness`] the
//! ingestion, synthetic data, persistence and pipeline plumbing used by the
//! `venuerank` binary.

pub mod context;
pub mod eval;
pub mod frequency;
pub mod harness;
pub mod ltr;
pub mod model;
pub mod review;
