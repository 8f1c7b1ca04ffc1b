//! Data plumbing around the ranker: JSONL ingestion, synthetic data, model
//! files, configuration, and the stages the command-line tool runs.

pub mod config;
pub mod ingest;
pub mod persist;
pub mod pipeline;
pub mod synth;
