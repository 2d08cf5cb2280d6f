//! Batch audit pipeline that measures pronominal gender bias in a black-box
//! machine-translation backend.
//!
//! The pipeline instantiates simple sentence templates in gender-neutral
//! languages over an occupation corpus, translates them to English through a
//! pluggable backend, classifies the translated pronoun, and aggregates the
//! labels into tables, histograms, heatmaps and paired significance tests.

pub mod classifier;
pub mod config;
pub mod corpus;
pub mod error;
pub mod probes;
pub mod registry;
pub mod report;
pub mod stats;
pub mod translator;

pub use error::{AuditError, Result};
