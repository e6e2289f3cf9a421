//! Vocabulary-constraint reasoning benchmark harness.
//!
//! The crate runs reasoning trials against language-model backends under five
//! prompting conditions (an unconstrained control, two verb-class bans, an
//! elaborated metacognitive prompt, and a filler-word ban), lints responses
//! for constraint violations, extracts answers through priority cascades,
//! scores trials under compliance-stratified filter policies, and runs the
//! full inferential suite (exact contingency tests, effect sizes, FDR,
//! bootstrap intervals, rank correlations, GEE logistic regression).
//!
//! Everything downstream of the backend is deterministic: plans, seeds,
//! resampling, and emitted artifacts are pure functions of the configuration.

pub mod analyze;
pub mod artifact;
pub mod backend;
pub mod compliance;
pub mod conditions;
pub mod config;
pub mod corpus;
pub mod error;
pub mod extraction;
pub mod pipeline;
pub mod qualcode;
pub mod report;
pub mod runner;
pub mod scoring;
pub mod stats;
pub mod store;
pub mod text;

pub use error::Error;

/// Schema version stamped into every emitted artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Bundled sample task bank (14 items, two per task type).
pub fn sample_bank_json() -> &'static str {
    include_str!("../data/sample_bank.json")
}

/// Bundled default qualitative-coding pattern set.
pub fn default_patterns_json() -> &'static str {
    include_str!("../data/qualcode_patterns.json")
}

/// Bundled 30-case hand-labeled compliance validation corpus.
pub fn compliance_corpus_json() -> &'static str {
    include_str!("../data/compliance_corpus.json")
}

/// Bundled answer-extraction fixture corpus (two or more cases per
/// cascade rule per answer kind).
pub fn extraction_corpus_json() -> &'static str {
    include_str!("../data/extraction_corpus.json")
}

/// Bundled demo mock script driving the sample bank offline.
pub fn demo_mock_json() -> &'static str {
    include_str!("../data/demo_mock.json")
}
