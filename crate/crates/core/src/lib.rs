//! Detection and explanation of inappropriate chatbot responses in
//! interview-style transcripts.
//!
//! The pipeline: annotate each turn with a context-aware dialogue act
//! ([`tagger`]), extract discourse features around each chatbot response
//! ([`features`]), classify the response as inappropriate / neutral /
//! appropriate with an interpretable random forest ([`forest`]), and
//! explain flagged responses as dialogue-act mismatches ([`explain`]).
//! [`transcript`] holds the data model and a seeded synthetic-corpus
//! generator; [`taxonomy`] holds the act inventories, the tag-mapping
//! ruleset, and the act compatibility matrix; [`metrics`] holds the
//! evaluation and agreement measures.

pub mod cli;
pub mod explain;
pub mod features;
pub mod forest;
pub mod metrics;
pub mod tagger;
pub mod taxonomy;
pub mod text;
pub mod transcript;
