//! Faithfulness evaluation for task-oriented dialogue response generation.
//!
//! Dialogue actions are turned into hypothesis sentences using slot names
//! and schema descriptions ([`refs`]); an NLI model ([`nli`]) decides whether
//! a generated utterance entails them ([`eval`]). The same machinery drives
//! an ensemble reranker ([`rerank`]) and a schema-robustness check
//! ([`robustness`]).

pub mod cli;
pub mod config;
pub mod data;
pub mod eval;
pub mod nli;
pub mod pipeline;
pub mod refs;
pub mod report;
pub mod rerank;
pub mod robustness;

pub use data::{
    DialogueAction, EvalInstance, GenerationCandidate, SchemaCatalog, ServiceSchema, SlotSchema,
};
pub use nli::{NliBackend, NliLabel, NliPair, NliVerdict};
