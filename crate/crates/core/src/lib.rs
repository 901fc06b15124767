//! Mining user questions from keyword-matched social-media posts.
//!
//! The pipeline ingests posts ([`corpus`]), pulls out question sentences
//! ([`questions`]), reduces them to token lists ([`preprocess`]), discovers
//! topics per month with LDA ([`lda`]) selecting the topic count by C_v
//! coherence ([`coherence`]), tags disease, drug, person and organization
//! mentions ([`ner`]), and writes plot-ready tables ([`report`]).

pub mod cli;
pub mod coherence;
pub mod config;
pub mod corpus;
pub mod error;
pub mod lda;
pub mod ner;
pub mod pipeline;
pub mod preprocess;
pub mod questions;
pub mod report;
pub mod resources;
pub mod synth;
pub mod text;

pub use error::{Error, Result};
