//! Topic modeling for short social-media texts.
//!
//! The crate covers the whole workflow: corpus ingestion ([`corpus`]),
//! cleaning and tokenization ([`preprocess`]), bag-of-words and TF-IDF
//! ([`bow`]), LSA / NMF / LDA training and inference ([`topics`]),
//! coherence-driven selection of the topic count ([`coherence`]), local
//! surrogate explanations of individual predictions ([`explain`]), the
//! LDAvis-style visualization payload ([`ldavis`]) and accuracy reports
//! against manual annotations ([`evaluate`]).

pub mod bow;
pub mod coherence;
pub mod corpus;
mod error;
pub mod evaluate;
pub mod explain;
pub mod ldavis;
pub mod linalg;
pub mod preprocess;
pub mod seed;
pub mod synthetic;
pub mod topics;

pub use error::{Error, Result};
