//! Learning-to-rank for documents retrieved for comparative questions.
//!
//! The crate covers the whole batch pipeline: ingestion and candidate
//! acquisition ([`corpus`]), an inverted index ([`index`]), seven lexical
//! weighting models ([`scorers`]), comparative-structure features
//! ([`comparative`]), the fixed eight-slot feature vector ([`features`]),
//! tree-ensemble rankers ([`ltr`]) and NDCG evaluation over TREC runs
//! ([`eval`]). The `argrank` binary wires them together ([`cli`]).

pub mod cli;
pub mod comparative;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod index;
pub mod ltr;
pub mod scorers;
mod util;

pub use error::{Error, Result};
