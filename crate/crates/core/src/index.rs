//! Tokenization, inverted index construction and collection statistics.

use std::collections::BTreeMap;
use std::path::Path;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::util;

/// The 33-word English stopword list used when stopword removal is enabled.
pub const STOPWORDS: [&str; 33] = [
    "a", "an", "and", "are", "as", "at", "be", "but", "by", "for", "if", "in", "into", "is", "it",
    "no", "not", "of", "on", "or", "such", "that", "the", "their", "then", "there", "these",
    "they", "this", "to", "was", "will", "with",
];

pub fn is_stopword(token: &str) -> bool {
    STOPWORDS.contains(&token)
}

/// Lowercasing tokenizer that splits on every non-alphanumeric code point.
///
/// Stopword removal and Porter stemming are both off by default.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tokenizer {
    pub remove_stopwords: bool,
    pub stem: bool,
}

impl Tokenizer {
    pub fn tokenize(&self, text: &str) -> Vec<String> {
        let stemmer = self.stem.then(|| Stemmer::create(Algorithm::English));
        text.split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(|t| t.to_lowercase())
            .filter(|t| !(self.remove_stopwords && is_stopword(t)))
            .map(|t| match &stemmer {
                Some(s) => s.stem(&t).into_owned(),
                None => t,
            })
            .collect()
    }
}

/// Tokenizes with the default configuration.
pub fn tokenize(text: &str) -> Vec<String> {
    Tokenizer::default().tokenize(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Posting {
    pub doc_id: String,
    pub tf: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermStats {
    /// Number of documents containing the term.
    pub df: u64,
    /// Total occurrences of the term in the collection.
    pub cf: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectionStats {
    pub num_docs: u64,
    pub total_tokens: u64,
    pub avgdl: f64,
}

impl CollectionStats {
    fn new(num_docs: u64, total_tokens: u64) -> Self {
        let avgdl = if num_docs == 0 {
            0.0
        } else {
            total_tokens as f64 / num_docs as f64
        };
        CollectionStats {
            num_docs,
            total_tokens,
            avgdl,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TermEntry {
    stats: TermStats,
    postings: Vec<Posting>,
}

/// Term to posting list map plus document lengths. Immutable once built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvertedIndex {
    terms: BTreeMap<String, TermEntry>,
    doc_lengths: BTreeMap<String, u64>,
    stats: CollectionStats,
}

impl InvertedIndex {
    pub fn stats(&self) -> &CollectionStats {
        &self.stats
    }

    pub fn term_stats(&self, term: &str) -> Option<TermStats> {
        self.terms.get(term).map(|e| e.stats)
    }

    pub fn postings(&self, term: &str) -> &[Posting] {
        self.terms.get(term).map_or(&[], |e| e.postings.as_slice())
    }

    pub fn doc_length(&self, doc_id: &str) -> Option<u64> {
        self.doc_lengths.get(doc_id).copied()
    }

    pub fn contains_doc(&self, doc_id: &str) -> bool {
        self.doc_lengths.contains_key(doc_id)
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.doc_lengths.keys().map(String::as_str)
    }

    /// Frequency of `term` in `doc_id`, 0 when either is absent.
    pub fn tf(&self, term: &str, doc_id: &str) -> u32 {
        let postings = self.postings(term);
        postings
            .binary_search_by(|p| p.doc_id.as_str().cmp(doc_id))
            .map_or(0, |i| postings[i].tf)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = serde_json::to_vec(self)?;
        util::write_atomic(path, &bytes)
    }

    /// Loads a persisted index and re-checks that its statistics agree with
    /// its postings.
    pub fn load(path: &Path) -> Result<Self> {
        let text = util::read_to_string(path)?;
        let index: InvertedIndex = serde_json::from_str(&text)?;
        index.validate()?;
        Ok(index)
    }

    fn validate(&self) -> Result<()> {
        let total: u64 = self.doc_lengths.values().sum();
        if self.stats != CollectionStats::new(self.doc_lengths.len() as u64, total) {
            return Err(Error::domain("index stats disagree with document lengths"));
        }
        for (term, entry) in &self.terms {
            let cf: u64 = entry.postings.iter().map(|p| p.tf as u64).sum();
            let sorted = entry.postings.windows(2).all(|w| w[0].doc_id < w[1].doc_id);
            let known = entry
                .postings
                .iter()
                .all(|p| p.tf >= 1 && self.doc_lengths.contains_key(&p.doc_id));
            if !sorted || !known || entry.stats.df != entry.postings.len() as u64 || entry.stats.cf != cf {
                return Err(Error::domain(format!("inconsistent postings for term {term:?}")));
            }
        }
        Ok(())
    }
}

/// Builds the index from already tokenized documents.
pub fn build_index(docs: &[Document]) -> Result<InvertedIndex> {
    let mut doc_lengths = BTreeMap::new();
    for doc in docs {
        if doc_lengths.insert(doc.doc_id.clone(), doc.length as u64).is_some() {
            return Err(Error::Duplicate(format!("doc_id {:?}", doc.doc_id)));
        }
    }

    // term -> doc_id -> tf; BTreeMaps give sorted postings for free
    let mut counts: BTreeMap<&str, BTreeMap<&str, u32>> = BTreeMap::new();
    for doc in docs {
        for token in &doc.tokens {
            *counts
                .entry(token.as_str())
                .or_default()
                .entry(doc.doc_id.as_str())
                .or_default() += 1;
        }
    }

    let terms = counts
        .into_iter()
        .map(|(term, per_doc)| {
            let postings: Vec<Posting> = per_doc
                .into_iter()
                .map(|(doc_id, tf)| Posting {
                    doc_id: doc_id.to_string(),
                    tf,
                })
                .collect();
            let stats = TermStats {
                df: postings.len() as u64,
                cf: postings.iter().map(|p| p.tf as u64).sum(),
            };
            (term.to_string(), TermEntry { stats, postings })
        })
        .collect();

    let total: u64 = doc_lengths.values().sum();
    let stats = CollectionStats::new(doc_lengths.len() as u64, total);
    Ok(InvertedIndex {
        terms,
        doc_lengths,
        stats,
    })
}
