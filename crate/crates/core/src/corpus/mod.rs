//! Documents, topics and graded judgments, plus the file formats they are
//! loaded from.

pub mod acquire;
mod html;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::Tokenizer;
use crate::util;

pub use acquire::{fetch_candidates, parse_hits, ApiConfig, Source, API_KEY_ENV};
pub use html::clean_html;

pub type TopicId = u32;

/// Highest grade a judgment may carry.
pub const MAX_GRADE: u8 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub raw: Option<String>,
    pub body: String,
    pub tokens: Vec<String>,
    pub length: usize,
}

impl Document {
    /// A document whose body is already clean text.
    pub fn new(doc_id: impl Into<String>, body: impl Into<String>, tokenizer: &Tokenizer) -> Self {
        let body = body.into();
        let tokens = tokenizer.tokenize(&body);
        Document {
            doc_id: doc_id.into(),
            raw: None,
            length: tokens.len(),
            body,
            tokens,
        }
    }

    /// A document built from raw markup; the body is `clean_html(raw)`.
    pub fn from_raw(doc_id: impl Into<String>, raw: impl Into<String>, tokenizer: &Tokenizer) -> Self {
        let raw = raw.into();
        let mut doc = Document::new(doc_id, clean_html(&raw), tokenizer);
        doc.raw = Some(raw);
        doc
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topic_id: TopicId,
    pub title: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Judgment {
    pub topic_id: TopicId,
    pub doc_id: String,
    pub grade: u8,
}

/// A document returned by the search engine for one topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub topic_id: TopicId,
    pub doc_id: String,
    /// Engine relevance score; `None` for corpora that carry no engine score.
    pub upstream_score: Option<f64>,
    pub body: String,
}

/// Graded judgments keyed by topic then document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    by_topic: BTreeMap<TopicId, BTreeMap<String, u8>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a judgment, rejecting a second grade for the same pair.
    pub fn insert(&mut self, j: Judgment) -> Result<()> {
        if j.grade > MAX_GRADE {
            return Err(Error::domain(format!("grade {} outside 0..={MAX_GRADE}", j.grade)));
        }
        let docs = self.by_topic.entry(j.topic_id).or_default();
        if docs.contains_key(&j.doc_id) {
            return Err(Error::Duplicate(format!("judgment ({}, {:?})", j.topic_id, j.doc_id)));
        }
        docs.insert(j.doc_id, j.grade);
        Ok(())
    }

    pub fn grade(&self, topic_id: TopicId, doc_id: &str) -> Option<u8> {
        self.by_topic.get(&topic_id)?.get(doc_id).copied()
    }

    pub fn topic(&self, topic_id: TopicId) -> Option<&BTreeMap<String, u8>> {
        self.by_topic.get(&topic_id)
    }

    pub fn topics(&self) -> impl Iterator<Item = TopicId> + '_ {
        self.by_topic.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.by_topic.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Judgments restricted to the given topics.
    pub fn restrict(&self, topics: &BTreeSet<TopicId>) -> Qrels {
        Qrels {
            by_topic: self
                .by_topic
                .iter()
                .filter(|(t, _)| topics.contains(t))
                .map(|(t, d)| (*t, d.clone()))
                .collect(),
        }
    }

    pub fn judgments(&self) -> impl Iterator<Item = Judgment> + '_ {
        self.by_topic.iter().flat_map(|(t, docs)| {
            docs.iter().map(|(d, g)| Judgment {
                topic_id: *t,
                doc_id: d.clone(),
                grade: *g,
            })
        })
    }
}

/// Maps a four-level Antique label onto the three-level scale.
pub fn map_antique_grade(grade: i64) -> Result<u8> {
    match grade {
        1 => Ok(0),
        2 | 3 => Ok(1),
        4 => Ok(2),
        g => Err(Error::domain(format!("antique grade {g} outside 1..=4"))),
    }
}

/// Splits topics into train and validation parts of sizes `n_train` and
/// `topics.len() - n_train`.
///
/// Without a seed the first `n_train` topics by id go to train. With a seed
/// the id-ordered list is shuffled first. Both parts come back sorted by id.
pub fn split_topics(
    topics: &[Topic],
    n_train: usize,
    seed: Option<u64>,
) -> Result<(Vec<Topic>, Vec<Topic>)> {
    if n_train == 0 || n_train >= topics.len() {
        return Err(Error::domain(format!(
            "n_train {n_train} must lie strictly between 0 and {}",
            topics.len()
        )));
    }
    let mut ordered = topics.to_vec();
    ordered.sort_by_key(|t| t.topic_id);
    if let Some(seed) = seed {
        ordered.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let mut valid = ordered.split_off(n_train);
    let mut train = ordered;
    train.sort_by_key(|t| t.topic_id);
    valid.sort_by_key(|t| t.topic_id);
    Ok((train, valid))
}

/// Ingestion options applied by [`load_corpus_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusOptions {
    /// Drop documents whose cleaned body exceeds this many characters.
    pub max_chars: Option<usize>,
}

impl CorpusOptions {
    /// The short-answer profile used for the Antique collection.
    pub fn antique() -> Self {
        CorpusOptions {
            max_chars: Some(300),
        }
    }
}

fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty())
}

/// Reads `topic_id<TAB>title` lines.
pub fn load_topics(path: &Path) -> Result<Vec<Topic>> {
    let text = util::read_to_string(path)?;
    let mut seen = BTreeSet::new();
    let mut topics = Vec::new();
    for (n, line) in lines(&text) {
        let (id, title) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(path, n, "expected topic_id<TAB>title"))?;
        let topic_id: TopicId = id
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, n, format!("bad topic id {id:?}")))?;
        let title = title.trim();
        if title.is_empty() {
            return Err(Error::parse(path, n, "empty title"));
        }
        if !seen.insert(topic_id) {
            return Err(Error::Duplicate(format!("{}:{n}: topic {topic_id}", path.display())));
        }
        topics.push(Topic {
            topic_id,
            title: title.to_string(),
        });
    }
    Ok(topics)
}

/// Reads TREC qrels (`topic_id 0 doc_id grade`) with grades in 0..=2.
pub fn load_qrels(path: &Path) -> Result<Qrels> {
    load_qrels_mapped(path, |g| {
        u8::try_from(g)
            .ok()
            .filter(|g| *g <= MAX_GRADE)
            .ok_or_else(|| Error::domain(format!("grade {g} outside 0..={MAX_GRADE}")))
    })
}

/// Reads Antique qrels (grades 1..=4) and remaps them onto 0..=2.
pub fn load_antique_qrels(path: &Path) -> Result<Qrels> {
    load_qrels_mapped(path, map_antique_grade)
}

fn load_qrels_mapped(path: &Path, map: impl Fn(i64) -> Result<u8>) -> Result<Qrels> {
    let text = util::read_to_string(path)?;
    let mut qrels = Qrels::new();
    for (n, line) in lines(&text) {
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [topic, _iter, doc_id, grade] = cols[..] else {
            return Err(Error::parse(path, n, format!("expected 4 columns, found {}", cols.len())));
        };
        let topic_id: TopicId = topic
            .parse()
            .map_err(|_| Error::parse(path, n, format!("bad topic id {topic:?}")))?;
        let raw: i64 = grade
            .parse()
            .map_err(|_| Error::parse(path, n, format!("bad grade {grade:?}")))?;
        let grade = map(raw).map_err(|e| Error::parse(path, n, e.to_string()))?;
        qrels
            .insert(Judgment {
                topic_id,
                doc_id: doc_id.to_string(),
                grade,
            })
            .map_err(|e| match e {
                Error::Duplicate(k) => Error::Duplicate(format!("{}:{n}: {k}", path.display())),
                e => e,
            })?;
    }
    Ok(qrels)
}

#[derive(Deserialize)]
struct CorpusLine {
    doc_id: String,
    body: Option<String>,
    raw: Option<String>,
}

/// An ordered document collection with unique ids.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: Vec<Document>,
    positions: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, doc: Document) -> Result<()> {
        if self.positions.contains_key(&doc.doc_id) {
            return Err(Error::Duplicate(format!("doc_id {:?}", doc.doc_id)));
        }
        self.positions.insert(doc.doc_id.clone(), self.docs.len());
        self.docs.push(doc);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.positions.get(doc_id).map(|&i| &self.docs[i])
    }

    pub fn docs(&self) -> &[Document] {
        &self.docs
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

pub fn load_corpus(path: &Path, tokenizer: &Tokenizer) -> Result<Corpus> {
    load_corpus_with(path, tokenizer, &CorpusOptions::default())
}

/// Reads JSON lines with `doc_id`, `body` and optional `raw`. When `body` is
/// missing the cleaned `raw` is used.
pub fn load_corpus_with(path: &Path, tokenizer: &Tokenizer, options: &CorpusOptions) -> Result<Corpus> {
    let text = util::read_to_string(path)?;
    let mut corpus = Corpus::new();
    for (n, line) in lines(&text) {
        let rec: CorpusLine =
            serde_json::from_str(line).map_err(|e| Error::parse(path, n, e.to_string()))?;
        if rec.doc_id.is_empty() {
            return Err(Error::parse(path, n, "empty doc_id"));
        }
        let body = match (&rec.body, &rec.raw) {
            (Some(b), _) => clean_html(b),
            (None, Some(r)) => clean_html(r),
            (None, None) => return Err(Error::parse(path, n, "missing body")),
        };
        if options.max_chars.is_some_and(|m| body.chars().count() > m) {
            continue;
        }
        let mut doc = Document::new(rec.doc_id, body, tokenizer);
        doc.raw = rec.raw;
        corpus.push(doc).map_err(|e| match e {
            Error::Duplicate(k) => Error::Duplicate(format!("{}:{n}: {k}", path.display())),
            e => e,
        })?;
    }
    Ok(corpus)
}
