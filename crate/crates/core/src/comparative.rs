//! Comparative structures: which objects a question compares, along which
//! aspects, and with which comparing words; and the three document features
//! derived from them.
//!
//! Queries are tagged by a deterministic lexicon heuristic. Output of a real
//! sequence labeller can be supplied instead through [`load_pretagged`].

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::TopicId;
use crate::error::{Error, Result};
use crate::index::{InvertedIndex, Tokenizer, STOPWORDS};
use crate::util;

pub const DEFAULT_CUES: [&str; 13] = [
    "better", "worse", "higher", "lower", "faster", "cheaper", "safer", "more", "less", "vs",
    "versus", "than", "difference",
];

/// Words that separate the two compared objects.
pub const PIVOTS: [&str; 4] = ["or", "vs", "versus", "than"];

/// Question and auxiliary words that are never objects or aspects, on top of
/// the index stopword list.
const QUESTION_WORDS: [&str; 24] = [
    "what", "which", "who", "whom", "how", "why", "when", "where", "do", "does", "did", "has",
    "have", "had", "can", "could", "should", "would", "i", "you", "we", "my", "your", "am",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggingConfig {
    pub cues: BTreeSet<String>,
    pub stopwords: BTreeSet<String>,
    /// Minimum length for an `-er` word to count as a comparative predicate.
    pub min_er_len: usize,
}

impl Default for TaggingConfig {
    fn default() -> Self {
        TaggingConfig {
            cues: DEFAULT_CUES.iter().map(|s| s.to_string()).collect(),
            stopwords: STOPWORDS
                .iter()
                .chain(QUESTION_WORDS.iter())
                .map(|s| s.to_string())
                .collect(),
            min_er_len: 5,
        }
    }
}

impl TaggingConfig {
    fn is_stopword(&self, t: &str) -> bool {
        self.stopwords.contains(t)
    }

    fn is_predicate(&self, t: &str) -> bool {
        self.cues.contains(t)
            || (t.ends_with("er")
                && t.chars().count() >= self.min_er_len
                && t.chars().all(char::is_alphabetic)
                && !self.is_stopword(t))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedQuery {
    pub objects: BTreeSet<String>,
    pub aspects: BTreeSet<String>,
    pub predicates: BTreeSet<String>,
}

impl TaggedQuery {
    pub fn is_empty(&self) -> bool {
        self.objects.is_empty() && self.aspects.is_empty() && self.predicates.is_empty()
    }

    fn check_disjoint(&self) -> Result<()> {
        let overlap = self
            .objects
            .intersection(&self.aspects)
            .chain(self.objects.intersection(&self.predicates))
            .chain(self.aspects.intersection(&self.predicates))
            .next();
        match overlap {
            Some(t) => Err(Error::domain(format!("token {t:?} tagged twice"))),
            None => Ok(()),
        }
    }
}

/// Tags a question.
///
/// Predicates are cue-lexicon words plus long alphabetic `-er` words. The
/// first pivot word (`or`, `vs`, `versus`, `than`) splits the question and the
/// nearest content word on each side becomes an object; the pivot itself is
/// structure, not a predicate. Without a usable pivot the two content words
/// rarest in `collection` are the objects. Remaining content words are
/// aspects. A question with neither a predicate nor a pivot has no
/// comparative structure and yields an empty tagging.
pub fn tag_query(
    title: &str,
    tokenizer: &Tokenizer,
    config: &TaggingConfig,
    collection: Option<&InvertedIndex>,
) -> TaggedQuery {
    let tokens = tokenizer.tokenize(title);
    let pivot = tokens.iter().position(|t| PIVOTS.contains(&t.as_str()));

    let predicates: BTreeSet<String> = tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| Some(*i) != pivot && config.is_predicate(t))
        .map(|(_, t)| t.clone())
        .collect();
    if predicates.is_empty() && pivot.is_none() {
        return TaggedQuery::default();
    }

    let is_content = |t: &String| {
        !config.is_stopword(t) && !predicates.contains(t) && !PIVOTS.contains(&t.as_str())
    };

    let mut objects = BTreeSet::new();
    if let Some(p) = pivot {
        let left = tokens[..p].iter().rev().find(|t| is_content(t));
        let right = tokens[p + 1..].iter().find(|t| is_content(t));
        if let (Some(l), Some(r)) = (left, right) {
            objects.insert(l.clone());
            objects.insert(r.clone());
        }
    }
    if objects.is_empty() {
        let mut content: Vec<(u64, usize, &String)> = Vec::new();
        for (pos, t) in tokens.iter().enumerate() {
            if is_content(t) && !content.iter().any(|(_, _, seen)| *seen == t) {
                let cf = collection.and_then(|c| c.term_stats(t)).map_or(0, |s| s.cf);
                content.push((cf, pos, t));
            }
        }
        content.sort();
        objects.extend(content.into_iter().take(2).map(|(_, _, t)| t.clone()));
    }

    let aspects = tokens
        .iter()
        .filter(|t| is_content(t) && !objects.contains(*t))
        .cloned()
        .collect();

    TaggedQuery {
        objects,
        aspects,
        predicates,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ComparativeFeatures {
    pub is_retrieved: u8,
    pub objs_score: u8,
    pub asp_pred_score: f64,
}

/// Half a point per aspect or predicate occurrence.
pub const ASP_PRED_STEP: f64 = 0.5;

/// Computes the comparative features of a tokenized document.
///
/// `objs_score` counts distinct query objects present (capped at 2).
/// `asp_pred_score` adds [`ASP_PRED_STEP`] for every document token that is an
/// aspect or predicate, but only when at least one object is present.
/// `is_retrieved` flags any object, aspect or predicate in the document.
pub fn comparative_features(tq: &TaggedQuery, doc_tokens: &[String]) -> ComparativeFeatures {
    let mut objects_seen = BTreeSet::new();
    let mut asp_pred_hits = 0usize;
    for t in doc_tokens {
        if tq.objects.contains(t) {
            objects_seen.insert(t.as_str());
        } else if tq.aspects.contains(t) || tq.predicates.contains(t) {
            asp_pred_hits += 1;
        }
    }
    let objs_score = objects_seen.len().min(2) as u8;
    let is_retrieved = u8::from(objs_score > 0 || asp_pred_hits > 0);
    let asp_pred_score = if objs_score > 0 {
        asp_pred_hits as f64 * ASP_PRED_STEP
    } else {
        0.0
    };
    ComparativeFeatures {
        is_retrieved,
        objs_score,
        asp_pred_score,
    }
}

/// Reads `topic_id<TAB>obj:a,b<TAB>asp:x,y<TAB>pred:p,q` lines. The `asp` and
/// `pred` fields are optional; every item is normalized with `tokenizer`.
pub fn load_pretagged(path: &Path, tokenizer: &Tokenizer) -> Result<BTreeMap<TopicId, TaggedQuery>> {
    let text = util::read_to_string(path)?;
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.trim_end_matches('\r').split('\t');
        let id = fields.next().unwrap_or_default().trim();
        let topic_id: TopicId = id
            .parse()
            .map_err(|_| Error::parse(path, n, format!("bad topic id {id:?}")))?;
        let mut tq = TaggedQuery::default();
        let mut has_objects = false;
        for field in fields {
            let (key, items) = field
                .split_once(':')
                .ok_or_else(|| Error::parse(path, n, format!("field {field:?} lacks a key")))?;
            let set = match key.trim() {
                "obj" => {
                    has_objects = true;
                    &mut tq.objects
                }
                "asp" => &mut tq.aspects,
                "pred" => &mut tq.predicates,
                k => return Err(Error::parse(path, n, format!("unknown field {k:?}"))),
            };
            for item in items.split(',') {
                set.extend(tokenizer.tokenize(item));
            }
        }
        if !has_objects {
            return Err(Error::parse(path, n, "missing obj field"));
        }
        tq.check_disjoint().map_err(|e| Error::parse(path, n, e.to_string()))?;
        if out.insert(topic_id, tq).is_some() {
            return Err(Error::Duplicate(format!("{}:{n}: topic {topic_id}", path.display())));
        }
    }
    Ok(out)
}
