//! The eight-slot query-document feature vector and SVMlight-style ranking
//! datasets.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::comparative::{comparative_features, TaggedQuery};
use crate::corpus::{Candidate, TopicId, MAX_GRADE};
use crate::error::{Error, Result};
use crate::index::{InvertedIndex, Tokenizer};
use crate::scorers::{self, ScorerKind, ScorerParams};
use crate::util;

pub const NUM_FEATURES: usize = 8;

/// Slot names in vector order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "pl2",
    "tfidf",
    "bm25",
    "dfic",
    "chatnoir",
    "is_retrieved",
    "asp_pred",
    "objs",
];

/// Index of the upstream engine score.
pub const UPSTREAM_SLOT: usize = 4;

/// Text scorers feeding slots 0..4, in order.
pub const TEXT_SCORERS: [ScorerKind; 4] = [ScorerKind::Pl2, ScorerKind::TfIdf, ScorerKind::Bm25, ScorerKind::Dfic];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(pub [f64; NUM_FEATURES]);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let arr: [f64; NUM_FEATURES] = values.try_into().map_err(|_| {
            Error::domain(format!("expected {NUM_FEATURES} features, got {}", values.len()))
        })?;
        Ok(FeatureVector(arr))
    }
}

impl std::ops::Index<usize> for FeatureVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Builds feature vectors for candidates of an indexed collection.
#[derive(Debug, Clone)]
pub struct FeatureAssembler<'a> {
    pub index: &'a InvertedIndex,
    pub params: ScorerParams,
    pub tokenizer: Tokenizer,
}

impl<'a> FeatureAssembler<'a> {
    pub fn new(index: &'a InvertedIndex, params: ScorerParams, tokenizer: Tokenizer) -> Self {
        FeatureAssembler {
            index,
            params,
            tokenizer,
        }
    }

    /// `[pl2, tfidf, bm25, dfic, upstream, is_retrieved, asp_pred, objs]`.
    /// A missing upstream score fills slot 4 with 0.
    pub fn assemble(&self, query: &[String], tagged: &TaggedQuery, candidate: &Candidate) -> Result<FeatureVector> {
        let mut v = [0.0; NUM_FEATURES];
        let text = scorers::score_all(query, &candidate.doc_id, self.index, &self.params)?;
        for (slot, kind) in TEXT_SCORERS.iter().enumerate() {
            v[slot] = text[kind];
        }
        v[UPSTREAM_SLOT] = candidate.upstream_score.unwrap_or(0.0);
        let cmp = comparative_features(tagged, &self.tokenizer.tokenize(&candidate.body));
        v[5] = f64::from(cmp.is_retrieved);
        v[6] = cmp.asp_pred_score;
        v[7] = f64::from(cmp.objs_score);
        Ok(FeatureVector(v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledInstance {
    pub topic_id: TopicId,
    pub doc_id: String,
    pub features: FeatureVector,
    /// Present for training and validation data, absent at inference.
    pub grade: Option<u8>,
}

/// A ranking dataset plus the flags recorded in its header.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub instances: Vec<LabeledInstance>,
    /// Slot 4 was zero-filled because the source carried no engine score.
    pub upstream_missing: bool,
}

impl Dataset {
    pub fn new(instances: Vec<LabeledInstance>) -> Self {
        Dataset {
            instances,
            upstream_missing: false,
        }
    }

    pub fn is_labeled(&self) -> bool {
        self.instances.iter().all(|i| i.grade.is_some())
    }
}

const HEADER: &str = "# features=pl2,tfidf,bm25,dfic,chatnoir,is_retrieved,asp_pred,objs";
const UPSTREAM_MISSING: &str = "# upstream=missing";
const UNLABELED: &str = "# labels=none";

fn format_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        v.to_string()
    }
}

/// Serializes `dataset` as `grade qid:<topic> 1:v .. 8:v # doc_id` lines.
/// Unlabeled datasets write 0 as the label and say so in the header.
pub fn format_dataset(dataset: &Dataset) -> Result<String> {
    let labeled = dataset.is_labeled();
    if !labeled && dataset.instances.iter().any(|i| i.grade.is_some()) {
        return Err(Error::domain("dataset mixes labeled and unlabeled instances"));
    }
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    if dataset.upstream_missing {
        out.push_str(UPSTREAM_MISSING);
        out.push('\n');
    }
    if !labeled {
        out.push_str(UNLABELED);
        out.push('\n');
    }
    for inst in &dataset.instances {
        if inst.doc_id.is_empty() || inst.doc_id.contains(['\n', '\r']) {
            return Err(Error::domain(format!("doc id {:?} cannot be written", inst.doc_id)));
        }
        let _ = write!(out, "{} qid:{}", inst.grade.unwrap_or(0), inst.topic_id);
        for (i, v) in inst.features.0.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::domain(format!(
                    "non-finite feature {} for ({}, {})",
                    i + 1,
                    inst.topic_id,
                    inst.doc_id
                )));
            }
            let _ = write!(out, " {}:{}", i + 1, format_value(*v));
        }
        let _ = writeln!(out, " # {}", inst.doc_id);
    }
    Ok(out)
}

pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<()> {
    util::write_atomic(path, format_dataset(dataset)?.as_bytes())
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    parse_dataset(path, &util::read_to_string(path)?)
}

/// Parses dataset text; `origin` only labels errors. Feature indices are
/// 1-based and may be sparse (absent slots are 0).
pub fn parse_dataset(origin: &Path, text: &str) -> Result<Dataset> {
    let mut dataset = Dataset::default();
    let mut labeled = true;
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            match line {
                UPSTREAM_MISSING => dataset.upstream_missing = true,
                UNLABELED => labeled = false,
                _ => {}
            }
            continue;
        }
        let (data, comment) = line.split_once('#').unwrap_or((line, ""));
        let doc_id = comment.trim();
        if doc_id.is_empty() {
            return Err(Error::parse(origin, n, "missing '# doc_id' comment"));
        }
        let mut cols = data.split_whitespace();
        let label = cols.next().ok_or_else(|| Error::parse(origin, n, "missing label"))?;
        let grade: u8 = label
            .parse()
            .ok()
            .filter(|g| *g <= MAX_GRADE)
            .ok_or_else(|| Error::parse(origin, n, format!("bad label {label:?}")))?;
        let qid = cols.next().unwrap_or_default();
        let topic_id: TopicId = qid
            .strip_prefix("qid:")
            .and_then(|q| q.parse().ok())
            .ok_or_else(|| Error::parse(origin, n, format!("bad qid field {qid:?}")))?;
        let mut features = [0.0; NUM_FEATURES];
        let mut last = 0;
        for col in cols {
            let (idx, val) = col
                .split_once(':')
                .ok_or_else(|| Error::parse(origin, n, format!("bad feature {col:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(origin, n, format!("bad feature index {idx:?}")))?;
            if idx == 0 || idx > NUM_FEATURES {
                return Err(Error::parse(
                    origin,
                    n,
                    format!("feature index {idx} outside 1..={NUM_FEATURES}"),
                ));
            }
            if idx <= last {
                return Err(Error::parse(origin, n, "feature indices must increase"));
            }
            last = idx;
            let v: f64 = val
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite())
                .ok_or_else(|| Error::parse(origin, n, format!("bad feature value {val:?}")))?;
            features[idx - 1] = v;
        }
        dataset.instances.push(LabeledInstance {
            topic_id,
            doc_id: doc_id.to_string(),
            features: FeatureVector(features),
            grade: labeled.then_some(grade),
        });
    }
    Ok(dataset)
}
