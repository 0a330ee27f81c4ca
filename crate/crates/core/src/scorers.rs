//! Query-document weighting models evaluated against an [`InvertedIndex`].
//!
//! Every model is a sum over distinct query terms of `qtf * w(term, doc)`.
//! DirichletLM additionally adds one length penalty per query token. Terms
//! absent from the document (or the collection) contribute 0, and so does
//! every term of an empty document.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::{InvertedIndex, TermStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScorerKind {
    Bm25,
    TfIdf,
    Pl2,
    Dph,
    HiemstraLm,
    DirichletLm,
    Dfic,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 7] = [
        ScorerKind::Bm25,
        ScorerKind::TfIdf,
        ScorerKind::Pl2,
        ScorerKind::Dph,
        ScorerKind::HiemstraLm,
        ScorerKind::DirichletLm,
        ScorerKind::Dfic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScorerKind::Bm25 => "BM25",
            ScorerKind::TfIdf => "TF_IDF",
            ScorerKind::Pl2 => "PL2",
            ScorerKind::Dph => "DPH",
            ScorerKind::HiemstraLm => "Hiemstra_LM",
            ScorerKind::DirichletLm => "DirichletLM",
            ScorerKind::Dfic => "DFIC",
        }
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Ok(match norm.as_str() {
            "bm25" => ScorerKind::Bm25,
            "tfidf" => ScorerKind::TfIdf,
            "pl2" => ScorerKind::Pl2,
            "dph" => ScorerKind::Dph,
            "hiemstralm" | "hiemstra" => ScorerKind::HiemstraLm,
            "dirichletlm" | "dirichlet" => ScorerKind::DirichletLm,
            "dfic" => ScorerKind::Dfic,
            _ => return Err(Error::domain(format!("unknown scorer {s:?}"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerParams {
    pub k1: f64,
    pub b: f64,
    pub c_pl2: f64,
    pub lambda_h: f64,
    pub mu: f64,
}

impl Default for ScorerParams {
    fn default() -> Self {
        ScorerParams {
            k1: 1.2,
            b: 0.75,
            c_pl2: 1.0,
            lambda_h: 0.15,
            mu: 2500.0,
        }
    }
}

impl ScorerParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.k1.is_finite()
            && self.k1 >= 0.0
            && (0.0..=1.0).contains(&self.b)
            && self.c_pl2.is_finite()
            && self.c_pl2 > 0.0
            && self.lambda_h > 0.0
            && self.lambda_h < 1.0
            && self.mu.is_finite()
            && self.mu > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::domain(format!("scorer parameters out of range: {self:?}")))
        }
    }
}

/// Per-document quantities shared by every term.
struct DocContext {
    dl: f64,
    n: f64,
    c: f64,
    avgdl: f64,
}

fn contribution(kind: ScorerKind, p: &ScorerParams, d: &DocContext, tf: f64, ts: TermStats) -> f64 {
    if tf <= 0.0 {
        return 0.0;
    }
    let df = ts.df as f64;
    let cf = ts.cf as f64;
    let DocContext { dl, n, c, avgdl } = *d;
    match kind {
        ScorerKind::Bm25 => {
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            idf * (tf * (p.k1 + 1.0)) / (tf + p.k1 * (1.0 - p.b + p.b * dl / avgdl))
        }
        ScorerKind::TfIdf => {
            tf / (tf + p.k1 * (1.0 - p.b + p.b * dl / avgdl)) * (1.0 + n / df).ln()
        }
        ScorerKind::Pl2 => {
            let tfn = tf * (1.0 + p.c_pl2 * avgdl / dl).log2();
            if tfn <= 0.0 {
                return 0.0;
            }
            let lambda = cf / n;
            (tfn * (tfn / lambda).log2() + (lambda - tfn) * E.log2() + 0.5 * (2.0 * PI * tfn).log2())
                / (tfn + 1.0)
        }
        ScorerKind::Dph => {
            let f = tf / dl;
            // the (1-f)^2 factor vanishes when the document is this one term
            if f >= 1.0 {
                return 0.0;
            }
            let norm = (1.0 - f) * (1.0 - f) / (tf + 1.0);
            norm * (tf * ((tf * avgdl / dl) * (n / cf)).log2() + 0.5 * (2.0 * PI * tf * (1.0 - f)).log2())
        }
        ScorerKind::HiemstraLm => {
            (1.0 + (p.lambda_h * tf * c) / ((1.0 - p.lambda_h) * cf * dl)).ln()
        }
        ScorerKind::DirichletLm => (1.0 + tf / (p.mu * cf / c)).ln(),
        ScorerKind::Dfic => {
            let expected = dl * cf / c;
            if tf > expected {
                (1.0 + (tf - expected) / expected.sqrt()).log2()
            } else {
                0.0
            }
        }
    }
}

/// Query tokens as a multiset in term order, which fixes summation order.
fn query_terms(query: &[String]) -> BTreeMap<&str, u32> {
    let mut terms = BTreeMap::new();
    for t in query {
        *terms.entry(t.as_str()).or_insert(0) += 1;
    }
    terms
}

fn doc_context(index: &InvertedIndex, doc_id: &str) -> Result<DocContext> {
    let stats = index.stats();
    if stats.num_docs == 0 || stats.total_tokens == 0 {
        return Err(Error::domain("cannot score against an empty collection"));
    }
    let dl = index
        .doc_length(doc_id)
        .ok_or_else(|| Error::NotFound(format!("document {doc_id:?} not in index")))?;
    Ok(DocContext {
        dl: dl as f64,
        n: stats.num_docs as f64,
        c: stats.total_tokens as f64,
        avgdl: stats.avgdl,
    })
}

/// Scores every kind in one pass over the query terms. `kinds` selects the
/// accumulators; the summation order per kind is the same whether one or all
/// seven are requested.
fn score_kinds(
    kinds: &[ScorerKind],
    query: &[String],
    doc_id: &str,
    index: &InvertedIndex,
    params: &ScorerParams,
) -> Result<Vec<f64>> {
    let ctx = doc_context(index, doc_id)?;
    let mut sums = vec![0.0; kinds.len()];
    if ctx.dl == 0.0 {
        return Ok(sums);
    }
    for (term, qtf) in query_terms(query) {
        let Some(ts) = index.term_stats(term) else {
            continue;
        };
        let tf = index.tf(term, doc_id) as f64;
        for (sum, &kind) in sums.iter_mut().zip(kinds) {
            *sum += qtf as f64 * contribution(kind, params, &ctx, tf, ts);
        }
    }
    for (sum, &kind) in sums.iter_mut().zip(kinds) {
        if kind == ScorerKind::DirichletLm {
            *sum += query.len() as f64 * (params.mu / (ctx.dl + params.mu)).ln();
        }
    }
    Ok(sums)
}

pub fn score(
    kind: ScorerKind,
    query: &[String],
    doc_id: &str,
    index: &InvertedIndex,
    params: &ScorerParams,
) -> Result<f64> {
    Ok(score_kinds(&[kind], query, doc_id, index, params)?[0])
}

/// All seven models at once; each entry is bit-identical to [`score`].
pub fn score_all(
    query: &[String],
    doc_id: &str,
    index: &InvertedIndex,
    params: &ScorerParams,
) -> Result<BTreeMap<ScorerKind, f64>> {
    let values = score_kinds(&ScorerKind::ALL, query, doc_id, index, params)?;
    Ok(ScorerKind::ALL.into_iter().zip(values).collect())
}
