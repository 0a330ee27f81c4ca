//! NDCG@k, TREC run files and reranking.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Candidate, Qrels, TopicId};
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::ltr::Ensemble;
use crate::util;

/// Gain assigned to a relevance grade.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gain {
    /// `2^g - 1`
    #[default]
    Exponential,
    /// `g`
    Linear,
}

impl Gain {
    pub fn of(self, grade: u32) -> f64 {
        match self {
            Gain::Exponential => 2f64.powi(grade as i32) - 1.0,
            Gain::Linear => grade as f64,
        }
    }
}

/// Discount of the 1-based `rank`: `1 / log2(rank + 1)`.
pub fn discount(rank: usize) -> f64 {
    1.0 / ((rank + 1) as f64).log2()
}

/// Discount of a 1-based rank under cutoff `k` (0 beyond it).
pub fn discount_at(rank: usize, k: usize) -> f64 {
    if rank <= k {
        discount(rank)
    } else {
        0.0
    }
}

pub fn dcg_at_k(grades: &[u32], k: usize, gain: Gain) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain.of(g) * discount(i + 1))
        .sum()
}

/// DCG@k of the grades sorted in descending order.
pub fn ideal_dcg_at_k(grades: &[u32], k: usize, gain: Gain) -> f64 {
    let mut sorted = grades.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    dcg_at_k(&sorted, k, gain)
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::domain("NDCG cutoff k must be at least 1"))
    } else {
        Ok(())
    }
}

/// NDCG@k with exponential gain; 0 when the ideal DCG is 0.
pub fn ndcg_at_k(ranked_grades: &[u32], k: usize) -> Result<f64> {
    ndcg_at_k_with(ranked_grades, k, Gain::Exponential)
}

pub fn ndcg_at_k_with(ranked_grades: &[u32], k: usize, gain: Gain) -> Result<f64> {
    check_k(k)?;
    Ok(ndcg_against(ranked_grades, ranked_grades, k, gain))
}

/// NDCG of `ranked` normalized by the ideal ordering of `pool`.
fn ndcg_against(ranked: &[u32], pool: &[u32], k: usize, gain: Gain) -> f64 {
    let ideal = ideal_dcg_at_k(pool, k, gain);
    if ideal == 0.0 {
        0.0
    } else {
        dcg_at_k(ranked, k, gain) / ideal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEntry {
    pub topic_id: TopicId,
    pub doc_id: String,
    pub rank: usize,
    pub score: f64,
    pub tag: String,
}

/// Groups a run by topic, ordered by rank, after checking that ranks are
/// contiguous from 1, scores do not increase with rank and documents are
/// unique per topic.
pub fn group_run(run: &[RunEntry]) -> Result<BTreeMap<TopicId, Vec<&RunEntry>>> {
    let mut by_topic: BTreeMap<TopicId, Vec<&RunEntry>> = BTreeMap::new();
    for e in run {
        by_topic.entry(e.topic_id).or_default().push(e);
    }
    for (topic, entries) in by_topic.iter_mut() {
        entries.sort_by_key(|e| e.rank);
        let malformed = |msg: String| Error::domain(format!("malformed run for topic {topic}: {msg}"));
        let mut seen = HashSet::new();
        for (i, e) in entries.iter().enumerate() {
            if e.rank != i + 1 {
                return Err(malformed(format!("rank {} where {} expected", e.rank, i + 1)));
            }
            if !seen.insert(e.doc_id.as_str()) {
                return Err(malformed(format!("document {:?} listed twice", e.doc_id)));
            }
            if i > 0 && entries[i - 1].score < e.score {
                return Err(malformed(format!("score increases at rank {}", e.rank)));
            }
        }
    }
    Ok(by_topic)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub k: usize,
    pub gain: Gain,
    pub per_topic: BTreeMap<TopicId, f64>,
    pub mean: f64,
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (t, v) in &self.per_topic {
            let _ = writeln!(out, "topic {t}\tNDCG@{} = {v:.4}", self.k);
        }
        let _ = writeln!(out, "mean NDCG@{} = {:.4} over {} topics", self.k, self.mean, self.per_topic.len());
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Per-topic NDCG@k of a run against `qrels`.
///
/// Unjudged documents count as grade 0. Each topic is normalized by the
/// ideal ordering of all its judged documents. Topics judged in `qrels` but
/// missing from the run score 0; the mean is taken over the qrels topics and
/// run topics without judgments are ignored.
pub fn evaluate_run(run: &[RunEntry], qrels: &Qrels, k: usize) -> Result<EvalReport> {
    evaluate_run_with(run, qrels, k, Gain::Exponential)
}

pub fn evaluate_run_with(run: &[RunEntry], qrels: &Qrels, k: usize, gain: Gain) -> Result<EvalReport> {
    check_k(k)?;
    let grouped = group_run(run)?;
    let mut per_topic = BTreeMap::new();
    for topic in qrels.topics() {
        let judged = qrels.topic(topic).expect("topic listed by qrels");
        let pool: Vec<u32> = judged.values().map(|&g| g as u32).collect();
        let ranked: Vec<u32> = grouped.get(&topic).map_or_else(Vec::new, |entries| {
            entries
                .iter()
                .map(|e| judged.get(&e.doc_id).map_or(0, |&g| g as u32))
                .collect()
        });
        per_topic.insert(topic, ndcg_against(&ranked, &pool, k, gain));
    }
    let mean = if per_topic.is_empty() {
        0.0
    } else {
        per_topic.values().sum::<f64>() / per_topic.len() as f64
    };
    Ok(EvalReport {
        k,
        gain,
        per_topic,
        mean,
    })
}

/// Orders by descending score, then ascending doc id.
pub fn rank_order(a: (f64, &str), b: (f64, &str)) -> Ordering {
    b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1))
}

/// Scores one topic's candidates with `ensemble` and ranks them.
pub fn rerank<F>(
    topic_id: TopicId,
    candidates: &[Candidate],
    mut assemble: F,
    ensemble: &Ensemble,
    tag: &str,
) -> Result<Vec<RunEntry>>
where
    F: FnMut(&Candidate) -> Result<FeatureVector>,
{
    let mut scored = Vec::with_capacity(candidates.len());
    for c in candidates {
        let features = assemble(c).map_err(|e| e.in_topic(topic_id))?;
        let score = ensemble.predict(features.as_slice()).map_err(|e| e.in_topic(topic_id))?;
        scored.push((score, c.doc_id.as_str()));
    }
    Ok(rank_scored(topic_id, scored, tag))
}

/// Turns `(score, doc_id)` pairs into ranked run entries.
pub fn rank_scored(topic_id: TopicId, mut scored: Vec<(f64, &str)>, tag: &str) -> Vec<RunEntry> {
    scored.sort_by(|a, b| rank_order(*a, *b));
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (score, doc_id))| RunEntry {
            topic_id,
            doc_id: doc_id.to_string(),
            rank: i + 1,
            score,
            tag: tag.to_string(),
        })
        .collect()
}

/// `%g`-style formatting with six significant digits.
pub fn format_score(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x.is_finite() { "0".into() } else { x.to_string() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{exp}", trim_zeros(mantissa.to_string()))
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn format_run(run: &[RunEntry]) -> Result<String> {
    let mut out = String::new();
    for e in run {
        if e.doc_id.is_empty() || e.doc_id.contains(char::is_whitespace) {
            return Err(Error::domain(format!("doc id {:?} cannot be written", e.doc_id)));
        }
        if e.tag.is_empty() || e.tag.contains(char::is_whitespace) {
            return Err(Error::domain(format!("run tag {:?} cannot be written", e.tag)));
        }
        let _ = writeln!(out, "{} Q0 {} {} {} {}", e.topic_id, e.doc_id, e.rank, format_score(e.score), e.tag);
    }
    Ok(out)
}

pub fn write_run(path: &Path, run: &[RunEntry]) -> Result<()> {
    util::write_atomic(path, format_run(run)?.as_bytes())
}

pub fn read_run(path: &Path) -> Result<Vec<RunEntry>> {
    parse_run(path, &util::read_to_string(path)?)
}

pub fn parse_run(origin: &Path, text: &str) -> Result<Vec<RunEntry>> {
    let mut run = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        let [topic, _q0, doc_id, rank, score, tag] = cols[..] else {
            return Err(Error::parse(origin, n, format!("expected 6 columns, found {}", cols.len())));
        };
        let bad = |what: &str, v: &str| Error::parse(origin, n, format!("bad {what} {v:?}"));
        run.push(RunEntry {
            topic_id: topic.parse().map_err(|_| bad("topic id", topic))?,
            doc_id: doc_id.to_string(),
            rank: rank
                .parse()
                .ok()
                .filter(|r| *r >= 1)
                .ok_or_else(|| bad("rank", rank))?,
            score: score
                .parse()
                .ok()
                .filter(|s: &f64| s.is_finite())
                .ok_or_else(|| bad("score", score))?,
            tag: tag.to_string(),
        });
    }
    Ok(run)
}

/// Topics a run covers.
pub fn run_topics(run: &[RunEntry]) -> BTreeSet<TopicId> {
    run.iter().map(|e| e.topic_id).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Judgment;

    fn entry(topic_id: u32, doc: &str, rank: usize, score: f64) -> RunEntry {
        RunEntry {
            topic_id,
            doc_id: doc.into(),
            rank,
            score,
            tag: "t".into(),
        }
    }

    fn qrels(rows: &[(u32, &str, u8)]) -> Qrels {
        let mut q = Qrels::new();
        for (t, d, g) in rows {
            q.insert(Judgment {
                topic_id: *t,
                doc_id: d.to_string(),
                grade: *g,
            })
            .unwrap();
        }
        q
    }

    #[test]
    fn ndcg_hand_values() {
        assert_eq!(ndcg_at_k(&[2, 1, 0], 3).unwrap(), 1.0);
        let expected = (1.0 / 3f64.log2() + 1.5) / (3.0 + 1.0 / 3f64.log2());
        assert!((ndcg_at_k(&[0, 1, 2], 3).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.5869).abs() < 1e-4);
        assert_eq!(ndcg_at_k(&[0, 0, 0], 5).unwrap(), 0.0);
        assert!(ndcg_at_k(&[1], 0).is_err());
        assert_eq!(ndcg_at_k(&[], 5).unwrap(), 0.0);
    }

    #[test]
    fn linear_gain() {
        let v = ndcg_at_k_with(&[0, 1, 2], 3, Gain::Linear).unwrap();
        let expected = (1.0 / 3f64.log2() + 1.0) / (2.0 + 1.0 / 3f64.log2());
        assert!((v - expected).abs() < 1e-15);
    }

    #[test]
    fn perfect_run_scores_one() {
        let q = qrels(&[(1, "a", 2), (1, "b", 1), (2, "c", 1)]);
        let run = vec![entry(1, "a", 1, 3.0), entry(1, "b", 2, 2.0), entry(2, "c", 1, 1.0)];
        let r = evaluate_run(&run, &q, 5).unwrap();
        assert_eq!(r.mean, 1.0);
        assert!(r.to_text().contains("mean NDCG@5 = 1.0000"));
    }

    #[test]
    fn missing_topic_counts_as_zero() {
        let q = qrels(&[(1, "a", 2), (2, "c", 1)]);
        let run = vec![entry(1, "a", 1, 3.0), entry(9, "z", 1, 3.0)];
        let r = evaluate_run(&run, &q, 5).unwrap();
        assert_eq!(r.per_topic[&2], 0.0);
        assert_eq!(r.mean, 0.5);
        assert!(!r.per_topic.contains_key(&9));
    }

    #[test]
    fn unjudged_docs_are_grade_zero() {
        let q = qrels(&[(1, "a", 2)]);
        let run = vec![entry(1, "x", 1, 3.0), entry(1, "a", 2, 2.0)];
        let r = evaluate_run(&run, &q, 5).unwrap();
        assert!((r.mean - discount(2)).abs() < 1e-15);
    }

    #[test]
    fn malformed_runs_name_the_topic() {
        let q = qrels(&[(1, "a", 2)]);
        for run in [
            vec![entry(7, "a", 1, 3.0), entry(7, "b", 3, 2.0)],
            vec![entry(7, "a", 1, 3.0), entry(7, "a", 2, 2.0)],
            vec![entry(7, "a", 1, 1.0), entry(7, "b", 2, 2.0)],
        ] {
            let err = evaluate_run(&run, &q, 5).unwrap_err().to_string();
            assert!(err.contains("topic 7"), "{err}");
        }
    }

    #[test]
    fn rank_ties_break_on_doc_id() {
        let run = rank_scored(3, vec![(1.0, "b"), (2.0, "c"), (1.0, "a")], "x");
        let ids: Vec<_> = run.iter().map(|e| (e.doc_id.as_str(), e.rank)).collect();
        assert_eq!(ids, [("c", 1), ("a", 2), ("b", 3)]);
        assert!(rank_scored(3, vec![], "x").is_empty());
    }

    #[test]
    fn score_formatting() {
        assert_eq!(format_score(14.731249), "14.7312");
        assert_eq!(format_score(0.0), "0");
        assert_eq!(format_score(-0.0), "0");
        assert_eq!(format_score(1.0), "1");
        assert_eq!(format_score(123456789.0), "1.23457e8");
        assert_eq!(format_score(0.000012345678), "1.23457e-5");
        assert_eq!(format_score(0.00012345678), "0.000123457");
        assert_eq!(format_score(9.9999996), "10");
        assert_eq!(format_score(-2.5), "-2.5");
    }

    #[test]
    fn run_line_format_and_errors() {
        let mut e = entry(51, "clueweb12-0001-05", 1, 14.7312);
        e.tag = "katana-lgbm".into();
        assert_eq!(format_run(&[e.clone()]).unwrap(), "51 Q0 clueweb12-0001-05 1 14.7312 katana-lgbm\n");
        let back = parse_run(Path::new("r"), &format_run(&[e.clone()]).unwrap()).unwrap();
        assert_eq!(back, vec![e]);

        let err = parse_run(Path::new("r"), "51 Q0 a 1 1.0 t\n51 Q0 b 2 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        let err = parse_run(Path::new("r"), "51 Q0 a 0 1.0 t\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }
}
