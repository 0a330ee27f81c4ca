//! Candidate acquisition from a ChatNoir-compatible search API, with an
//! on-disk cache of raw responses for offline replay.

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;
use serde_json::Value;

use super::{clean_html, Candidate, Topic};
use crate::error::{Error, Result};
use crate::util;

/// Environment variable the CLI reads the API key from.
pub const API_KEY_ENV: &str = "CHATNOIR_API_KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct ApiConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    /// When set, every successful response is stored as `<topic_id>.json`.
    pub cache_dir: Option<PathBuf>,
    /// Hit field holding the document id.
    pub id_field: String,
    pub timeout: Duration,
}

impl ApiConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        ApiConfig {
            base_url: base_url.into(),
            api_key: None,
            cache_dir: None,
            id_field: "uuid".to_string(),
            timeout: Duration::from_secs(30),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Api(ApiConfig),
    /// Replay responses previously stored under `dir`.
    Cache { dir: PathBuf, id_field: String },
}

impl Source {
    pub fn cache(dir: impl Into<PathBuf>) -> Self {
        Source::Cache {
            dir: dir.into(),
            id_field: "uuid".to_string(),
        }
    }
}

pub fn cache_path(dir: &Path, topic: &Topic) -> PathBuf {
    dir.join(format!("{}.json", topic.topic_id))
}

/// Retrieves at most `size` unique candidates for `topic`. Duplicate ids keep
/// their first occurrence.
pub fn fetch_candidates(topic: &Topic, size: usize, source: &Source) -> Result<Vec<Candidate>> {
    if size == 0 {
        return Err(Error::domain("candidate list size must be positive"));
    }
    match source {
        Source::Cache { dir, id_field } => {
            let path = cache_path(dir, topic);
            if !path.exists() {
                return Err(Error::NotFound(format!(
                    "no cached response for topic {} at {}",
                    topic.topic_id,
                    path.display()
                )));
            }
            let body = util::read_to_string(&path)?;
            parse_hits(topic, &body, size, id_field)
        }
        Source::Api(api) => {
            let body = request(api, topic, size)?;
            let candidates = parse_hits(topic, &body, size, &api.id_field)?;
            if let Some(dir) = &api.cache_dir {
                util::write_atomic(&cache_path(dir, topic), body.as_bytes())?;
            }
            Ok(candidates)
        }
    }
}

fn request(api: &ApiConfig, topic: &Topic, size: usize) -> Result<String> {
    let mut req = ureq::get(&api.base_url)
        .query("query", &topic.title)
        .query("size", size.to_string())
        .config()
        .timeout_global(Some(api.timeout))
        .build();
    if let Some(key) = &api.api_key {
        req = req.header("Authorization", format!("Bearer {key}"));
    }
    let mut resp = req.call().map_err(|e| match e {
        ureq::Error::StatusCode(status) => Error::Transport {
            status: Some(status),
            message: format!("search API rejected topic {}", topic.topic_id),
        },
        e => Error::Transport {
            status: None,
            message: e.to_string(),
        },
    })?;
    resp.body_mut().read_to_string().map_err(|e| Error::Transport {
        status: Some(resp.status().as_u16()),
        message: e.to_string(),
    })
}

#[derive(Deserialize)]
struct Hit {
    score: Option<f64>,
    snippet: Option<String>,
    body: Option<String>,
}

/// Parses a search response: a top-level hit array or an object holding one
/// under `results` or `hits`.
pub fn parse_hits(topic: &Topic, body: &str, size: usize, id_field: &str) -> Result<Vec<Candidate>> {
    let value: Value = serde_json::from_str(body)?;
    let hits = match &value {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("results")
            .or_else(|| o.get("hits"))
            .and_then(Value::as_array)
            .ok_or_else(|| Error::domain("search response has no results array"))?,
        _ => return Err(Error::domain("search response is neither an array nor an object")),
    };

    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for raw in hits {
        if out.len() == size {
            break;
        }
        let doc_id = raw
            .get(id_field)
            .and_then(Value::as_str)
            .ok_or_else(|| Error::domain(format!("hit without string field {id_field:?}")))?;
        if !seen.insert(doc_id.to_string()) {
            continue;
        }
        let hit: Hit = serde_json::from_value(raw.clone())?;
        let text = hit.body.or(hit.snippet).unwrap_or_default();
        out.push(Candidate {
            topic_id: topic.topic_id,
            doc_id: doc_id.to_string(),
            upstream_score: hit.score,
            body: clean_html(&text),
        });
    }
    Ok(out)
}
