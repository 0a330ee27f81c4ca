use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use log::{info, warn};

use super::config::{PipelineConfig, QrelsFormat};
use crate::comparative::{load_pretagged, tag_query, TaggedQuery};
use crate::corpus::{
    self, fetch_candidates, ApiConfig, Candidate, Corpus, CorpusOptions, Document, Qrels, Source, Topic, TopicId,
    API_KEY_ENV,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate_run_with, rank_scored, EvalReport, RunEntry};
use crate::features::{Dataset, FeatureAssembler, LabeledInstance};
use crate::index::{build_index, InvertedIndex};
use crate::ltr::{train, Ensemble};

pub const INDEX_FILE: &str = "index.json";
pub const TRAIN_FILE: &str = "train.features";
pub const VALID_FILE: &str = "valid.features";
pub const MODEL_FILE: &str = "model.json";
pub const RUN_FILE: &str = "run.txt";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const REPORT_JSON_FILE: &str = "report.json";

/// Topics, judgments and the optional document collection.
#[derive(Debug)]
pub struct Inputs {
    pub topics: Vec<Topic>,
    pub qrels: Qrels,
    pub corpus: Option<Corpus>,
}

pub type Candidates = BTreeMap<TopicId, Vec<Candidate>>;

pub fn load_inputs(cfg: &PipelineConfig) -> Result<Inputs> {
    let topics = corpus::load_topics(&cfg.paths.topics)?;
    if topics.is_empty() {
        return Err(Error::domain(format!("{} lists no topics", cfg.paths.topics.display())));
    }
    let qrels = match cfg.acquisition.qrels_format {
        QrelsFormat::Trec => corpus::load_qrels(&cfg.paths.qrels)?,
        QrelsFormat::Antique => corpus::load_antique_qrels(&cfg.paths.qrels)?,
    };
    let corpus = match &cfg.paths.corpus {
        Some(path) => {
            let options = CorpusOptions {
                max_chars: cfg.acquisition.max_chars,
            };
            Some(corpus::load_corpus_with(path, &cfg.index, &options)?)
        }
        None => None,
    };
    info!(
        "{} topics, {} judgments, {} corpus documents",
        topics.len(),
        qrels.len(),
        corpus.as_ref().map_or(0, Corpus::len)
    );
    Ok(Inputs { topics, qrels, corpus })
}

/// Candidates per topic: a cached response when present, otherwise the API
/// (unless offline), otherwise the judged documents found in the corpus.
pub fn acquire(cfg: &PipelineConfig, inputs: &Inputs) -> Result<Candidates> {
    let acq = &cfg.acquisition;
    let api = match (&acq.base_url, acq.offline) {
        (Some(url), false) => Some(Source::Api(ApiConfig {
            base_url: url.clone(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            cache_dir: cfg.paths.cache.clone(),
            id_field: acq.id_field.clone(),
            timeout: Duration::from_secs(acq.timeout_secs),
        })),
        _ => None,
    };
    let mut out = Candidates::new();
    for topic in &inputs.topics {
        let cached = cfg
            .paths
            .cache
            .as_ref()
            .filter(|dir| corpus::acquire::cache_path(dir, topic).exists());
        let list = if let Some(dir) = cached {
            let source = Source::Cache {
                dir: dir.clone(),
                id_field: acq.id_field.clone(),
            };
            fetch_candidates(topic, acq.size, &source)
        } else if let Some(api) = &api {
            fetch_candidates(topic, acq.size, api)
        } else if acq.offline && cfg.paths.cache.is_some() {
            Err(Error::NotFound(format!("offline and no cached response for topic {}", topic.topic_id)))
        } else {
            Ok(judged_from_corpus(topic, inputs))
        };
        let list = list.map_err(|e| e.in_topic(topic.topic_id))?;
        if list.is_empty() {
            warn!("topic {} has no candidates", topic.topic_id);
        }
        out.insert(topic.topic_id, list);
    }
    Ok(out)
}

fn judged_from_corpus(topic: &Topic, inputs: &Inputs) -> Vec<Candidate> {
    let (Some(corpus), Some(judged)) = (&inputs.corpus, inputs.qrels.topic(topic.topic_id)) else {
        return Vec::new();
    };
    judged
        .keys()
        .filter_map(|id| corpus.get(id))
        .map(|doc| Candidate {
            topic_id: topic.topic_id,
            doc_id: doc.doc_id.clone(),
            upstream_score: None,
            body: doc.body.clone(),
        })
        .collect()
}

/// Indexes every candidate plus the corpus; the first body seen for an id
/// wins.
pub fn build_collection_index(cfg: &PipelineConfig, inputs: &Inputs, candidates: &Candidates) -> Result<InvertedIndex> {
    let mut seen = std::collections::HashSet::new();
    let mut docs = Vec::new();
    for c in candidates.values().flatten() {
        if seen.insert(c.doc_id.clone()) {
            docs.push(Document::new(c.doc_id.clone(), c.body.clone(), &cfg.index));
        }
    }
    for d in inputs.corpus.iter().flat_map(|c| c.docs()) {
        if seen.insert(d.doc_id.clone()) {
            docs.push(d.clone());
        }
    }
    let index = build_index(&docs)?;
    info!("indexed {} documents, {} terms", docs.len(), index.num_terms());
    Ok(index)
}

pub fn split(cfg: &PipelineConfig, topics: &[Topic]) -> Result<(Vec<Topic>, Vec<Topic>)> {
    let seed = cfg.split.shuffle.then_some(cfg.seed);
    corpus::split_topics(topics, cfg.split.n_train(topics.len()), seed)
}

/// Feature datasets for the training and validation topics. Unjudged
/// candidates get grade 0.
pub fn build_datasets(
    cfg: &PipelineConfig,
    inputs: &Inputs,
    candidates: &Candidates,
    index: &InvertedIndex,
) -> Result<(Dataset, Dataset)> {
    let pretagged = match &cfg.paths.pretagged {
        Some(path) => load_pretagged(path, &cfg.index)?,
        None => BTreeMap::new(),
    };
    let assembler = FeatureAssembler::new(index, cfg.scorers, cfg.index);
    let (train_topics, valid_topics) = split(cfg, &inputs.topics)?;
    let build = |topics: &[Topic]| -> Result<Dataset> {
        let mut ds = Dataset::default();
        for topic in topics {
            let query = cfg.index.tokenize(&topic.title);
            let tagged: TaggedQuery = match pretagged.get(&topic.topic_id) {
                Some(t) => t.clone(),
                None => tag_query(&topic.title, &cfg.index, &cfg.tagging, Some(index)),
            };
            for c in candidates.get(&topic.topic_id).into_iter().flatten() {
                let features = assembler
                    .assemble(&query, &tagged, c)
                    .map_err(|e| e.in_topic(topic.topic_id))?;
                ds.upstream_missing |= c.upstream_score.is_none();
                ds.instances.push(LabeledInstance {
                    topic_id: topic.topic_id,
                    doc_id: c.doc_id.clone(),
                    features,
                    grade: Some(inputs.qrels.grade(topic.topic_id, &c.doc_id).unwrap_or(0)),
                });
            }
        }
        Ok(ds)
    };
    let train_ds = build(&train_topics)?;
    let valid_ds = build(&valid_topics)?;
    info!(
        "{} training instances over {} topics, {} validation instances over {} topics",
        train_ds.instances.len(),
        train_topics.len(),
        valid_ds.instances.len(),
        valid_topics.len()
    );
    Ok((train_ds, valid_ds))
}

pub fn train_model(cfg: &PipelineConfig, train_ds: &Dataset) -> Result<Ensemble> {
    let config = cfg.train_config()?;
    info!("training {} with seed {}", config.mode, config.seed);
    let model = train(&train_ds.instances, &config)?;
    let importance = model.feature_importance()?;
    info!("feature importance: {importance:?}");
    Ok(model)
}

pub fn run_tag(model: &Ensemble) -> String {
    format!("argrank-{}", model.mode)
}

pub fn rerank_dataset(model: &Ensemble, ds: &Dataset) -> Result<Vec<RunEntry>> {
    let mut by_topic: BTreeMap<TopicId, Vec<(f64, &str)>> = BTreeMap::new();
    for inst in &ds.instances {
        let score = model.predict(inst.features.as_slice()).map_err(|e| e.in_topic(inst.topic_id))?;
        by_topic.entry(inst.topic_id).or_default().push((score, inst.doc_id.as_str()));
    }
    let tag = run_tag(model);
    Ok(by_topic
        .into_iter()
        .flat_map(|(topic, scored)| rank_scored(topic, scored, &tag))
        .collect())
}

/// NDCG over the validation topics.
pub fn evaluate(cfg: &PipelineConfig, inputs: &Inputs, run: &[RunEntry]) -> Result<EvalReport> {
    let (_, valid) = split(cfg, &inputs.topics)?;
    let topics = valid.iter().map(|t| t.topic_id).collect();
    evaluate_run_with(run, &inputs.qrels.restrict(&topics), cfg.eval.k, cfg.eval.gain)
}

pub fn write_report(cfg: &PipelineConfig, report: &EvalReport) -> Result<()> {
    crate::util::write_atomic(&cfg.output(REPORT_TEXT_FILE), report.to_text().as_bytes())?;
    crate::util::write_atomic(&cfg.output(REPORT_JSON_FILE), report.to_json()?.as_bytes())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}
