use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::comparative::TaggingConfig;
use crate::error::{Error, Result};
use crate::eval::Gain;
use crate::index::Tokenizer;
use crate::ltr::{Growth, Mode, TrainConfig};
use crate::scorers::ScorerParams;
use crate::util;

/// One experiment: inputs, parameters and the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    #[serde(default)]
    pub acquisition: Acquisition,
    #[serde(default)]
    pub index: Tokenizer,
    #[serde(default)]
    pub scorers: ScorerParams,
    #[serde(default)]
    pub tagging: TaggingConfig,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub eval: EvalSection,
    #[serde(default)]
    pub split: SplitSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub topics: PathBuf,
    pub qrels: PathBuf,
    /// JSON-lines documents; candidates fall back to judged corpus documents
    /// when no search responses are available.
    pub corpus: Option<PathBuf>,
    /// Directory of cached search responses, one `<topic_id>.json` each.
    pub cache: Option<PathBuf>,
    /// Pre-tagged comparative structures keyed by topic.
    pub pretagged: Option<PathBuf>,
    /// A trained model to use instead of training one.
    pub model: Option<PathBuf>,
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QrelsFormat {
    /// Grades already in 0..=2.
    #[default]
    Trec,
    /// Grades 1..=4, remapped.
    Antique,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Acquisition {
    pub base_url: Option<String>,
    pub size: usize,
    pub id_field: String,
    pub timeout_secs: u64,
    /// Never contact the API; every topic must be cached.
    pub offline: bool,
    pub qrels_format: QrelsFormat,
    /// Drop corpus documents longer than this many characters.
    pub max_chars: Option<usize>,
}

impl Default for Acquisition {
    fn default() -> Self {
        Acquisition {
            base_url: None,
            size: 100,
            id_field: "uuid".to_string(),
            timeout_secs: 30,
            offline: false,
            qrels_format: QrelsFormat::Trec,
            max_chars: None,
        }
    }
}

/// Training overrides on top of the preset for `mode`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub mode: Mode,
    pub n_trees: Option<usize>,
    pub learning_rate: Option<f64>,
    pub max_depth: Option<usize>,
    pub num_leaves: Option<usize>,
    pub min_samples_leaf: Option<usize>,
    pub ndcg_k: Option<usize>,
    pub sigma: Option<f64>,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            mode: Mode::Lambdamart,
            n_trees: None,
            learning_rate: None,
            max_depth: None,
            num_leaves: None,
            min_samples_leaf: None,
            ndcg_k: None,
            sigma: None,
        }
    }
}

impl TrainSection {
    pub fn resolve(&self, seed: u64) -> Result<TrainConfig> {
        let mut c = TrainConfig::preset(self.mode);
        c.seed = seed;
        match (self.max_depth, self.num_leaves) {
            (Some(_), Some(_)) => return Err(Error::domain("set either train.max_depth or train.num_leaves, not both")),
            (Some(max_depth), None) => c.growth = Growth::DepthWise { max_depth },
            (None, Some(num_leaves)) => c.growth = Growth::LeafWise { num_leaves },
            (None, None) => {}
        }
        if let Some(v) = self.n_trees {
            c.n_trees = v;
        }
        if let Some(v) = self.learning_rate {
            c.learning_rate = v;
        }
        if let Some(v) = self.min_samples_leaf {
            c.min_samples_leaf = v;
        }
        if let Some(v) = self.ndcg_k {
            c.ndcg_k = v;
        }
        if let Some(v) = self.sigma {
            c.sigma = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub k: usize,
    pub gain: Gain,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            k: 5,
            gain: Gain::Exponential,
        }
    }
}

/// Train/validation topic split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    /// Topics used for training; defaults to 80% rounded, at least one on
    /// each side.
    pub n_train: Option<usize>,
    /// Shuffle topics with the run seed before splitting.
    pub shuffle: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            n_train: None,
            shuffle: false,
        }
    }
}

impl SplitSection {
    pub fn n_train(&self, n_topics: usize) -> usize {
        self.n_train
            .unwrap_or_else(|| ((n_topics as f64 * 0.8).round() as usize).clamp(1, n_topics.saturating_sub(1).max(1)))
    }
}

impl PipelineConfig {
    /// Parses TOML and resolves relative paths against `base`.
    pub fn from_toml(origin: &Path, text: &str, base: &Path) -> Result<Self> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(0, |s| text[..s.start].matches('\n').count() + 1);
            Error::parse(origin, line, e.message().to_string())
        })?;
        let p = &mut cfg.paths;
        for path in [&mut p.topics, &mut p.qrels, &mut p.output] {
            *path = base.join(&*path);
        }
        for path in [&mut p.corpus, &mut p.cache, &mut p.pretagged, &mut p.model].into_iter().flatten() {
            *path = base.join(&*path);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = util::read_to_string(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(path, &text, base)
    }

    /// Checks parameters and the inputs every subcommand reads.
    pub fn validate(&self) -> Result<()> {
        self.scorers.validate()?;
        self.train.resolve(self.seed)?;
        if self.eval.k == 0 {
            return Err(Error::domain("eval.k must be positive"));
        }
        if self.acquisition.size == 0 {
            return Err(Error::domain("acquisition.size must be positive"));
        }
        let p = &self.paths;
        let required = [Some(&p.topics), Some(&p.qrels), p.corpus.as_ref(), p.pretagged.as_ref(), p.model.as_ref()];
        for path in required.into_iter().flatten() {
            if !path.exists() {
                return Err(Error::NotFound(format!("input {}", path.display())));
            }
        }
        Ok(())
    }

    pub fn train_config(&self) -> Result<TrainConfig> {
        self.train.resolve(self.seed)
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.paths.output.join(name)
    }
}
