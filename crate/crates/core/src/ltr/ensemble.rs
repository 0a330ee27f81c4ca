use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tree::{Node, RegressionTree};
use super::{Mode, TrainConfig};
use crate::error::{Error, Result};
use crate::features::{FEATURE_NAMES, NUM_FEATURES};
use crate::util;

pub const MODEL_FORMAT: &str = "argrank-ensemble";
pub const MODEL_VERSION: u32 = 1;

/// A trained ranker.
///
/// Boosted modes predict `base_score + shrinkage * sum(tree(x))`, summed
/// tree by tree in training order. The random forest predicts the mean tree
/// output and has no shrinkage.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub mode: Mode,
    pub trees: Vec<RegressionTree>,
    pub shrinkage: f64,
    pub base_score: f64,
    pub feature_names: Vec<String>,
    pub config: TrainConfig,
}

impl Ensemble {
    pub fn new(config: TrainConfig, base_score: f64) -> Self {
        let shrinkage = match config.mode {
            Mode::RandomForest => 1.0,
            _ => config.learning_rate,
        };
        Ensemble {
            mode: config.mode,
            trees: Vec::new(),
            shrinkage,
            base_score,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            config,
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != NUM_FEATURES {
            return Err(Error::domain(format!("expected {NUM_FEATURES} features, got {}", x.len())));
        }
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> f64 {
        match self.mode {
            Mode::RandomForest if !self.trees.is_empty() => {
                let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
                self.base_score + sum / self.trees.len() as f64
            }
            Mode::RandomForest => self.base_score,
            _ => {
                let mut s = self.base_score;
                for t in &self.trees {
                    s += self.shrinkage * t.predict(x);
                }
                s
            }
        }
    }

    /// Total split gain per feature, in feature order.
    pub fn feature_importance(&self) -> Result<[f64; NUM_FEATURES]> {
        if self.trees.is_empty() {
            return Err(Error::domain("feature importance of an untrained ensemble"));
        }
        let mut acc = [0.0; NUM_FEATURES];
        for t in &self.trees {
            t.add_importance(&mut acc);
        }
        Ok(acc)
    }

    pub fn to_json(&self) -> Result<String> {
        if self.trees.is_empty() {
            return Err(Error::Model("refusing to save an ensemble without trees".into()));
        }
        let file = ModelFile {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            mode: self.mode,
            config: self.config,
            base_score: self.base_score,
            shrinkage: self.shrinkage,
            feature_names: self.feature_names.clone(),
            trees: self
                .trees
                .iter()
                .map(|t| TreeJson {
                    num_leaves: t.num_leaves(),
                    depth: t.depth(),
                    root: NodeJson::from_arena(t.nodes(), 0),
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)? + "\n")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("corrupt model file: {e}")))?;
        if file.format != MODEL_FORMAT {
            return Err(Error::Model(format!("unexpected format {:?}", file.format)));
        }
        if file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "model version {} unsupported (expected {MODEL_VERSION})",
                file.version
            )));
        }
        if file.trees.is_empty() {
            return Err(Error::Model("model has no trees".into()));
        }
        if file.feature_names.len() != NUM_FEATURES {
            return Err(Error::Model(format!("model declares {} features", file.feature_names.len())));
        }
        if file.mode != file.config.mode || !file.base_score.is_finite() || !file.shrinkage.is_finite() {
            return Err(Error::Model("inconsistent model header".into()));
        }
        let trees = file
            .trees
            .iter()
            .enumerate()
            .map(|(i, t)| {
                let mut nodes = Vec::new();
                t.root.flatten(&mut nodes);
                RegressionTree::from_nodes(nodes).map_err(|e| Error::Model(format!("tree {i}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble {
            mode: file.mode,
            trees,
            shrinkage: file.shrinkage,
            base_score: file.base_score,
            feature_names: file.feature_names,
            config: file.config,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        util::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&util::read_to_string(path)?)
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    mode: Mode,
    config: TrainConfig,
    base_score: f64,
    shrinkage: f64,
    feature_names: Vec<String>,
    trees: Vec<TreeJson>,
}

#[derive(Serialize, Deserialize)]
struct TreeJson {
    num_leaves: usize,
    depth: usize,
    root: NodeJson,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum NodeJson {
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: Box<NodeJson>,
        right: Box<NodeJson>,
    },
    Leaf {
        leaf: f64,
    },
}

impl NodeJson {
    fn from_arena(nodes: &[Node], i: usize) -> Self {
        match nodes[i] {
            Node::Leaf { value } => NodeJson::Leaf { leaf: value },
            Node::Split {
                feature,
                threshold,
                gain,
                left,
                right,
            } => NodeJson::Split {
                feature,
                threshold,
                gain,
                left: Box::new(Self::from_arena(nodes, left)),
                right: Box::new(Self::from_arena(nodes, right)),
            },
        }
    }

    /// Appends this subtree in pre-order; returns the index of its root.
    fn flatten(&self, out: &mut Vec<Node>) -> usize {
        let at = out.len();
        match self {
            NodeJson::Leaf { leaf } => out.push(Node::Leaf { value: *leaf }),
            NodeJson::Split {
                feature,
                threshold,
                gain,
                left,
                right,
            } => {
                out.push(Node::Leaf { value: 0.0 });
                let l = left.flatten(out);
                let r = right.flatten(out);
                out[at] = Node::Split {
                    feature: *feature,
                    threshold: *threshold,
                    gain: *gain,
                    left: l,
                    right: r,
                };
            }
        }
        at
    }
}
