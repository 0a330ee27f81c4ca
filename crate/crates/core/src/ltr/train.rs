use std::collections::BTreeMap;

use log::debug;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::lambda::compute_lambdas;
use super::tree::{fit_tree, TreeParams};
use super::{Ensemble, Mode, TrainConfig, RF_FEATURES_PER_SPLIT};
use crate::error::{Error, Result};
use crate::features::{FeatureVector, LabeledInstance};

/// State after a boosting or bagging iteration.
#[derive(Debug, Clone, Copy)]
pub struct Progress<'a> {
    /// Number of trees fitted so far (0 before the first one).
    pub iteration: usize,
    /// Training instances in canonical (topic, doc) order.
    pub instances: &'a [LabeledInstance],
    /// Current model output for each instance.
    pub scores: &'a [f64],
}

pub fn train(instances: &[LabeledInstance], config: &TrainConfig) -> Result<Ensemble> {
    train_with_progress(instances, config, |_| {})
}

/// Trains an ensemble, calling `progress` once before the first tree and
/// once after each tree.
pub fn train_with_progress<F>(instances: &[LabeledInstance], config: &TrainConfig, mut progress: F) -> Result<Ensemble>
where
    F: FnMut(&Progress<'_>),
{
    config.validate()?;
    let data = canonical(instances)?;
    let x: Vec<FeatureVector> = data.iter().map(|i| i.features).collect();
    let y: Vec<f64> = data.iter().map(|i| f64::from(i.grade.unwrap_or(0))).collect();
    let n = data.len();

    let mut tree_params = TreeParams {
        growth: config.growth,
        min_samples_leaf: config.min_samples_leaf,
        features_per_split: None,
        seed: config.seed,
    };
    debug!("training {} on {n} instances: {config:?}", config.mode);

    match config.mode {
        Mode::RandomForest => {
            let mut ensemble = Ensemble::new(*config, 0.0);
            tree_params.features_per_split = Some(RF_FEATURES_PER_SPLIT);
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            let mut sums = vec![0.0; n];
            let mut scores = vec![0.0; n];
            progress(&Progress {
                iteration: 0,
                instances: &data,
                scores: &scores,
            });
            for it in 1..=config.n_trees {
                let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                tree_params.seed = rng.gen();
                let xb: Vec<FeatureVector> = sample.iter().map(|&i| x[i]).collect();
                let gb: Vec<f64> = sample.iter().map(|&i| -y[i]).collect();
                let tree = fit_tree(&xb, &gb, &vec![1.0; n], &tree_params)?;
                for i in 0..n {
                    sums[i] += tree.predict(x[i].as_slice());
                    scores[i] = sums[i] / it as f64;
                }
                ensemble.trees.push(tree);
                progress(&Progress {
                    iteration: it,
                    instances: &data,
                    scores: &scores,
                });
            }
            Ok(ensemble)
        }
        Mode::GbrtPointwise | Mode::Lambdamart => {
            let base = if config.mode == Mode::GbrtPointwise {
                y.iter().sum::<f64>() / n as f64
            } else {
                0.0
            };
            let mut ensemble = Ensemble::new(*config, base);
            let groups = group_ranges(&data);
            let grades: Vec<u32> = data.iter().map(|i| u32::from(i.grade.unwrap_or(0))).collect();
            let mut scores = vec![base; n];
            let mut g = vec![0.0; n];
            let mut h = vec![1.0; n];
            progress(&Progress {
                iteration: 0,
                instances: &data,
                scores: &scores,
            });
            for it in 1..=config.n_trees {
                if config.mode == Mode::GbrtPointwise {
                    for i in 0..n {
                        g[i] = scores[i] - y[i];
                    }
                } else {
                    for r in &groups {
                        let lambdas = compute_lambdas(&scores[r.clone()], &grades[r.clone()], config.ndcg_k, config.sigma)
                            .map_err(|e| e.in_topic(data[r.start].topic_id))?;
                        for (i, l) in r.clone().zip(lambdas) {
                            g[i] = -l.lambda;
                            h[i] = l.hessian;
                        }
                    }
                }
                tree_params.seed = config.seed.wrapping_add(it as u64);
                let tree = fit_tree(&x, &g, &h, &tree_params)?;
                for i in 0..n {
                    scores[i] += ensemble.shrinkage * tree.predict(x[i].as_slice());
                }
                ensemble.trees.push(tree);
                progress(&Progress {
                    iteration: it,
                    instances: &data,
                    scores: &scores,
                });
            }
            Ok(ensemble)
        }
    }
}

fn canonical(instances: &[LabeledInstance]) -> Result<Vec<LabeledInstance>> {
    if instances.is_empty() {
        return Err(Error::domain("cannot train on an empty dataset"));
    }
    if let Some(i) = instances.iter().find(|i| i.grade.is_none()) {
        return Err(Error::domain(format!("instance ({}, {:?}) has no grade", i.topic_id, i.doc_id)));
    }
    if let Some(i) = instances.iter().find(|i| i.features.0.iter().any(|v| !v.is_finite())) {
        return Err(Error::domain(format!("instance ({}, {:?}) has a non-finite feature", i.topic_id, i.doc_id)));
    }
    let mut data = instances.to_vec();
    data.sort_by(|a, b| (a.topic_id, &a.doc_id).cmp(&(b.topic_id, &b.doc_id)));
    if let Some(w) = data.windows(2).find(|w| (w[0].topic_id, &w[0].doc_id) == (w[1].topic_id, &w[1].doc_id)) {
        return Err(Error::Duplicate(format!("instance ({}, {:?})", w[0].topic_id, w[0].doc_id)));
    }
    Ok(data)
}

fn group_ranges(data: &[LabeledInstance]) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=data.len() {
        if i == data.len() || data[i].topic_id != data[start].topic_id {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Counts same-topic pairs whose higher-graded member does not score
/// strictly higher. Ungraded instances are ignored.
pub fn pairwise_inversions(instances: &[LabeledInstance], scores: &[f64]) -> usize {
    let mut by_topic: BTreeMap<_, Vec<(u8, f64)>> = BTreeMap::new();
    for (inst, &s) in instances.iter().zip(scores) {
        if let Some(g) = inst.grade {
            by_topic.entry(inst.topic_id).or_default().push((g, s));
        }
    }
    let mut count = 0;
    for docs in by_topic.values() {
        for a in docs {
            for b in docs {
                if a.0 > b.0 && a.1 <= b.1 {
                    count += 1;
                }
            }
        }
    }
    count
}
