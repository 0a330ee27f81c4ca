//! Exact greedy regression trees on a second-order objective.
//!
//! A node holding gradient sum `G` and hessian sum `H` predicts `-G/H`; a
//! split into left/right gains `GL²/HL + GR²/HR - G²/H`. With `g = -y` and
//! `h = 1` this is plain variance reduction and the leaf value is the mean
//! target, which is how the random forest uses it.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureVector, NUM_FEATURES};

/// Floor applied to hessian sums before dividing.
pub const MIN_HESSIAN: f64 = 1e-6;

/// Growth strategy and its size limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Growth {
    /// Level by level down to `max_depth` (a stump has depth 1).
    DepthWise { max_depth: usize },
    /// Best-gain leaf first until `num_leaves` leaves exist.
    LeafWise { num_leaves: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub growth: Growth,
    pub min_samples_leaf: usize,
    /// Features drawn (without replacement) per split; all when `None`.
    pub features_per_split: Option<usize>,
    pub seed: u64,
}

impl TreeParams {
    pub fn new(growth: Growth) -> Self {
        TreeParams {
            growth,
            min_samples_leaf: 1,
            features_per_split: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        gain: f64,
        left: usize,
        right: usize,
    },
}

/// A binary tree stored as an arena rooted at index 0. Instances with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn leaf(value: f64) -> Self {
        RegressionTree {
            nodes: vec![Node::Leaf { value }],
        }
    }

    /// Builds a tree from an arena, checking that it is a proper binary tree
    /// over valid feature indices.
    pub fn from_nodes(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::domain("tree without nodes"));
        }
        let mut referenced = vec![false; nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            match *node {
                Node::Leaf { value } if !value.is_finite() => {
                    return Err(Error::domain(format!("node {i}: non-finite leaf value")));
                }
                Node::Leaf { .. } => {}
                Node::Split {
                    feature,
                    threshold,
                    gain,
                    left,
                    right,
                } => {
                    if feature >= NUM_FEATURES || !threshold.is_finite() || !gain.is_finite() {
                        return Err(Error::domain(format!("node {i}: invalid split")));
                    }
                    for child in [left, right] {
                        if child <= i || child >= nodes.len() || referenced[child] {
                            return Err(Error::domain(format!("node {i}: bad child {child}")));
                        }
                        referenced[child] = true;
                    }
                }
            }
        }
        if referenced.iter().skip(1).any(|r| !r) {
            return Err(Error::domain("tree has unreachable nodes"));
        }
        Ok(RegressionTree { nodes })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf { .. })).count()
    }

    /// Number of splits on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    /// Adds each split's gain to its feature's slot.
    pub fn add_importance(&self, acc: &mut [f64; NUM_FEATURES]) {
        for node in &self.nodes {
            if let Node::Split { feature, gain, .. } = *node {
                acc[feature] += gain;
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Pending {
    node: usize,
    samples: Vec<usize>,
    depth: usize,
    split: Option<Split>,
}

struct Builder<'a> {
    x: &'a [FeatureVector],
    g: &'a [f64],
    h: &'a [f64],
    params: &'a TreeParams,
    rng: ChaCha8Rng,
    nodes: Vec<Node>,
}

fn leaf_value(g: f64, h: f64) -> f64 {
    -g / h.max(MIN_HESSIAN)
}

fn score(g: f64, h: f64) -> f64 {
    g * g / h.max(MIN_HESSIAN)
}

impl Builder<'_> {
    fn sums(&self, samples: &[usize]) -> (f64, f64) {
        samples
            .iter()
            .fold((0.0, 0.0), |(g, h), &i| (g + self.g[i], h + self.h[i]))
    }

    /// Whether separate leaves could lower the objective at all; false when
    /// every sample with curvature already wants the same leaf value.
    fn reducible(&self, samples: &[usize]) -> bool {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &i in samples {
            if self.h[i] > 0.0 {
                let v = -self.g[i] / self.h[i];
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        lo.is_finite() && hi - lo > 1e-12 * (1.0 + hi.abs().max(lo.abs()))
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        match self.params.features_per_split {
            Some(m) if m < NUM_FEATURES => {
                let mut f = sample(&mut self.rng, NUM_FEATURES, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..NUM_FEATURES).collect(),
        }
    }

    fn best_split(&mut self, samples: &[usize]) -> Option<Split> {
        let min_leaf = self.params.min_samples_leaf.max(1);
        if samples.len() < 2 * min_leaf || !self.reducible(samples) {
            return None;
        }
        let (g_total, h_total) = self.sums(samples);
        let parent = score(g_total, h_total);
        let mut best: Option<Split> = None;
        let mut sorted = samples.to_vec();
        for feature in self.candidate_features() {
            let x = self.x;
            sorted.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
            let (mut gl, mut hl) = (0.0, 0.0);
            for p in 0..sorted.len() - 1 {
                gl += self.g[sorted[p]];
                hl += self.h[sorted[p]];
                let lo = x[sorted[p]][feature];
                let hi = x[sorted[p + 1]][feature];
                let n_left = p + 1;
                if lo == hi || n_left < min_leaf || sorted.len() - n_left < min_leaf {
                    continue;
                }
                let gain = score(gl, hl) + score(g_total - gl, h_total - hl) - parent;
                if best.is_none_or(|b| gain > b.gain) {
                    let mid = lo + (hi - lo) / 2.0;
                    let threshold = if mid < hi { mid } else { lo };
                    best = Some(Split {
                        feature,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best
    }

    fn push_leaf(&mut self, samples: &[usize]) -> usize {
        let (g, h) = self.sums(samples);
        self.nodes.push(Node::Leaf {
            value: leaf_value(g, h),
        });
        self.nodes.len() - 1
    }

    fn pending(&mut self, samples: Vec<usize>, depth: usize) -> Pending {
        let node = self.push_leaf(&samples);
        let can_grow = match self.params.growth {
            Growth::DepthWise { max_depth } => depth < max_depth,
            Growth::LeafWise { .. } => true,
        };
        let split = if can_grow { self.best_split(&samples) } else { None };
        Pending {
            node,
            samples,
            depth,
            split,
        }
    }

    /// Turns leaf `p.node` into a split node and returns the two children.
    fn apply(&mut self, p: Pending) -> (Pending, Pending) {
        let s = p.split.expect("apply called on a splittable node");
        let (left, right): (Vec<usize>, Vec<usize>) =
            p.samples.iter().partition(|&&i| self.x[i][s.feature] <= s.threshold);
        let l = self.pending(left, p.depth + 1);
        let r = self.pending(right, p.depth + 1);
        self.nodes[p.node] = Node::Split {
            feature: s.feature,
            threshold: s.threshold,
            gain: s.gain.max(0.0),
            left: l.node,
            right: r.node,
        };
        (l, r)
    }
}

/// Fits one tree to gradients and hessians.
///
/// Depth-wise growth splits every reducible node down to `max_depth`, even
/// when the best split has zero gain (an XOR pattern needs that first
/// split). Leaf-wise growth repeatedly splits the leaf with the largest
/// positive gain until `num_leaves` leaves exist. Ties between candidate
/// splits go to the lower feature index and then the lower threshold.
pub fn fit_tree(
    x: &[FeatureVector],
    gradients: &[f64],
    hessians: &[f64],
    params: &TreeParams,
) -> Result<RegressionTree> {
    if x.is_empty() {
        return Err(Error::domain("cannot fit a tree to zero instances"));
    }
    if x.len() != gradients.len() || x.len() != hessians.len() {
        return Err(Error::domain(format!(
            "length mismatch: {} instances, {} gradients, {} hessians",
            x.len(),
            gradients.len(),
            hessians.len()
        )));
    }
    if gradients.iter().chain(hessians).any(|v| !v.is_finite()) || hessians.iter().any(|h| *h < 0.0) {
        return Err(Error::domain("gradients must be finite and hessians non-negative"));
    }
    match params.growth {
        Growth::DepthWise { max_depth: 0 } => return Err(Error::domain("max_depth must be positive")),
        Growth::LeafWise { num_leaves } if num_leaves < 2 => {
            return Err(Error::domain("num_leaves must be at least 2"))
        }
        _ => {}
    }

    let mut b = Builder {
        x,
        g: gradients,
        h: hessians,
        params,
        rng: ChaCha8Rng::seed_from_u64(params.seed),
        nodes: Vec::new(),
    };
    let root = b.pending((0..x.len()).collect(), 0);

    match params.growth {
        Growth::DepthWise { .. } => {
            let mut queue = std::collections::VecDeque::from([root]);
            while let Some(p) = queue.pop_front() {
                if p.split.is_some_and(|s| s.gain >= 0.0) {
                    let (l, r) = b.apply(p);
                    queue.push_back(l);
                    queue.push_back(r);
                }
            }
        }
        Growth::LeafWise { num_leaves } => {
            let mut open = vec![root];
            let mut leaves = 1;
            while leaves < num_leaves {
                let best = open
                    .iter()
                    .enumerate()
                    .filter_map(|(i, p)| p.split.filter(|s| s.gain > 0.0).map(|s| (i, s.gain, p.node)))
                    .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)));
                let Some((i, _, _)) = best else { break };
                let (l, r) = b.apply(open.swap_remove(i));
                open.push(l);
                open.push(r);
                leaves += 1;
            }
        }
    }
    Ok(RegressionTree { nodes: b.nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(a: f64, b: f64) -> FeatureVector {
        let mut v = [0.0; NUM_FEATURES];
        v[0] = a;
        v[1] = b;
        FeatureVector(v)
    }

    /// Squared-error fit of targets `y`: gradients `-y`, unit hessians.
    fn fit_targets(x: &[FeatureVector], y: &[f64], growth: Growth) -> RegressionTree {
        let g: Vec<f64> = y.iter().map(|v| -v).collect();
        fit_tree(x, &g, &vec![1.0; y.len()], &TreeParams::new(growth)).unwrap()
    }

    fn sse(tree: &RegressionTree, x: &[FeatureVector], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(x, y)| (tree.predict(&x.0) - y).powi(2)).sum()
    }

    #[test]
    fn single_instance_single_leaf() {
        let t = fit_targets(&[fv(1.0, 2.0)], &[3.5], Growth::DepthWise { max_depth: 3 });
        assert_eq!(t.nodes(), &[Node::Leaf { value: 3.5 }]);
        let newton = fit_tree(&[fv(0.0, 0.0)], &[2.0], &[4.0], &TreeParams::new(Growth::LeafWise { num_leaves: 4 })).unwrap();
        assert_eq!(newton.predict(&[0.0; 8]), -0.5);
    }

    #[test]
    fn separable_stump() {
        let x = [fv(0.0, 1.0), fv(0.0, 5.0)];
        let t = fit_targets(&x, &[0.0, 1.0], Growth::DepthWise { max_depth: 1 });
        match t.nodes()[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 1);
                assert_eq!(threshold, 3.0);
            }
            n => panic!("expected split, got {n:?}"),
        }
        assert_eq!(sse(&t, &x, &[0.0, 1.0]), 0.0);
    }

    #[test]
    fn xor_needs_depth_two() {
        let x = [fv(0.0, 0.0), fv(0.0, 1.0), fv(1.0, 0.0), fv(1.0, 1.0)];
        let y = [0.0, 1.0, 1.0, 0.0];
        let deep = fit_targets(&x, &y, Growth::DepthWise { max_depth: 2 });
        assert_eq!(sse(&deep, &x, &y), 0.0);
        assert_eq!(deep.depth(), 2);
        let stump = fit_targets(&x, &y, Growth::DepthWise { max_depth: 1 });
        assert!(sse(&stump, &x, &y) > 0.0);
    }

    #[test]
    fn leaf_wise_respects_leaf_budget() {
        let x: Vec<FeatureVector> = (0..64).map(|i| fv(i as f64, (i % 7) as f64)).collect();
        let y: Vec<f64> = (0..64).map(|i| ((i * 37) % 11) as f64).collect();
        for budget in [2, 5, 15] {
            let t = fit_targets(&x, &y, Growth::LeafWise { num_leaves: budget });
            assert_eq!(t.num_leaves(), budget);
        }
    }

    #[test]
    fn min_samples_leaf_is_enforced() {
        let x: Vec<FeatureVector> = (0..10).map(|i| fv(i as f64, 0.0)).collect();
        let y: Vec<f64> = (0..10).map(|i| if i == 0 { 10.0 } else { 0.0 }).collect();
        let g: Vec<f64> = y.iter().map(|v| -v).collect();
        let mut p = TreeParams::new(Growth::DepthWise { max_depth: 1 });
        p.min_samples_leaf = 3;
        let t = fit_tree(&x, &g, &[1.0; 10], &p).unwrap();
        let left = (0..10).filter(|&i| t.predict(&x[i].0) == t.predict(&x[0].0)).count();
        assert!(left >= 3 && left <= 7);
    }

    #[test]
    fn pure_node_stays_leaf() {
        let x: Vec<FeatureVector> = (0..5).map(|i| fv(i as f64, 0.0)).collect();
        let t = fit_targets(&x, &[2.0; 5], Growth::DepthWise { max_depth: 4 });
        assert_eq!(t.num_leaves(), 1);
    }

    #[test]
    fn input_errors() {
        let p = TreeParams::new(Growth::DepthWise { max_depth: 2 });
        assert!(fit_tree(&[], &[], &[], &p).is_err());
        assert!(fit_tree(&[fv(0.0, 0.0)], &[1.0, 2.0], &[1.0], &p).is_err());
        assert!(fit_tree(&[fv(0.0, 0.0)], &[1.0], &[-1.0], &p).is_err());
        let p = TreeParams::new(Growth::LeafWise { num_leaves: 1 });
        assert!(fit_tree(&[fv(0.0, 0.0)], &[1.0], &[1.0], &p).is_err());
    }

    #[test]
    fn arena_validation() {
        let ok = vec![
            Node::Split { feature: 1, threshold: 0.5, gain: 1.0, left: 1, right: 2 },
            Node::Leaf { value: 0.0 },
            Node::Leaf { value: 1.0 },
        ];
        assert!(RegressionTree::from_nodes(ok.clone()).is_ok());
        let mut bad = ok.clone();
        bad[0] = Node::Split { feature: 8, threshold: 0.5, gain: 1.0, left: 1, right: 2 };
        assert!(RegressionTree::from_nodes(bad).is_err());
        let mut shared = ok;
        shared[0] = Node::Split { feature: 0, threshold: 0.5, gain: 1.0, left: 1, right: 1 };
        assert!(RegressionTree::from_nodes(shared).is_err());
    }
}
