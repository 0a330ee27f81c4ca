//! LambdaRank pseudo-gradients for one query group.

use crate::error::{Error, Result};
use crate::eval::{discount_at, ideal_dcg_at_k, Gain};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LambdaPair {
    /// Positive values push the document up the ranking.
    pub lambda: f64,
    pub hessian: f64,
}

/// Ranks of a group under the current scores, ordered by descending score
/// and then by position in the group.
#[derive(Debug, Clone)]
pub struct SwapContext<'a> {
    grades: &'a [u32],
    ranks: Vec<usize>,
    ideal: f64,
    k: usize,
    gain: Gain,
}

impl<'a> SwapContext<'a> {
    pub fn new(scores: &[f64], grades: &'a [u32], k: usize, gain: Gain) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("NDCG cutoff k must be at least 1"));
        }
        if scores.len() != grades.len() || scores.is_empty() {
            return Err(Error::domain(format!(
                "need equally many scores and grades (at least one), got {} and {}",
                scores.len(),
                grades.len()
            )));
        }
        if let Some(s) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::domain(format!("non-finite score {s}")));
        }
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let mut ranks = vec![0; scores.len()];
        for (pos, &doc) in order.iter().enumerate() {
            ranks[doc] = pos + 1;
        }
        Ok(SwapContext {
            grades,
            ranks,
            ideal: ideal_dcg_at_k(grades, k, gain),
            k,
            gain,
        })
    }

    /// 1-based rank of document `i`.
    pub fn rank(&self, i: usize) -> usize {
        self.ranks[i]
    }

    /// |NDCG@k change| from swapping documents `i` and `j` in the current
    /// ranking.
    pub fn delta_ndcg(&self, i: usize, j: usize) -> f64 {
        if self.ideal == 0.0 {
            return 0.0;
        }
        let gain_diff = self.gain.of(self.grades[i]) - self.gain.of(self.grades[j]);
        let disc_diff = discount_at(self.ranks[i], self.k) - discount_at(self.ranks[j], self.k);
        (gain_diff * disc_diff).abs() / self.ideal
    }
}

/// Accumulates the logistic pairwise gradient `sigma * rho * |dNDCG|` and its
/// curvature `sigma^2 * rho * (1 - rho) * |dNDCG|` over every pair with
/// distinct grades, where `rho = 1 / (1 + exp(sigma * (s_hi - s_lo)))`.
pub fn compute_lambdas(scores: &[f64], grades: &[u32], k: usize, sigma: f64) -> Result<Vec<LambdaPair>> {
    compute_lambdas_with(scores, grades, k, sigma, Gain::Exponential)
}

pub fn compute_lambdas_with(
    scores: &[f64],
    grades: &[u32],
    k: usize,
    sigma: f64,
    gain: Gain,
) -> Result<Vec<LambdaPair>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::domain(format!("sigma must be positive, got {sigma}")));
    }
    let ctx = SwapContext::new(scores, grades, k, gain)?;
    let mut out = vec![LambdaPair::default(); scores.len()];
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if grades[i] <= grades[j] {
                continue;
            }
            let delta = ctx.delta_ndcg(i, j);
            if delta == 0.0 {
                continue;
            }
            let rho = 1.0 / (1.0 + (sigma * (scores[i] - scores[j])).exp());
            let grad = sigma * rho * delta;
            let hess = sigma * sigma * rho * (1.0 - rho) * delta;
            out[i].lambda += grad;
            out[j].lambda -= grad;
            out[i].hessian += hess;
            out[j].hessian += hess;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_docs_hand_value() {
        let l = compute_lambdas(&[0.0, 0.0], &[2, 0], 2, 1.0).unwrap();
        let expected = 0.5 * (3.0 - 3.0 / 3f64.log2()).abs() / 3.0;
        assert!((l[0].lambda - expected).abs() < 1e-15);
        assert!((l[1].lambda + expected).abs() < 1e-15);
        assert!((expected - 0.1845).abs() < 1e-4);
        assert!((l[0].hessian - 0.5 * expected).abs() < 1e-15);
    }

    #[test]
    fn degenerate_groups() {
        for l in compute_lambdas(&[0.3, 0.1, 0.2], &[1, 1, 1], 5, 1.0).unwrap() {
            assert_eq!(l, LambdaPair::default());
        }
        assert_eq!(compute_lambdas(&[1.0], &[2], 5, 1.0).unwrap(), vec![LambdaPair::default()]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(compute_lambdas(&[0.0], &[1], 0, 1.0).is_err());
        assert!(compute_lambdas(&[0.0, 1.0], &[1], 5, 1.0).is_err());
        assert!(compute_lambdas(&[0.0], &[1], 5, 0.0).is_err());
        assert!(compute_lambdas(&[f64::NAN], &[1], 5, 1.0).is_err());
    }

    #[test]
    fn misordered_pair_beyond_cutoff_gets_no_gradient() {
        // ranks 3 and 4 both fall outside k = 2
        let l = compute_lambdas(&[4.0, 3.0, 2.0, 1.0], &[0, 0, 0, 2], 2, 1.0).unwrap();
        assert!(l[3].lambda > 0.0);
        assert_eq!(l[2].lambda, 0.0);
    }
}
