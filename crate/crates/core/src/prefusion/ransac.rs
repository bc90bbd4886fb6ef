use std::collections::BTreeSet;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{PrefusionConfig, SessionAlignment};
use crate::error::{Error, Result};

/// Inlier threshold in units of the scale standard deviation.
pub const K_SIGMA: f64 = 2.0;

/// Below this spread every session is declared an inlier.
const MIN_SPREAD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleConsensus {
    /// Mean raw scale of the winning inlier set.
    pub best_scale: f64,
    /// Session ids of the inliers.
    pub inliers: BTreeSet<usize>,
    /// Session whose scale was the winning candidate; `None` when sampling was skipped.
    pub candidate: Option<usize>,
    pub threshold: f64,
    pub alpha: f64,
    /// Softmax sampling weights, one per input alignment.
    pub probabilities: Vec<f64>,
}

/// `p_k = exp(α ℓ_k) / Σ exp(α ℓ_j)`, evaluated with the max subtracted.
pub fn sampling_probabilities(linearities: &[f64], alpha: f64) -> Vec<f64> {
    let max = linearities.iter().map(|l| alpha * l).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = linearities.iter().map(|l| (alpha * l - max).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn population_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Consensus over per-session scales with linearity-weighted candidate sampling.
///
/// Each round draws one session by its softmax weight and uses its raw scale as
/// the candidate; sessions within `K_SIGMA·σ` of it are inliers. The winner has
/// the most inliers, then the larger summed inlier linearity, then the lower
/// candidate id.
pub fn scale_ransac(alignments: &[SessionAlignment], cfg: &PrefusionConfig) -> Result<ScaleConsensus> {
    if alignments.is_empty() {
        return Err(Error::invalid("scale consensus needs at least one session"));
    }
    if let Some(a) = alignments.iter().find(|a| !(a.raw_scale > 0.0)) {
        return Err(Error::invalid(format!(
            "session {} has non-positive scale {}",
            a.session_id, a.raw_scale
        )));
    }
    let scales: Vec<f64> = alignments.iter().map(|a| a.raw_scale).collect();
    let linearities: Vec<f64> = alignments.iter().map(|a| a.linearity).collect();
    let (mean, sigma) = population_std(&scales);

    if alignments.len() == 1 || sigma < MIN_SPREAD {
        return Ok(ScaleConsensus {
            best_scale: mean,
            inliers: alignments.iter().map(|a| a.session_id).collect(),
            candidate: None,
            threshold: K_SIGMA * sigma,
            alpha: f64::INFINITY,
            probabilities: vec![1.0 / alignments.len() as f64; alignments.len()],
        });
    }

    let threshold = K_SIGMA * sigma;
    let alpha = mean / sigma;
    let probabilities = sampling_probabilities(&linearities, alpha);
    let sampler =
        WeightedIndex::new(&probabilities).map_err(|e| Error::degenerate(format!("sampling weights: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // (count, summed linearity, candidate index)
    let mut best: Option<(usize, f64, usize)> = None;
    for _ in 0..cfg.ransac_iterations.max(1) {
        let c = sampler.sample(&mut rng);
        let candidate = scales[c];
        let (count, lin) = scales
            .iter()
            .zip(&linearities)
            .filter(|(s, _)| (*s - candidate).abs() < threshold)
            .fold((0usize, 0.0), |(n, l), (_, li)| (n + 1, l + li));
        let better = match best {
            None => true,
            Some((bn, bl, bc)) => {
                count > bn
                    || (count == bn && lin > bl)
                    || (count == bn && lin == bl && alignments[c].session_id < alignments[bc].session_id)
            }
        };
        if better {
            best = Some((count, lin, c));
        }
    }

    let (_, _, c) = best.expect("at least one iteration");
    let candidate = scales[c];
    let members: Vec<usize> = (0..scales.len())
        .filter(|&k| (scales[k] - candidate).abs() < threshold)
        .collect();
    let best_scale = members.iter().map(|&k| scales[k]).sum::<f64>() / members.len() as f64;
    Ok(ScaleConsensus {
        best_scale,
        inliers: members.iter().map(|&k| alignments[k].session_id).collect(),
        candidate: Some(alignments[c].session_id),
        threshold,
        alpha,
        probabilities,
    })
}
