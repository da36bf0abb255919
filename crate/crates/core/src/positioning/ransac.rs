use itertools::Itertools;
use rand::Rng;

use super::{trilaterate_ls, PositionEstimate, PositioningError, RangeObservation, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Residual bound for an inlier; three times the largest observation
    /// sigma when absent.
    pub threshold_m: Option<f64>,
    pub sample_size: usize,
    /// Smallest consensus accepted; one more than the sample when absent.
    pub min_inliers: Option<usize>,
    pub solver: SolverConfig,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            iterations: 200,
            threshold_m: None,
            sample_size: 4,
            min_inliers: None,
            solver: SolverConfig::default(),
        }
    }
}

/// Noiseless data still needs room for floating point residue.
const THRESHOLD_FLOOR_M: f64 = 1e-6;

/// Consensus trilateration. When every size-`sample_size` subset fits in the
/// iteration budget they are all tried in lexicographic order, otherwise
/// subsets are drawn at random from `rng`.
pub fn ransac_trilaterate<R: Rng + ?Sized>(
    obs: &[RangeObservation],
    config: &RansacConfig,
    rng: &mut R,
) -> Result<PositionEstimate, PositioningError> {
    let k = config.sample_size;
    if obs.len() < k + 1 {
        return Err(PositioningError::TooFewObservations { needed: k + 1, got: obs.len() });
    }
    let threshold = config
        .threshold_m
        .unwrap_or_else(|| 3.0 * obs.iter().map(|o| o.sigma_m).fold(0.0, f64::max))
        .max(THRESHOLD_FLOOR_M);
    let min_inliers = config.min_inliers.unwrap_or(k + 1);

    let samples: Vec<Vec<usize>> = if binomial(obs.len(), k) <= config.iterations as u128 {
        (0..obs.len()).combinations(k).collect()
    } else {
        (0..config.iterations)
            .map(|_| {
                let mut s = rand::seq::index::sample(rng, obs.len(), k).into_vec();
                s.sort_unstable();
                s
            })
            .collect()
    };

    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut subset = Vec::with_capacity(k);
    for sample in samples {
        subset.clear();
        subset.extend(sample.iter().map(|&i| obs[i]));
        let Ok(fit) = trilaterate_ls(&subset, &config.solver) else {
            continue;
        };
        let residuals: Vec<f64> =
            obs.iter().map(|o| ((fit.position - o.anchor).norm() - o.range_m).abs()).collect();
        let inliers: Vec<usize> = (0..obs.len()).filter(|&i| residuals[i] <= threshold).collect();
        let rms = (inliers.iter().map(|&i| residuals[i].powi(2)).sum::<f64>() / inliers.len().max(1) as f64).sqrt();
        let better = match &best {
            None => true,
            Some((b, b_rms)) => inliers.len() > b.len() || (inliers.len() == b.len() && rms < *b_rms),
        };
        if better {
            best = Some((inliers, rms));
        }
    }

    let Some((inliers, _)) = best.filter(|(set, _)| set.len() >= min_inliers) else {
        return Err(PositioningError::NoConsensus(min_inliers));
    };
    let chosen: Vec<RangeObservation> = inliers.iter().map(|&i| obs[i]).collect();
    let mut estimate = trilaterate_ls(&chosen, &config.solver)?;
    estimate.inliers = inliers;
    Ok(estimate)
}

fn binomial(n: usize, k: usize) -> u128 {
    (0..k as u128).fold(1u128, |acc, i| acc * (n as u128 - i) / (i + 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{pos, Position};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn anchors() -> Vec<Position> {
        vec![
            pos(0.0, 0.0, 2.4),
            pos(8.0, 0.0, 0.3),
            pos(0.0, 4.0, 1.0),
            pos(8.0, 4.0, 2.4),
            pos(4.0, 0.0, 1.8),
            pos(4.0, 4.0, 0.6),
            pos(2.0, 2.0, 2.4),
            pos(6.0, 1.0, 0.0),
        ]
    }

    fn obs(bias: &[(usize, f64)]) -> Vec<RangeObservation> {
        let t = pos(3.0, 1.5, 1.1);
        anchors()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let b = bias.iter().find(|(j, _)| *j == i).map_or(0.0, |x| x.1);
                RangeObservation::from_range(i as u32, *a, (a - t).norm() + b, 0.0)
            })
            .collect()
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(8, 4), 70);
        assert_eq!(binomial(16, 4), 1820);
        assert_eq!(binomial(4, 4), 1);
    }

    #[test]
    fn rejects_biased_ranges() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = ransac_trilaterate(&obs(&[(2, 1.5), (5, 1.5)]), &RansacConfig::default(), &mut rng).unwrap();
        assert_eq!(est.inliers, vec![0, 1, 3, 4, 6, 7]);
        assert!((est.position - pos(3.0, 1.5, 1.1)).norm() < 1e-9);
    }

    #[test]
    fn clean_data_keeps_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let est = ransac_trilaterate(&obs(&[]), &RansacConfig::default(), &mut rng).unwrap();
        assert_eq!(est.inliers, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn random_sampling_path() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = RansacConfig { iterations: 30, ..Default::default() };
        let est = ransac_trilaterate(&obs(&[(1, 2.0)]), &cfg, &mut rng).unwrap();
        assert!(!est.inliers.contains(&1));
        assert!((est.position - pos(3.0, 1.5, 1.1)).norm() < 1e-9);
    }

    #[test]
    fn no_consensus_when_every_range_disagrees() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let wild: Vec<(usize, f64)> = (0..8).map(|i| (i, 0.37 * (i * i) as f64)).collect();
        let cfg = RansacConfig { min_inliers: Some(7), ..Default::default() };
        assert_eq!(ransac_trilaterate(&obs(&wild), &cfg, &mut rng), Err(PositioningError::NoConsensus(7)));
    }
}
