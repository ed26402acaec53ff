use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{ExperimentError, Utterance};
use crate::features::{FeatureSet, FeatureVector};
use crate::metrics::EmotionTriple;

const NOISE_STD: f64 = 0.3;
const SESSIONS: u32 = 5;

/// Seeded stand-in for a licensed corpus.
///
/// Features are standard normal. Each raw label is `3 + 2 tanh(m . f + e)`
/// with `m` a seeded `3 x d` map whose entries are `N(0, 1/d)` (so the
/// pre-activation has unit scale) and `e ~ N(0, 0.3^2)`. Sessions cycle
/// through 1..=5.
pub fn synthetic_corpus(seed: u64, n: usize, d: usize) -> Result<Vec<Utterance>, ExperimentError> {
    if n < 50 {
        return Err(ExperimentError::InvalidConfig(format!(
            "synthetic corpus needs n >= 50, got {n}"
        )));
    }
    if d < 4 {
        return Err(ExperimentError::InvalidConfig(format!(
            "synthetic corpus needs d >= 4, got {d}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map_dist = Normal::new(0.0, (1.0 / d as f64).sqrt()).expect("positive std");
    let noise = Normal::new(0.0, NOISE_STD).expect("positive std");
    let map: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..d).map(|_| map_dist.sample(&mut rng)).collect())
        .collect();

    (0..n)
        .map(|i| {
            let features: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let mut raw = [0.0; 3];
            for (r, row) in raw.iter_mut().zip(&map) {
                let z: f64 = row.iter().zip(&features).map(|(m, f)| m * f).sum();
                *r = 3.0 + 2.0 * (z + noise.sample(&mut rng)).tanh();
            }
            Utterance::new(
                format!("syn{seed}_{i:05}"),
                (i as u32 % SESSIONS) + 1,
                FeatureVector::new(features, FeatureSet::Synthetic)?,
                EmotionTriple::from_array(raw),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_in_range_and_sessions_balanced() {
        let c = synthetic_corpus(1, 500, 20).unwrap();
        assert_eq!(c.len(), 500);
        assert!(c
            .iter()
            .flat_map(|u| u.labels_raw.as_array())
            .all(|v| (1.0..=5.0).contains(&v)));
        for s in 1..=5 {
            assert_eq!(c.iter().filter(|u| u.session == s).count(), 100);
        }
        assert_eq!(c[0].features.len(), 20);
    }

    #[test]
    fn seeded() {
        assert_eq!(
            synthetic_corpus(4, 60, 5).unwrap(),
            synthetic_corpus(4, 60, 5).unwrap()
        );
        assert_ne!(
            synthetic_corpus(4, 60, 5).unwrap(),
            synthetic_corpus(5, 60, 5).unwrap()
        );
    }

    #[test]
    fn preconditions() {
        assert!(synthetic_corpus(0, 49, 5).is_err());
        assert!(synthetic_corpus(0, 50, 3).is_err());
    }
}
