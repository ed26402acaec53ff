use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{ExperimentError, Utterance};

/// Train / validation / test partitions of one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<Utterance>,
    pub validation: Vec<Utterance>,
    pub test: Vec<Utterance>,
}

impl DatasetSplit {
    pub fn len(&self) -> usize {
        self.train.len() + self.validation.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_dim(&self) -> Option<usize> {
        self.train
            .iter()
            .chain(&self.validation)
            .chain(&self.test)
            .next()
            .map(|u| u.features.len())
    }
}

/// Leave-one-session-out: every utterance of `test_session` becomes the test
/// partition; the remainder is shuffled with `seed` and the first
/// `floor(val_fraction * len)` utterances become validation.
pub fn loso_split(
    data: &[Utterance],
    test_session: u32,
    val_fraction: f64,
    seed: u64,
) -> Result<DatasetSplit, ExperimentError> {
    if !(val_fraction > 0.0 && val_fraction < 1.0) {
        return Err(ExperimentError::InvalidConfig(format!(
            "val_fraction {val_fraction} must lie in (0, 1)"
        )));
    }
    let mut ids = HashSet::with_capacity(data.len());
    if let Some(dup) = data.iter().find(|u| !ids.insert(u.id.as_str())) {
        return Err(ExperimentError::InvalidConfig(format!(
            "duplicate utterance id {:?}",
            dup.id
        )));
    }
    let (test, mut rest): (Vec<_>, Vec<_>) = data
        .iter()
        .cloned()
        .partition(|u| u.session == test_session);
    if test.is_empty() {
        return Err(ExperimentError::UnknownSession(test_session));
    }
    if rest.is_empty() {
        return Err(ExperimentError::EmptyRemainder);
    }
    rest.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = (val_fraction * rest.len() as f64).floor() as usize;
    let train = rest.split_off(n_val);
    Ok(DatasetSplit {
        train,
        validation: rest,
        test,
    })
}
