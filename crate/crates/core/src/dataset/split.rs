use super::{DatasetError, Label, LabeledSample, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<LabeledSample>,
    pub test: Vec<LabeledSample>,
    pub seed: u64,
}

/// Stratified 3:1 train/test split. Each class is ordered by content hash,
/// shuffled under `seed`, and a rounded quarter goes to the test side, so
/// the result does not depend on input order.
pub fn split(samples: Vec<LabeledSample>, seed: u64) -> Result<DatasetSplit> {
    if samples.len() < 4 {
        return Err(DatasetError::TooFewSamples(samples.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let (mut spam, mut normal): (Vec<_>, Vec<_>) =
        samples.into_iter().partition(|s| s.label == Label::Spam);
    for (label, class) in [(Label::Spam, &mut spam), (Label::Normal, &mut normal)] {
        match class.len() {
            0 => continue,
            1 => return Err(DatasetError::ClassTooSmall { label, count: 1 }),
            _ => {}
        }
        class.sort_by_key(|s| s.content_hash);
        class.shuffle(&mut rng);
        let n_test = (class.len() + 2) / 4;
        let rest = class.split_off(n_test);
        test.append(class);
        train.extend(rest);
    }
    Ok(DatasetSplit { train, test, seed })
}
