use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{SequenceDataset, SplitTag};
use crate::error::{Error, Result};

/// Randomly assigns `n_train`, `n_val` and `n_test` sequences to the splits.
pub fn split_dataset(
    mut dataset: SequenceDataset,
    n_train: usize,
    n_val: usize,
    n_test: usize,
    seed: u64,
) -> Result<SequenceDataset> {
    let v = dataset.sequences.len();
    if n_train + n_val + n_test != v {
        return Err(Error::Precondition(format!(
            "split counts {n_train}+{n_val}+{n_test} do not add up to {v} sequences"
        )));
    }
    let mut order: Vec<usize> = (0..v).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut tags = vec![SplitTag::Test; v];
    for (pos, &i) in order.iter().enumerate() {
        tags[i] = if pos < n_train {
            SplitTag::Train
        } else if pos < n_train + n_val {
            SplitTag::Val
        } else {
            SplitTag::Test
        };
    }
    dataset.tags = Some(tags);
    Ok(dataset)
}
