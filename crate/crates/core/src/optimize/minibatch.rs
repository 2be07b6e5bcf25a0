use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Random partition of `0..n` into `n_mb` disjoint index sets whose sizes
/// differ by at most one (larger sets first).
pub fn split_minibatches(n: usize, n_mb: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    split_minibatches_with(n, n_mb, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub(crate) fn split_minibatches_with(n: usize, n_mb: usize, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<usize>>> {
    if n_mb == 0 || n_mb > n {
        return Err(Error::Precondition(format!(
            "cannot split {n} training sequences into {n_mb} non-empty mini-batches"
        )));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let (base, extra) = (n / n_mb, n % n_mb);
    let mut out = Vec::with_capacity(n_mb);
    let mut start = 0;
    for b in 0..n_mb {
        let len = base + usize::from(b < extra);
        out.push(idx[start..start + len].to_vec());
        start += len;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes() {
        let s = split_minibatches(15, 3, 0).unwrap();
        assert_eq!(s.iter().map(Vec::len).collect::<Vec<_>>(), vec![5, 5, 5]);
        let s = split_minibatches(10, 3, 0).unwrap();
        assert_eq!(s.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 3, 3]);
        let mut all: Vec<usize> = s.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn deterministic_and_checked() {
        assert_eq!(split_minibatches(9, 2, 4).unwrap(), split_minibatches(9, 2, 4).unwrap());
        assert!(split_minibatches(3, 4, 0).is_err());
        assert!(split_minibatches(3, 0, 0).is_err());
    }
}
