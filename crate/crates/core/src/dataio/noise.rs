use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Adds zero-mean Gaussian noise to every output channel with variance
/// `var(clean channel) / snr`, the variance taken over all sequences joined
/// end to end (population variance).
///
/// The normal draws depend only on `seed` and the data shape, so two SNR
/// values with the same seed give noise arrays in ratio `sqrt(snr1 / snr2)`.
pub fn add_noise_snr(seqs: &[Vec<DVector<f64>>], snr: f64, seed: u64) -> Result<Vec<Vec<DVector<f64>>>> {
    if !(snr > 0.0) {
        return Err(Error::Precondition(format!("SNR must be positive, got {snr}")));
    }
    let n_y = seqs.iter().flatten().next().map_or(0, |v| v.len());
    let total = seqs.iter().map(Vec::len).sum::<usize>() as f64;
    let mut sd = vec![0.0; n_y];
    for (ch, s) in sd.iter_mut().enumerate() {
        let mean = seqs.iter().flatten().map(|v| v[ch]).sum::<f64>() / total;
        let var = seqs.iter().flatten().map(|v| (v[ch] - mean).powi(2)).sum::<f64>() / total;
        if var <= 0.0 {
            return Err(Error::Precondition(format!(
                "output channel {} has zero variance; SNR is undefined",
                ch + 1
            )));
        }
        *s = (var / snr).sqrt();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(seqs
        .iter()
        .map(|seq| {
            seq.iter()
                .map(|v| DVector::from_fn(n_y, |ch, _| v[ch] + sd[ch] * rng.sample::<f64, _>(StandardNormal)))
                .collect()
        })
        .collect())
}
