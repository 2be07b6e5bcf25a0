//! Small dense helpers shared across modules.
//!
//! Norm conventions: the infinity norm of a matrix is its maximum absolute row
//! sum, the infinity norm of a vector its maximum absolute entry.

use nalgebra::{DMatrix, DVector};

/// Logistic sigmoid, evaluated without overflow for large |x|.
#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Sign with `sign0(0.0) == 0.0`, the subgradient element used for |x| at 0.
#[inline]
pub fn sign0(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Absolute row sums of the horizontal stack of `blocks` (all with equal row count).
pub fn stacked_row_abs_sums(blocks: &[&DMatrix<f64>]) -> Vec<f64> {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    (0..rows)
        .map(|i| {
            blocks
                .iter()
                .map(|b| b.row(i).iter().map(|x| x.abs()).sum::<f64>())
                .sum()
        })
        .collect()
}

/// Index and value of the maximum; ties resolve to the smallest index.
pub fn argmax_first(values: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((i, v)),
        }
    }
    best
}

/// Matrix infinity norm (max absolute row sum).
pub fn inf_norm(m: &DMatrix<f64>) -> f64 {
    stacked_row_abs_sums(&[m]).into_iter().fold(0.0, f64::max)
}

/// Infinity norm of `[blocks... | bias]`.
pub fn stacked_inf_norm(blocks: &[&DMatrix<f64>], bias: &DVector<f64>) -> f64 {
    let mut sums = stacked_row_abs_sums(blocks);
    if sums.is_empty() {
        sums = vec![0.0; bias.len()];
    }
    sums.iter()
        .zip(bias.iter())
        .map(|(s, b)| s + b.abs())
        .fold(0.0, f64::max)
}

/// Vector infinity norm (max absolute entry).
pub fn vec_inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
