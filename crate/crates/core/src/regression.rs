//! Dictionary regression shared by dynamics, feedback-law and desire-map fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::expansion::{BasisTerm, Expansion};
use crate::linalg::{column_norms, ridge_lstsq};

const MAX_PRUNE_ROUNDS: usize = 50;

/// Relative column norm under which a feature counts as identically zero.
const ZERO_COLUMN: f64 = 1e-14;

pub(crate) struct Fit {
    pub expansion: Expansion,
    /// Root-mean-square (over samples) of the Euclidean residual norm.
    pub rms: f64,
}

/// Fits `targets[k] ≈ E(xs[k], ys[k])` over `terms`, one output at a time.
///
/// Each output is solved by ridge least squares, then coefficients with magnitude
/// below `threshold` are pruned and the remaining terms refit until the support is stable.
#[allow(clippy::too_many_arguments)]
pub(crate) fn fit_expansion(
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    targets: &[Vec<f64>],
    terms: &[BasisTerm],
    x_dim: usize,
    y_dim: usize,
    ridge: f64,
    threshold: f64,
) -> Result<Fit> {
    let n = targets.len();
    let out_dim = targets.first().map_or(0, Vec::len);
    let p = terms.len();
    let features = DMatrix::from_fn(n, p, |k, j| terms[j].eval(&xs[k], &ys[k]));
    let norms = column_norms(&features);
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    if p > 0 && max_norm == 0.0 {
        return Err(Error::DegenerateRegression(
            "every dictionary feature vanishes on the data".into(),
        ));
    }
    let informative: Vec<usize> = (0..p)
        .filter(|&j| norms[j] > ZERO_COLUMN * max_norm.max(1.0) && norms[j] > 0.0)
        .collect();

    let mut expansion = Expansion::with_terms(x_dim, y_dim, out_dim, terms.to_vec());
    for r in 0..out_dim {
        let y = DVector::from_iterator(n, targets.iter().map(|t| t[r]));
        let mut active = informative.clone();
        let mut coeffs = vec![0.0; p];
        for _ in 0..MAX_PRUNE_ROUNDS {
            coeffs.iter_mut().for_each(|c| *c = 0.0);
            if active.is_empty() {
                break;
            }
            let sub = features.select_columns(active.iter());
            let sol = ridge_lstsq(&sub, &y, ridge)?;
            for (i, &j) in active.iter().enumerate() {
                coeffs[j] = sol[i];
            }
            let kept: Vec<usize> = active
                .iter()
                .copied()
                .filter(|&j| !(coeffs[j].abs() < threshold))
                .collect();
            if kept.len() == active.len() {
                break;
            }
            active = kept;
        }
        expansion.coefficients[r] = coeffs;
    }

    let mut sq = 0.0;
    for k in 0..n {
        let pred = expansion.eval(&xs[k], &ys[k]);
        sq += pred
            .iter()
            .zip(&targets[k])
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>();
    }
    let rms = if n == 0 { 0.0 } else { (sq / n as f64).sqrt() };
    Ok(Fit { expansion, rms })
}
