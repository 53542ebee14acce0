//! Small dense least-squares helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for pseudo-inverse solves.
const RCOND: f64 = 1e-13;

/// Minimizes `(1/n)|X c - y|^2 + ridge |c|^2` (minimum-norm when rank deficient).
pub(crate) fn ridge_lstsq(x: &DMatrix<f64>, y: &DVector<f64>, ridge: f64) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    if p == 0 {
        return Ok(DVector::zeros(0));
    }
    let (a, b) = if ridge > 0.0 {
        let s = (ridge * n as f64).sqrt();
        let mut a = DMatrix::zeros(n + p, p);
        a.view_mut((0, 0), (n, p)).copy_from(x);
        for j in 0..p {
            a[(n + j, j)] = s;
        }
        let mut b = DVector::zeros(n + p);
        b.rows_mut(0, n).copy_from(y);
        (a, b)
    } else {
        (x.clone(), y.clone())
    };
    let svd = a.svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Ok(DVector::zeros(p));
    }
    svd.solve(&b, RCOND * smax)
        .map_err(|e| Error::DegenerateRegression(e.to_string()))
}

pub(crate) fn column_norms(x: &DMatrix<f64>) -> Vec<f64> {
    (0..x.ncols()).map(|j| x.column(j).norm()).collect()
}

/// Ordinary least-squares straight line through `(t, v)`; returns `(intercept at t_ref, slope)`.
pub(crate) fn linear_trend(t: &[f64], v: &[f64], t_ref: f64) -> (f64, f64) {
    let n = t.len() as f64;
    if t.len() < 2 {
        return (v.first().copied().unwrap_or(0.0), 0.0);
    }
    let tm = t.iter().sum::<f64>() / n;
    let vm = v.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (ti, vi) in t.iter().zip(v) {
        sxx += (ti - tm) * (ti - tm);
        sxy += (ti - tm) * (vi - vm);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (vm + slope * (t_ref - tm), slope)
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution_recovered() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0, 3.0]);
        let y = DVector::from_vec(vec![1.0, 3.0, 5.0, 7.0]);
        let c = ridge_lstsq(&x, &y, 0.0).unwrap();
        assert!((c[0] - 1.0).abs() < 1e-12 && (c[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ridge_shrinks() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0]);
        let y = DVector::from_vec(vec![2.0, 2.0, 2.0]);
        let c = ridge_lstsq(&x, &y, 1.0).unwrap();
        // (1/3)*3(c-2)^2 + c^2 -> c = 1
        assert!((c[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn trend_of_line() {
        let t = [0.0, 1.0, 2.0];
        let v = [1.0, 3.0, 5.0];
        let (a, b) = linear_trend(&t, &v, 3.0);
        assert!((a - 7.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }
}
