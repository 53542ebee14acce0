//! A posteriori segmentation of a game history into words, and the tests built on them.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::{ControlSignal, Trajectory};
use crate::error::{Error, Result};
use crate::filtration::{SignalSelector, SignalSet};
use crate::linalg::ridge_lstsq;

/// Breakpoint nodes `0 = t_0 < t_1 < ... < t_n = n_steps`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub breakpoints: Vec<usize>,
    pub min_len: usize,
}

impl Partition {
    pub fn new(breakpoints: Vec<usize>, min_len: usize, n_steps: usize) -> Result<Self> {
        let p = Self { breakpoints, min_len };
        p.validate(n_steps)?;
        Ok(p)
    }

    pub fn validate(&self, n_steps: usize) -> Result<()> {
        let b = &self.breakpoints;
        if b.len() < 2 || b[0] != 0 || *b.last().unwrap() != n_steps {
            return Err(Error::invalid(format!(
                "breakpoints must run from 0 to {n_steps}"
            )));
        }
        for (j, w) in b.windows(2).enumerate() {
            let last = j + 2 == b.len();
            // cost segments are half-open except the last, which keeps the end node
            let nodes = w[1].saturating_sub(w[0]) + usize::from(last);
            if w[1] <= w[0] || nodes < self.min_len {
                return Err(Error::invalid(format!(
                    "segment {j} ({}..{}) is empty or shorter than {} nodes",
                    w[0], w[1], self.min_len
                )));
            }
        }
        Ok(())
    }

    pub fn n_segments(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Closed node interval `[t_{j-1}, t_j]` of segment `j`.
    pub fn segment(&self, j: usize) -> (usize, usize) {
        (self.breakpoints[j], self.breakpoints[j + 1])
    }

    pub fn segments(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.breakpoints.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Prefix sums of a centered multi-component series, for O(1) segment costs.
struct CostTable {
    s1: Vec<Vec<f64>>,
    s2: Vec<Vec<f64>>,
}

impl CostTable {
    fn new(values: &[Vec<f64>]) -> Self {
        let n = values.len();
        let dim = values.first().map_or(0, Vec::len);
        let center: Vec<f64> = (0..dim)
            .map(|c| values.iter().map(|v| v[c]).sum::<f64>() / n as f64)
            .collect();
        let mut s1 = vec![vec![0.0; dim]; n + 1];
        let mut s2 = vec![vec![0.0; dim]; n + 1];
        for (k, v) in values.iter().enumerate() {
            for c in 0..dim {
                let x = v[c] - center[c];
                s1[k + 1][c] = s1[k][c] + x;
                s2[k + 1][c] = s2[k][c] + x * x;
            }
        }
        Self { s1, s2 }
    }

    /// Squared deviation from the mean over nodes `a..b`.
    fn cost(&self, a: usize, b: usize) -> f64 {
        let len = (b - a) as f64;
        self.s1[b]
            .iter()
            .zip(&self.s1[a])
            .zip(self.s2[b].iter().zip(&self.s2[a]))
            .map(|((s1b, s1a), (s2b, s2a))| {
                let s = s1b - s1a;
                (s2b - s2a - s * s / len).max(0.0)
            })
            .sum()
    }
}

/// Total within-segment squared deviation plus `penalty` per interior breakpoint.
pub fn partition_cost(driver: &ControlSignal, partition: &Partition, penalty: f64) -> Result<f64> {
    partition.validate(driver.grid.n_steps)?;
    let table = CostTable::new(&driver.values);
    let n_nodes = driver.values.len();
    let mut total = 0.0;
    for (j, (a, b)) in partition.segments().enumerate() {
        let end = if j + 1 == partition.n_segments() { n_nodes } else { b };
        total += table.cost(a, end);
    }
    let interior = partition.n_segments() - 1;
    Ok(total + if interior == 0 { 0.0 } else { penalty * interior as f64 })
}

/// Optimal change-point partition of the driver by dynamic programming.
pub fn segment_trajectory(
    traj: &Trajectory,
    driver: &ControlSignal,
    penalty: f64,
    min_len: usize,
) -> Result<Partition> {
    if driver.grid != traj.grid {
        return Err(Error::dims("driver must share the trajectory grid"));
    }
    if min_len < 2 {
        return Err(Error::invalid("minimum segment length must be at least 2"));
    }
    if !(penalty > 0.0) {
        return Err(Error::invalid("penalty must be positive"));
    }
    let n = driver.values.len();
    if n < 2 * min_len {
        return Err(Error::InsufficientData(format!(
            "{n} nodes are fewer than twice the minimum segment length {min_len}"
        )));
    }
    let table = CostTable::new(&driver.values);
    // best[b]: optimal cost of nodes 0..b with a breakpoint at b; prev[b]: the previous one
    let mut best = vec![f64::INFINITY; n + 1];
    let mut prev = vec![0usize; n + 1];
    best[0] = 0.0;
    for b in min_len..=n {
        let mut top = f64::INFINITY;
        let mut arg = 0;
        for a in (0..=b - min_len).filter(|&a| a == 0 || a >= min_len) {
            let head = if a == 0 { 0.0 } else { best[a] + penalty };
            let c = head + table.cost(a, b);
            if c < top {
                top = c;
                arg = a;
            }
        }
        best[b] = top;
        prev[b] = arg;
    }
    let mut breaks = vec![n];
    let mut b = n;
    while b > 0 {
        b = prev[b];
        breaks.push(b);
    }
    breaks.reverse();
    // the final segment owns the end node, so its breakpoint is n_steps
    *breaks.last_mut().unwrap() = driver.grid.n_steps;
    Partition::new(breaks, min_len, driver.grid.n_steps)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    Mean,
    Integral,
    Terminal,
    TotalVariation,
}

impl Recipe {
    fn apply(self, x: &[f64], dt: f64) -> f64 {
        match self {
            Recipe::Mean => x.iter().sum::<f64>() / x.len() as f64,
            Recipe::Integral => x.windows(2).map(|w| 0.5 * dt * (w[0] + w[1])).sum(),
            Recipe::Terminal => x[x.len() - 1],
            Recipe::TotalVariation => x.windows(2).map(|w| (w[1] - w[0]).abs()).sum(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordComponent {
    pub recipe: Recipe,
    pub input: SignalSelector,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentFunctionalSpec {
    pub outputs: Vec<WordComponent>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub codebook: Option<Vec<Vec<f64>>>,
}

impl SegmentFunctionalSpec {
    pub fn new(outputs: Vec<WordComponent>) -> Self {
        Self { outputs, codebook: None }
    }

    pub fn with_codebook(mut self, codebook: Vec<Vec<f64>>) -> Self {
        self.codebook = Some(codebook);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PictureTag {
    S,
    D,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Words {
    Continuous(Vec<Vec<f64>>),
    Quantized(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordSequence {
    pub words: Words,
    pub picture: PictureTag,
}

impl WordSequence {
    pub fn continuous(words: Vec<Vec<f64>>, picture: PictureTag) -> Self {
        Self { words: Words::Continuous(words), picture }
    }

    pub fn len(&self) -> usize {
        match &self.words {
            Words::Continuous(w) => w.len(),
            Words::Quantized(w) => w.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn as_continuous(&self) -> Option<&[Vec<f64>]> {
        match &self.words {
            Words::Continuous(w) => Some(w),
            Words::Quantized(_) => None,
        }
    }
}

/// Index of the nearest centroid; ties go to the lowest index.
pub fn nearest_centroid(codebook: &[Vec<f64>], x: &[f64]) -> Result<usize> {
    if codebook.is_empty() {
        return Err(Error::EmptyCodebook);
    }
    let mut best = (f64::INFINITY, 0);
    for (i, c) in codebook.iter().enumerate() {
        if c.len() != x.len() {
            return Err(Error::dims(format!(
                "centroid {i} has dimension {}, words have {}",
                c.len(),
                x.len()
            )));
        }
        let d: f64 = c.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    Ok(best.1)
}

/// Applies the word recipes on each closed segment `[t_{j-1}, t_j]`.
pub fn compute_words(
    spec: &SegmentFunctionalSpec,
    partition: &Partition,
    series: &SignalSet,
    picture: PictureTag,
) -> Result<WordSequence> {
    if spec.outputs.is_empty() {
        return Err(Error::invalid("word spec has no outputs"));
    }
    if matches!(&spec.codebook, Some(c) if c.is_empty()) {
        return Err(Error::EmptyCodebook);
    }
    partition.validate(series.grid.n_steps)?;
    let dt = series.grid.dt;
    let columns = spec
        .outputs
        .iter()
        .map(|o| Ok((o.recipe, series.columns(&o.input)?)))
        .collect::<Result<Vec<_>>>()?;
    let words: Vec<Vec<f64>> = partition
        .segments()
        .map(|(a, b)| {
            columns
                .iter()
                .flat_map(|(recipe, cols)| cols.iter().map(move |c| recipe.apply(&c[a..=b], dt)))
                .collect()
        })
        .collect();
    let words = match &spec.codebook {
        Some(book) => Words::Quantized(
            words
                .iter()
                .map(|w| nearest_centroid(book, w))
                .collect::<Result<_>>()?,
        ),
        None => Words::Continuous(words),
    };
    Ok(WordSequence { words, picture })
}

/// `(mean of phi over the segment, segment duration)` per segment.
pub fn segment_state_features(traj: &Trajectory, partition: &Partition) -> Result<Vec<Vec<f64>>> {
    partition.validate(traj.grid.n_steps)?;
    let d = traj.state_dim();
    Ok(partition
        .segments()
        .map(|(a, b)| {
            let len = (b - a + 1) as f64;
            let mut f: Vec<f64> = (0..d)
                .map(|i| traj.states[a..=b].iter().map(|x| x[i]).sum::<f64>() / len)
                .collect();
            f.push((b - a) as f64 * traj.grid.dt);
            f
        })
        .collect())
}

/// Affine word recursion `w_n = A w_{n-1} + B u*_n + C s_n + c`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecursionModel {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
    pub offset: Vec<f64>,
    /// Euclidean fit residual of segments `1..n` (the first segment has no predecessor).
    pub residuals: Vec<f64>,
    pub tolerance: f64,
    pub verbalizable: bool,
}

impl RecursionModel {
    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    pub fn predict(&self, prev: &[f64], tactic: &[f64], features: &[f64]) -> Vec<f64> {
        let dot = |row: &[f64], x: &[f64]| row.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        (0..self.offset.len())
            .map(|r| {
                dot(&self.a[r], prev) + dot(&self.b[r], tactic) + dot(&self.c[r], features)
                    + self.offset[r]
            })
            .collect()
    }
}

fn uniform_dim(rows: &[Vec<f64>], what: &str) -> Result<usize> {
    let dim = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::dims(format!("{what} change dimension between segments")));
    }
    Ok(dim)
}

pub fn fit_recursion(
    words: &WordSequence,
    tactics: &WordSequence,
    state_features: &[Vec<f64>],
    ridge: f64,
    tolerance: f64,
) -> Result<RecursionModel> {
    let (Some(w), Some(u)) = (words.as_continuous(), tactics.as_continuous()) else {
        return Err(Error::invalid("the recursion is fitted on continuous words"));
    };
    if w.len() != u.len() || w.len() != state_features.len() {
        return Err(Error::LengthMismatch(format!(
            "{} words, {} tactics, {} feature rows",
            w.len(),
            u.len(),
            state_features.len()
        )));
    }
    if w.len() < 2 {
        return Err(Error::InsufficientData(
            "the recursion needs at least two segments".into(),
        ));
    }
    if !(ridge >= 0.0) || !(tolerance >= 0.0) {
        return Err(Error::invalid("ridge and tolerance must be >= 0"));
    }
    let (dw, du, ds) = (
        uniform_dim(w, "words")?,
        uniform_dim(u, "tactics")?,
        uniform_dim(state_features, "state features")?,
    );
    let p = dw + du + ds + 1;
    let rows = w.len() - 1;
    let x = DMatrix::from_fn(rows, p, |i, j| {
        let n = i + 1;
        if j < dw {
            w[n - 1][j]
        } else if j < dw + du {
            u[n][j - dw]
        } else if j < dw + du + ds {
            state_features[n][j - dw - du]
        } else {
            1.0
        }
    });
    let mut coef = vec![vec![0.0; p]; dw];
    for (r, row) in coef.iter_mut().enumerate() {
        let y = DVector::from_iterator(rows, (1..w.len()).map(|n| w[n][r]));
        row.copy_from_slice(ridge_lstsq(&x, &y, ridge)?.as_slice());
    }
    let mut model = RecursionModel {
        a: coef.iter().map(|r| r[..dw].to_vec()).collect(),
        b: coef.iter().map(|r| r[dw..dw + du].to_vec()).collect(),
        c: coef.iter().map(|r| r[dw + du..dw + du + ds].to_vec()).collect(),
        offset: coef.iter().map(|r| r[p - 1]).collect(),
        residuals: Vec::with_capacity(rows),
        tolerance,
        verbalizable: false,
    };
    for n in 1..w.len() {
        let pred = model.predict(&w[n - 1], &u[n], &state_features[n]);
        let e: f64 = pred.iter().zip(&w[n]).map(|(a, b)| (a - b) * (a - b)).sum();
        model.residuals.push(e.sqrt());
    }
    model.verbalizable = model.max_residual() <= tolerance;
    Ok(model)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Synlinguism {
    pub synlinguistic: bool,
    pub first_mismatch: Option<usize>,
    /// Largest absolute component difference per segment (0 or 1 for codes).
    pub deviations: Vec<f64>,
}

pub fn check_synlinguism(
    words_s: &WordSequence,
    words_d: &WordSequence,
    tolerance: f64,
) -> Result<Synlinguism> {
    if words_s.len() != words_d.len() {
        return Err(Error::LengthMismatch(format!(
            "{} vs {} segments",
            words_s.len(),
            words_d.len()
        )));
    }
    if !(tolerance >= 0.0) {
        return Err(Error::invalid("tolerance must be >= 0"));
    }
    let (deviations, tol) = match (&words_s.words, &words_d.words) {
        (Words::Continuous(a), Words::Continuous(b)) => {
            let dev = a
                .iter()
                .zip(b)
                .enumerate()
                .map(|(j, (x, y))| {
                    if x.len() != y.len() {
                        return Err(Error::LengthMismatch(format!(
                            "segment {j}: word dimensions {} vs {}",
                            x.len(),
                            y.len()
                        )));
                    }
                    Ok(x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max))
                })
                .collect::<Result<Vec<f64>>>()?;
            (dev, tolerance)
        }
        (Words::Quantized(a), Words::Quantized(b)) => (
            a.iter().zip(b).map(|(x, y)| if x == y { 0.0 } else { 1.0 }).collect(),
            0.0,
        ),
        _ => return Err(Error::MixedRepresentation),
    };
    // NaN deviations count as mismatches
    let first_mismatch = deviations.iter().position(|d| !(*d <= tol));
    Ok(Synlinguism {
        synlinguistic: first_mismatch.is_none(),
        first_mismatch,
        deviations,
    })
}
